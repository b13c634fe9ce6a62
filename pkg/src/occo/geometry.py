"""Mirror-map primitives: box projections, Fenchel couplings, KL divergence,
and clipped-simplex operations.

Two regularizers are supported, matching the two geometries the learners run
in: the Euclidean half-squared norm on box domains and negative entropy on
clipped probability simplices. All operations are pure functions; nothing
here holds mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

EUCLIDEAN = "euclidean-half-squared"
NEG_ENTROPY = "negative-entropy"


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``{p : lower <= p <= upper}`` in R^n.

    Boxes admit a closed-form Euclidean projection (coordinate-wise clamp),
    which the coupled-update solver relies on.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise InputError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("box bounds must be finite")
        if np.any(lo > hi):
            raise InputError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def diameter(self) -> float:
        """Euclidean norm of (upper - lower)."""
        return float(np.linalg.norm(self.upper - self.lower))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, p: np.ndarray, tol: float = 0.0) -> bool:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != self.lower.shape:
            return False
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))


def interval(lo: float, hi: float) -> BoxDomain:
    """One-dimensional box [lo, hi]."""
    return BoxDomain(np.array([lo]), np.array([hi]))


@dataclass(frozen=True)
class MirrorPoint:
    """A primal point tagged with the regularizer whose geometry it lives in.

    For the Euclidean regularizer phi(x) = ||x||^2/2 the dual anchor equals
    the primal, so only the primal is stored. Negative-entropy points are
    members of a (clipped) simplex and must be strictly positive.
    """

    primal: np.ndarray
    regularizer: str = EUCLIDEAN

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.primal, dtype=float))
        if self.regularizer not in (EUCLIDEAN, NEG_ENTROPY):
            raise InputError(f"unknown regularizer tag: {self.regularizer!r}")
        if self.regularizer == NEG_ENTROPY:
            if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
                raise DomainError("negative-entropy point must be a distribution")
        object.__setattr__(self, "primal", p)


@dataclass(frozen=True)
class ClippedSimplex:
    """Probability vectors in R^d with every coordinate at least ``alpha/d``."""

    dim: int
    alpha: float

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("simplex dimension must be positive")
        if not (0.0 < self.alpha <= 1.0):
            raise InputError("clipping coefficient must lie in (0, 1]")

    @property
    def floor(self) -> float:
        return self.alpha / self.dim

    def contains(self, w: np.ndarray, tol: float = 1e-12) -> bool:
        w = np.asarray(w, dtype=float)
        return (
            w.size == self.dim
            and bool(np.all(w >= self.floor - tol))
            and abs(float(w.sum()) - 1.0) <= tol
        )


def project_box(p: np.ndarray, dom: BoxDomain) -> np.ndarray:
    """Nearest point of the box in Euclidean norm (coordinate-wise clamp)."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != dom.lower.shape:
        raise InputError(f"point shape {p.shape} does not match box {dom.lower.shape}")
    return np.minimum(np.maximum(p, dom.lower), dom.upper)


def kl_divergence(a: np.ndarray, b: np.ndarray) -> float:
    """KL(a, b) = sum a_i log(a_i / b_i), with the 0 log 0 = 0 convention.

    Raises
    ------
    DomainError
        If some coordinate has a_i > 0 but b_i <= 0.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise InputError("distributions must share a dimension")
    if np.any(a < 0):
        raise DomainError("first argument has negative coordinates")
    pos = a > 0
    if np.any(b[pos] <= 0):
        raise DomainError("second argument vanishes where the first is positive")
    return float(np.sum(a[pos] * np.log(a[pos] / b[pos])))


def bregman(reg: str, p: np.ndarray, anchor: MirrorPoint) -> float:
    """Fenchel coupling B(p, anchor) for the given regularizer.

    Euclidean half-squared norm gives ||p - anchor||^2 / 2; negative entropy
    gives KL(p, anchor). Nonnegative, zero iff p equals the anchor's primal.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = anchor.primal
    if p.shape != q.shape:
        raise InputError("point and anchor dimensions differ")
    if reg == EUCLIDEAN:
        d = p - q
        return 0.5 * float(d @ d)
    if reg == NEG_ENTROPY:
        if np.any(q <= 0):
            raise DomainError("entropy anchor must be strictly positive")
        return kl_divergence(p, q)
    raise InputError(f"unknown regularizer tag: {reg!r}")


def project_clipped_simplex_kl(q: np.ndarray, cs: ClippedSimplex) -> np.ndarray:
    """KL projection of (the normalization of) a positive vector onto a
    clipped simplex.

    Solves ``argmin_{w in simplex, w_i >= floor} KL(w, q / ||q||_1)``. By the
    KKT conditions the solution pins every coordinate whose proportional
    share falls below the floor and redistributes the leftover mass over the
    rest proportionally to q. Pinning only shrinks the shared scale, so the
    pinned set grows monotonically and at most ``dim`` passes are needed.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.size != cs.dim:
        raise InputError(f"vector has dimension {q.size}, simplex expects {cs.dim}")
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise DomainError("input vector must be strictly positive and finite")
    floor = cs.floor
    p = q / float(q.sum())
    pinned = np.zeros(cs.dim, dtype=bool)
    for _ in range(cs.dim):
        free_mass = 1.0 - floor * pinned.sum()
        scale = free_mass / float(p[~pinned].sum())
        newly = (~pinned) & (scale * p < floor)
        if not newly.any():
            break
        pinned |= newly
    w = np.where(pinned, floor, scale * p)
    return w


def hedge_step(
    w: np.ndarray, loss: np.ndarray, rate: float, cs: ClippedSimplex
) -> np.ndarray:
    """Exponentiated-weights step followed by KL projection onto the clipped
    simplex.

    Computes ``project_clipped_simplex_kl(w * exp(-rate * loss), cs)``. The
    losses are shifted by their minimum before exponentiating; the shift
    cancels inside the projection, which makes the update exactly invariant
    under adding a constant to every loss coordinate and avoids underflow.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    loss = np.atleast_1d(np.asarray(loss, dtype=float))
    if w.shape != loss.shape:
        raise InputError("weights and losses must share a dimension")
    if w.size != cs.dim:
        raise InputError(f"weights have dimension {w.size}, simplex expects {cs.dim}")
    shifted = loss - loss.min()
    return project_clipped_simplex_kl(w * np.exp(-rate * shifted), cs)
