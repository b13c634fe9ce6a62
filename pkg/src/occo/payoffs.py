"""Convex-concave payoff functions, predictors, and the quadratic saddle
family used by the experiments.

Payoffs map a scalar pair ``(x, y)`` to a real value; they carry subgradient
oracles (``grad_x`` for the function, ``grad_y_neg`` for its negation in y)
plus bound metadata. The quadratic family and its mixtures additionally
expose an exact quadratic-plus-affine decomposition, which gives closed
forms for proximal steps, predictor distances, and the coupled-update
solver's fast path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, InputError
from .geometry import BoxDomain


@dataclass(frozen=True)
class PayoffBounds:
    """Uniform bounds on the payoff and its partial subgradients."""

    M: float
    G_X: float
    G_Y: float


@dataclass(frozen=True)
class Smoothness:
    """Lipschitz constants of the partial gradients (x-by-x, x-by-y, ...)."""

    L_xx: float
    L_xy: float
    L_yx: float
    L_yy: float


class PayoffFunction:
    """Base convex-concave payoff.

    Subclasses implement ``value``, ``grad_x`` and ``grad_y_neg``; the base
    class provides the optional quadratic decomposition hook used by exact
    fast paths (returns None when the payoff is not in the family).
    """

    bounds: PayoffBounds
    smoothness: Optional[Smoothness]

    def value(self, x: float, y: float) -> float:
        raise NotImplementedError

    def grad_x(self, x: float, y: float) -> float:
        raise NotImplementedError

    def grad_y_neg(self, x: float, y: float) -> float:
        raise NotImplementedError

    def quad_affine(self) -> Optional[tuple[float, float, float, float]]:
        """Decomposition ``f(x,y) = s*(x^2/2 - y^2/2 + x*y) + lx*x + ly*y + c``.

        Returns (s, lx, ly, c), or None if the payoff is outside the family.
        Any two payoffs sharing the same ``s`` differ by an affine function.
        """
        return None


# Experiment-wide metadata for the quadratic saddle family on [-1,1]^2 with
# centers bounded by 1: worst-case payoff 9/2, gradient bound 4, unit
# gradient-Lipschitz constants.
_QUAD_BOUNDS = PayoffBounds(M=4.5, G_X=4.0, G_Y=4.0)
_QUAD_SMOOTHNESS = Smoothness(1.0, 1.0, 1.0, 1.0)


class QuadraticSaddle(PayoffFunction):
    """``f(x,y) = (x-a)^2/2 - (y-b)^2/2 + (x-a)(y-b)`` with saddle point (a, b)."""

    __slots__ = ("a", "b")
    bounds = _QUAD_BOUNDS
    smoothness = _QUAD_SMOOTHNESS

    def __init__(self, center_x: float, center_y: float):
        self.a = float(center_x)
        self.b = float(center_y)

    def value(self, x: float, y: float) -> float:
        u = x - self.a
        v = y - self.b
        return 0.5 * u * u - 0.5 * v * v + u * v

    def grad_x(self, x: float, y: float) -> float:
        return (x - self.a) + (y - self.b)

    def grad_y_neg(self, x: float, y: float) -> float:
        return (y - self.b) - (x - self.a)

    def quad_affine(self):
        a, b = self.a, self.b
        return (1.0, -(a + b), b - a, 0.5 * a * a - 0.5 * b * b + a * b)

    def __repr__(self):
        return f"QuadraticSaddle({self.a}, {self.b})"


class ZeroPayoff(PayoffFunction):
    """Identically zero payoff; the warm-up stand-in for missing predictors."""

    __slots__ = ()
    bounds = PayoffBounds(0.0, 0.0, 0.0)
    smoothness = Smoothness(0.0, 0.0, 0.0, 0.0)

    def value(self, x: float, y: float) -> float:
        return 0.0

    def grad_x(self, x: float, y: float) -> float:
        return 0.0

    def grad_y_neg(self, x: float, y: float) -> float:
        return 0.0

    def quad_affine(self):
        return (0.0, 0.0, 0.0, 0.0)

    def __repr__(self):
        return "ZeroPayoff()"


class CallablePayoff(PayoffFunction):
    """Payoff assembled from explicit callables (test instrumentation and
    ad-hoc convex-concave functions such as bilinear couplings)."""

    def __init__(
        self,
        value: Callable[[float, float], float],
        grad_x: Callable[[float, float], float],
        grad_y_neg: Callable[[float, float], float],
        bounds: PayoffBounds,
        smoothness: Optional[Smoothness] = None,
    ):
        self._value = value
        self._grad_x = grad_x
        self._grad_y_neg = grad_y_neg
        self.bounds = bounds
        self.smoothness = smoothness

    def value(self, x, y):
        return self._value(x, y)

    def grad_x(self, x, y):
        return self._grad_x(x, y)

    def grad_y_neg(self, x, y):
        return self._grad_y_neg(x, y)


class MixturePayoff(PayoffFunction):
    """Convex combination of payoffs; the aggregator's combined predictor.

    Values and gradients are the weight-linear combinations of the
    components', so convexity-concavity and the bound metadata (weighted,
    hence component-max) are preserved.
    """

    def __init__(self, components: Sequence[PayoffFunction], weights: np.ndarray):
        weights = np.asarray(weights, dtype=float)
        if len(components) != weights.size or len(components) == 0:
            raise InputError("components and weights must be nonempty and match")
        if np.any(weights < -1e-12) or abs(float(weights.sum()) - 1.0) > 1e-9:
            raise InputError("weights must form a distribution")
        self.components = tuple(components)
        self.weights = weights
        self.bounds = PayoffBounds(
            M=max(c.bounds.M for c in components),
            G_X=max(c.bounds.G_X for c in components),
            G_Y=max(c.bounds.G_Y for c in components),
        )
        smooth = [c.smoothness for c in components]
        if all(s is not None for s in smooth):
            self.smoothness = Smoothness(
                max(s.L_xx for s in smooth),
                max(s.L_xy for s in smooth),
                max(s.L_yx for s in smooth),
                max(s.L_yy for s in smooth),
            )
        else:
            self.smoothness = None
        self._qa = self._mix_quad_affine()

    def _mix_quad_affine(self):
        s = lx = ly = c = 0.0
        for comp, wk in zip(self.components, self.weights):
            qa = comp.quad_affine()
            if qa is None:
                return None
            s += wk * qa[0]
            lx += wk * qa[1]
            ly += wk * qa[2]
            c += wk * qa[3]
        return (s, lx, ly, c)

    def value(self, x, y):
        return sum(wk * comp.value(x, y) for comp, wk in zip(self.components, self.weights))

    def grad_x(self, x, y):
        return sum(wk * comp.grad_x(x, y) for comp, wk in zip(self.components, self.weights))

    def grad_y_neg(self, x, y):
        return sum(
            wk * comp.grad_y_neg(x, y) for comp, wk in zip(self.components, self.weights)
        )

    def quad_affine(self):
        return self._qa


def _check_in(dom: Optional[BoxDomain], p: float, label: str) -> None:
    if dom is not None and not dom.contains(np.atleast_1d(p), tol=1e-12):
        raise InputError(f"{label}={p} outside its domain")


def eval_payoff(
    f: PayoffFunction,
    x: float,
    y: float,
    X: Optional[BoxDomain] = None,
    Y: Optional[BoxDomain] = None,
) -> float:
    """Evaluate f(x, y), optionally enforcing domain membership."""
    _check_in(X, x, "x")
    _check_in(Y, y, "y")
    return f.value(x, y)


def saddle_gradients(
    f: PayoffFunction,
    x: float,
    y: float,
    X: Optional[BoxDomain] = None,
    Y: Optional[BoxDomain] = None,
) -> tuple[float, float]:
    """Return ``(grad_x f, grad_y (-f))`` at (x, y)."""
    _check_in(X, x, "x")
    _check_in(Y, y, "y")
    return f.grad_x(x, y), f.grad_y_neg(x, y)


def rho_distance(
    f: PayoffFunction,
    h: PayoffFunction,
    X: BoxDomain,
    Y: BoxDomain,
    grid: int = 401,
) -> float:
    """Sup-norm distance ``max_{X x Y} |f - h|`` between two payoffs.

    When both payoffs expose the quadratic decomposition with the same
    quadratic scale, the difference is affine and the maximum is attained at
    a box corner; that closed form is returned exactly. Otherwise the value
    is a grid-search estimate on a ``grid x grid`` lattice (scalar domains
    only) and carries the lattice's resolution error.
    """
    qf, qh = f.quad_affine(), h.quad_affine()
    if qf is not None and qh is not None and qf[0] == qh[0]:
        _, lxf, lyf, cf = qf
        _, lxh, lyh, ch = qh
        dlx, dly, dc = lxf - lxh, lyf - lyh, cf - ch
        cx, cy = X.center(), Y.center()
        mid = dc + dlx * float(cx[0]) + dly * float(cy[0])
        span = abs(dlx) * 0.5 * float(X.upper[0] - X.lower[0]) + abs(dly) * 0.5 * float(
            Y.upper[0] - Y.lower[0]
        )
        return abs(mid) + span
    if X.dim != 1 or Y.dim != 1:
        raise InputError("grid estimate supports scalar domains only")
    xs = np.linspace(float(X.lower[0]), float(X.upper[0]), grid)
    ys = np.linspace(float(Y.lower[0]), float(Y.upper[0]), grid)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    diff = np.abs(
        np.vectorize(f.value)(xg, yg) - np.vectorize(h.value)(xg, yg)
    )
    return float(diff.max())


def loss_vector(
    f: PayoffFunction,
    bank: Sequence[PayoffFunction],
    probes_x: Sequence[float],
    probes_y: Sequence[float],
) -> np.ndarray:
    """Per-predictor probe error ``L^k = max over the probe grid |f - h^k|``.

    The probe grid is the 3x3 product of the round's x-side points
    (decision, adaptive, next anchor) with the y-side ones, so each entry
    lower-bounds the predictor's sup-norm distance to f.
    """
    if len(bank) == 0:
        raise InputError("predictor bank is empty")
    fvals = [[f.value(x, y) for y in probes_y] for x in probes_x]
    out = np.empty(len(bank))
    for k, h in enumerate(bank):
        worst = 0.0
        for i, x in enumerate(probes_x):
            for j, y in enumerate(probes_y):
                err = abs(fvals[i][j] - h.value(x, y))
                if err > worst:
                    worst = err
        out[k] = worst
    return out


def delayed_predictor_bank(
    history: Sequence[PayoffFunction], delays: Sequence[int], t: int
) -> list[PayoffFunction]:
    """Predictors ``h^j = f_{t - delay_j}``, zero-filled before history exists.

    ``history[i]`` holds the payoff of round ``i+1``. Rounds with
    ``t - delay < 1`` get the zero payoff, which satisfies every payoff
    assumption with all constants zero.
    """
    if any(d < 1 for d in delays):
        raise InputError("delays must be positive")
    bank: list[PayoffFunction] = []
    for d in delays:
        idx = t - d
        bank.append(history[idx - 1] if idx >= 1 else ZeroPayoff())
    return bank


def finite_difference_gradients(
    f: PayoffFunction, x: float, y: float, step: float = 1e-6
) -> tuple[float, float]:
    """Central finite differences of (f, -f) for gradient consistency checks."""
    gx = (f.value(x + step, y) - f.value(x - step, y)) / (2 * step)
    gyn = -(f.value(x, y + step) - f.value(x, y - step)) / (2 * step)
    return gx, gyn
