"""Coupled-update solver: the four-block operator over K = X x Y x [1/T, 1-1/T]^2,
its Lipschitz constant, certified dual extrapolation, and a fast damped
best-response path for production runs.

The joint decision of the interdependent update is the unique point v* in K
with ``<G(v*), v - v*> >= 0`` for all v in K, where G stacks the four
players' partial gradients. Two solution paths are provided:

* ``dual_extrapolation_solve`` -- the certified method with per-iteration
  error bound ``||G(y_0)|| * (L/(L+1))^(k/2)``; its cost scales with L, which
  grows linearly in the horizon, so it is the reference for small instances
  and the cross-check oracle.
* ``fixed_point_solve`` -- damped block best response. For the quadratic
  payoff family the (x, y) sub-block is solved exactly each sweep (a 2x2
  linear variational inequality on a box, solved by KKT case enumeration)
  and only the two weight coordinates iterate; a vectorized grid-refinement
  fallback guarantees termination if the outer iteration stalls. Residual
  nonnegativity downstream needs per-block optimality at the returned point,
  which this path preserves by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InputError
from .geometry import BoxDomain
from .payoffs import PayoffFunction

Operator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class JointVector:
    """The 4-block decision (x, y, w, omega) of the coupled system."""

    x: float
    y: float
    w: float
    omega: float

    def flat(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.omega])

    @staticmethod
    def from_flat(v: np.ndarray) -> "JointVector":
        return JointVector(float(v[0]), float(v[1]), float(v[2]), float(v[3]))

    def norm(self) -> float:
        return math.sqrt(
            self.x * self.x + self.y * self.y + self.w * self.w + self.omega * self.omega
        )


@dataclass(frozen=True)
class ProductBox:
    """Axis-aligned constraint product with closed-form projection."""

    lower: np.ndarray
    upper: np.ndarray

    def project(self, v: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(v, self.lower), self.upper)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def sample(self, gen: np.random.Generator, n: int = 1) -> np.ndarray:
        u = gen.random((n, self.lower.size))
        return self.lower + u * (self.upper - self.lower)


@dataclass(frozen=True)
class OperatorContext:
    """Everything the round's coupled system depends on.

    Anchors are the mirror-step anchors of the expert layer (Euclidean
    geometry, so the primal doubles as the dual) and the heads of the
    two-point weight anchors (clipped simplex with floor 1/T). ``x_bar`` and
    ``y_bar`` are the adaptive side-strategies, and the four rates are the
    current round's learning rates.
    """

    h: PayoffFunction
    X: BoxDomain
    Y: BoxDomain
    x_anchor: float
    y_anchor: float
    w_anchor: float
    omega_anchor: float
    x_bar: float
    y_bar: float
    eta: float
    gamma: float
    theta: float
    vartheta: float
    T: int

    def __post_init__(self):
        if min(self.eta, self.gamma, self.theta, self.vartheta) <= 0:
            raise InputError("all rates must be strictly positive")
        if self.T < 2:
            raise InputError("horizon must be at least 2")
        lo, hi = 1.0 / self.T, 1.0 - 1.0 / self.T
        for name, val in (("w_anchor", self.w_anchor), ("omega_anchor", self.omega_anchor)):
            if not (lo - 1e-12 <= val <= hi + 1e-12):
                raise InputError(f"{name}={val} outside [{lo}, {hi}]")


def joint_constraints(ctx: OperatorContext) -> ProductBox:
    """The feasible product K = X x Y x [1/T, 1-1/T]^2 as flat bounds."""
    lo, hi = 1.0 / ctx.T, 1.0 - 1.0 / ctx.T
    return ProductBox(
        lower=np.array([float(ctx.X.lower[0]), float(ctx.Y.lower[0]), lo, lo]),
        upper=np.array([float(ctx.X.upper[0]), float(ctx.Y.upper[0]), hi, hi]),
    )


def _xy_blocks(ctx: OperatorContext, x, y, w, omega):
    """First two operator blocks; valid for any (w, omega), scalar or array."""
    h = ctx.h
    gx = (
        ctx.eta * (omega * h.grad_x(x, y) + (1.0 - omega) * h.grad_x(x, ctx.y_bar))
        + x
        - ctx.x_anchor
    )
    gy = (
        ctx.gamma * (w * h.grad_y_neg(x, y) + (1.0 - w) * h.grad_y_neg(ctx.x_bar, y))
        + y
        - ctx.y_anchor
    )
    return gx, gy


def operator_g(ctx: OperatorContext, v) -> np.ndarray:
    """Evaluate the four-block operator at ``v`` (flat array or JointVector).

    Blocks: the x- and y-players' regularized partial gradients, then the
    weight blocks pairing payoff-value differences with the logit terms of
    the KL proximities. Accepts batched input of shape (n, 4).

    Raises
    ------
    DomainError
        If w or omega touches 0 or 1 (logit singularity); the clipped
        interval [1/T, 1-1/T] keeps feasible points away from it.
    """
    if isinstance(v, JointVector):
        v = v.flat()
    v = np.asarray(v, dtype=float)
    batched = v.ndim == 2
    x, y, w, om = (v[..., 0], v[..., 1], v[..., 2], v[..., 3])
    if np.any(w <= 0) or np.any(w >= 1) or np.any(om <= 0) or np.any(om >= 1):
        raise DomainError("w and omega must lie strictly inside (0, 1)")
    h = ctx.h
    gx, gy = _xy_blocks(ctx, x, y, w, om)
    hxy = h.value(x, y)
    hxby = h.value(ctx.x_bar, y)
    hxyb = h.value(x, ctx.y_bar)
    hbb = h.value(ctx.x_bar, ctx.y_bar)
    wt, ot = ctx.w_anchor, ctx.omega_anchor
    gw = ctx.theta * (om * (hxy - hxby) + (1.0 - om) * (hxyb - hbb)) + np.log(
        w * (1.0 - wt) / (wt * (1.0 - w))
    )
    go = ctx.vartheta * (w * (hxyb - hxy) + (1.0 - w) * (hbb - hxby)) + np.log(
        om * (1.0 - ot) / (ot * (1.0 - om))
    )
    out = np.stack([gx, gy, gw, go], axis=-1)
    return out if batched else out.reshape(4)


def make_operator(ctx: OperatorContext) -> Operator:
    return lambda v: operator_g(ctx, v)


@dataclass(frozen=True)
class OperatorConstants:
    """Problem constants feeding the Lipschitz bound of the operator."""

    G_X: float
    G_Y: float
    D_X: float
    D_Y: float
    L_xx: float
    L_xy: float
    L_yx: float
    L_yy: float
    L_phi: float = 1.0
    L_psi: float = 1.0


def constants_for(
    h: PayoffFunction, X: BoxDomain, Y: BoxDomain, L_phi: float = 1.0, L_psi: float = 1.0
) -> OperatorConstants:
    """Assemble operator constants from payoff metadata and domain diameters."""
    if h.smoothness is None:
        raise InputError("payoff carries no gradient-Lipschitz metadata")
    s = h.smoothness
    return OperatorConstants(
        G_X=h.bounds.G_X,
        G_Y=h.bounds.G_Y,
        D_X=X.diameter(),
        D_Y=Y.diameter(),
        L_xx=s.L_xx,
        L_xy=s.L_xy,
        L_yx=s.L_yx,
        L_yy=s.L_yy,
        L_phi=L_phi,
        L_psi=L_psi,
    )


def lipschitz_bound(ctx: OperatorContext, consts: OperatorConstants) -> float:
    """Upper bound L on the operator's Lipschitz constant over K.

    ``L = sqrt(max{C_x, C_y, C_w, C_omega})`` with the four block constants
    combining the rates, the predictor's gradient-Lipschitz constants, the
    gradient bounds, the domain diameters and the logit derivative bound T.
    """
    c = consts
    eta, gam, th, vt, T = ctx.eta, ctx.gamma, ctx.theta, ctx.vartheta, ctx.T
    C = (
        min(
            c.D_X**2 * (c.L_xx * c.D_X + c.L_xy * c.D_Y) ** 2,
            c.D_Y**2 * (c.L_yx * c.D_X + c.L_yy * c.D_Y) ** 2,
        )
        + T**2
    )
    C_x = 4.0 * ((eta * c.L_xx + c.L_phi) ** 2 + gam**2 * c.L_yx**2 + (th**2 + 4 * vt**2) * c.G_X**2)
    C_y = 4.0 * ((gam * c.L_yy + c.L_psi) ** 2 + th**2 * c.L_xy**2 + (vt**2 + 4 * th**2) * c.G_Y**2)
    C_w = 2.0 * gam**2 * c.L_yx**2 * c.D_X**2 + 4.0 * vt**2 * C
    C_om = 2.0 * eta**2 * c.L_xy**2 * c.D_Y**2 + 4.0 * th**2 * C
    return math.sqrt(max(C_x, C_y, C_w, C_om))


@dataclass
class DualExtrapResult:
    point: np.ndarray
    iterations: int
    certificate: float
    certified: bool


def dual_extrapolation_solve(
    operator: Operator,
    K: ProductBox,
    L: float,
    tol: float = 1e-9,
    max_iter: int = 500_000,
    on_iterate: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> DualExtrapResult:
    """Certified solve of a strongly monotone VI by dual extrapolation.

    Starting from the domain center with unit initial weight, each round
    projects the weighted dual aggregate, takes the L-prox step, and extends
    the weight sequence by ``lambda_{k+1} = (sum lambda_i)/L``. After k
    rounds the weighted average of the prox points is within
    ``||G(y_0)|| * (L/(L+1))^(k/2)`` of the solution; iteration stops when
    that certificate drops below ``tol`` (returned flag ``certified``) or at
    ``max_iter`` (``certified=False``, best average returned).

    ``on_iterate(k, running_average, certificate)`` is invoked once per
    round when supplied, for convergence-curve instrumentation.
    """
    if L <= 0:
        raise InputError("Lipschitz constant must be positive")
    y0 = K.center()
    g0 = np.asarray(operator(y0), dtype=float)
    g0_norm = float(np.linalg.norm(g0))
    sum_y = y0.copy()
    sum_g = g0.copy()
    total = 1.0
    decay = L / (L + 1.0)
    cert = g0_norm
    k = 0
    certified = cert <= tol
    while not certified and k < max_iter:
        xk = K.project((sum_y - sum_g) / total)
        gx = np.asarray(operator(xk), dtype=float)
        yk = K.project(xk - gx / L)
        lam = total / L
        sum_y += lam * yk
        sum_g += lam * np.asarray(operator(yk), dtype=float)
        total += lam
        k += 1
        cert = g0_norm * decay ** (0.5 * k)
        if on_iterate is not None:
            on_iterate(k, sum_y / total, cert)
        if cert <= tol:
            certified = True
        if total > 1e250:  # rescale the weight sequence; ratios are unaffected
            sum_y *= 1e-200
            sum_g *= 1e-200
            total *= 1e-200
    return DualExtrapResult(
        point=sum_y / total, iterations=k, certificate=cert, certified=certified
    )


def vi_residual_sample(
    operator: Operator,
    K: ProductBox,
    v: np.ndarray,
    n_samples: int = 1000,
    seed: int = 0,
) -> float:
    """Sampled VI residual ``max_z <G(v), v - z>`` over random z in K."""
    gen = np.random.default_rng(seed)
    g = np.asarray(operator(v), dtype=float)
    zs = K.sample(gen, n_samples)
    return float(np.max((v - zs) @ g))


# ---------------------------------------------------------------------------
# Exact 2x2 linear box-VI kernel (the (x, y) sub-block of the fast path).
# ---------------------------------------------------------------------------


def solve_linear_box_vi_2x2(
    a11: float,
    a12: float,
    a21: float,
    a22: float,
    b1: float,
    b2: float,
    xlo: float,
    xhi: float,
    ylo: float,
    yhi: float,
) -> tuple[float, float]:
    """Solve the VI of ``F(x, y) = (a11 x + a12 y + b1, a21 x + a22 y + b2)``
    on ``[xlo, xhi] x [ylo, yhi]`` with a11, a22 > 0.

    Enumerates the nine active-set configurations (each coordinate free, at
    its lower, or at its upper bound), scores each candidate by its KKT
    violation, and returns the best. Strong monotonicity of the diagonal
    makes the solution unique, so the violation minimum is (numerically)
    zero at exactly one configuration.
    """
    det = a11 * a22 - a12 * a21
    best = None
    best_score = math.inf
    # Candidate list: (x, y) for each active-set case.
    x_ff = (a12 * b2 - a22 * b1) / det
    y_ff = (a21 * b1 - a11 * b2) / det
    candidates = [(x_ff, y_ff)]
    for xv in (xlo, xhi):
        candidates.append((xv, -(a21 * xv + b2) / a22))
    for yv in (ylo, yhi):
        candidates.append((-(a12 * yv + b1) / a11, yv))
    for xv in (xlo, xhi):
        for yv in (ylo, yhi):
            candidates.append((xv, yv))
    for x, y in candidates:
        # Clamp, then measure how far the KKT conditions are from holding.
        xc = min(max(x, xlo), xhi)
        yc = min(max(y, ylo), yhi)
        fx = a11 * xc + a12 * yc + b1
        fy = a21 * xc + a22 * yc + b2
        score = abs(x - xc) + abs(y - yc)
        if xc > xlo and xc < xhi:
            score += abs(fx)
        elif xc <= xlo:
            score += max(0.0, -fx)
        else:
            score += max(0.0, fx)
        if yc > ylo and yc < yhi:
            score += abs(fy)
        elif yc <= ylo:
            score += max(0.0, -fy)
        else:
            score += max(0.0, fy)
        if score < best_score:
            best_score = score
            best = (xc, yc)
    return best


def _solve_linear_box_vi_batch(a11, a12, a21, a22, b1, b2, xlo, xhi, ylo, yhi):
    """Vectorized version of the 2x2 kernel (coefficients may be arrays)."""
    a11, a12, a21, a22, b1, b2 = np.broadcast_arrays(
        np.asarray(a11, float),
        np.asarray(a12, float),
        np.asarray(a21, float),
        np.asarray(a22, float),
        np.asarray(b1, float),
        np.asarray(b2, float),
    )
    det = a11 * a22 - a12 * a21
    cand_x = []
    cand_y = []
    cand_x.append((a12 * b2 - a22 * b1) / det)
    cand_y.append((a21 * b1 - a11 * b2) / det)
    for xv in (xlo, xhi):
        cand_x.append(np.full_like(det, xv))
        cand_y.append(-(a21 * xv + b2) / a22)
    for yv in (ylo, yhi):
        cand_x.append(-(a12 * yv + b1) / a11)
        cand_y.append(np.full_like(det, yv))
    for xv in (xlo, xhi):
        for yv in (ylo, yhi):
            cand_x.append(np.full_like(det, xv))
            cand_y.append(np.full_like(det, yv))
    X = np.stack(cand_x)
    Y = np.stack(cand_y)
    Xc = np.clip(X, xlo, xhi)
    Yc = np.clip(Y, ylo, yhi)
    Fx = a11 * Xc + a12 * Yc + b1
    Fy = a21 * Xc + a22 * Yc + b2
    score = np.abs(X - Xc) + np.abs(Y - Yc)
    interior_x = (Xc > xlo) & (Xc < xhi)
    score += np.where(
        interior_x, np.abs(Fx), np.where(Xc <= xlo, np.maximum(0.0, -Fx), np.maximum(0.0, Fx))
    )
    interior_y = (Yc > ylo) & (Yc < yhi)
    score += np.where(
        interior_y, np.abs(Fy), np.where(Yc <= ylo, np.maximum(0.0, -Fy), np.maximum(0.0, Fy))
    )
    pick = np.argmin(score, axis=0)
    idx = tuple(np.indices(det.shape))
    return Xc[(pick,) + idx], Yc[(pick,) + idx]


# ---------------------------------------------------------------------------
# Damped block best response (production path).
# ---------------------------------------------------------------------------


@dataclass
class FixedPointResult:
    point: JointVector
    sweeps: int
    residual: float
    converged: bool
    method: str  # "fixed-point", "grid", or "dual-extrapolation"


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _sigmoid(z: float) -> float:
    # Overflow-safe scalar logistic.
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _sigmoid_batch(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -745.0, 745.0)))


def _clip(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


class _QuadraticSystem:
    """Closed-form machinery for contexts whose predictor is in the
    quadratic family: exact (x, y) sub-solve and logit weight responses."""

    def __init__(self, ctx: OperatorContext):
        s, lx, ly, c = ctx.h.quad_affine()
        self.s, self.lx, self.ly, self.c = s, lx, ly, c
        self.ctx = ctx
        self.xlo, self.xhi = float(ctx.X.lower[0]), float(ctx.X.upper[0])
        self.ylo, self.yhi = float(ctx.Y.lower[0]), float(ctx.Y.upper[0])
        self.wlo = 1.0 / ctx.T
        self.whi = 1.0 - self.wlo
        self.logit_w = _logit(_clip(ctx.w_anchor, self.wlo, self.whi))
        self.logit_o = _logit(_clip(ctx.omega_anchor, self.wlo, self.whi))

    def h_val(self, x, y):
        return self.s * (0.5 * x * x - 0.5 * y * y + x * y) + self.lx * x + self.ly * y + self.c

    def xy_solve(self, w, omega):
        ctx, s = self.ctx, self.s
        a11 = 1.0 + ctx.eta * s
        a12 = ctx.eta * s * omega
        b1 = ctx.eta * (s * (1.0 - omega) * ctx.y_bar + self.lx) - ctx.x_anchor
        a22 = 1.0 + ctx.gamma * s
        a21 = -ctx.gamma * s * w
        b2 = ctx.gamma * (-s * (1.0 - w) * ctx.x_bar - self.ly) - ctx.y_anchor
        return solve_linear_box_vi_2x2(
            a11, a12, a21, a22, b1, b2, self.xlo, self.xhi, self.ylo, self.yhi
        )

    def xy_solve_batch(self, w, omega):
        ctx, s = self.ctx, self.s
        a11 = 1.0 + ctx.eta * s
        a12 = ctx.eta * s * omega
        b1 = ctx.eta * (s * (1.0 - omega) * ctx.y_bar + self.lx) - ctx.x_anchor
        a22 = 1.0 + ctx.gamma * s
        a21 = -ctx.gamma * s * w
        b2 = ctx.gamma * (-s * (1.0 - w) * ctx.x_bar - self.ly) - ctx.y_anchor
        return _solve_linear_box_vi_batch(
            a11, a12, a21, a22, b1, b2, self.xlo, self.xhi, self.ylo, self.yhi
        )

    def w_response(self, x, y, omega):
        ctx = self.ctx
        h, xb, yb = self.h_val, ctx.x_bar, ctx.y_bar
        cw = omega * (h(x, y) - h(xb, y)) + (1.0 - omega) * (h(x, yb) - h(xb, yb))
        return _clip(_sigmoid(self.logit_w - ctx.theta * cw), self.wlo, self.whi)

    def omega_response(self, x, y, w):
        ctx = self.ctx
        h, xb, yb = self.h_val, ctx.x_bar, ctx.y_bar
        co = w * (h(x, y) - h(x, yb)) + (1.0 - w) * (h(xb, y) - h(xb, yb))
        return _clip(_sigmoid(self.logit_o + ctx.vartheta * co), self.wlo, self.whi)

    def responses_batch(self, x, y, w, omega):
        ctx = self.ctx
        h, xb, yb = self.h_val, ctx.x_bar, ctx.y_bar
        cw = omega * (h(x, y) - h(xb, y)) + (1.0 - omega) * (h(x, yb) - h(xb, yb))
        w_br = np.clip(_sigmoid_batch(self.logit_w - ctx.theta * cw), self.wlo, self.whi)
        co = w * (h(x, y) - h(x, yb)) + (1.0 - w) * (h(xb, y) - h(xb, yb))
        o_br = np.clip(_sigmoid_batch(self.logit_o + ctx.vartheta * co), self.wlo, self.whi)
        return w_br, o_br

    def residual_at(self, w, omega):
        x, y = self.xy_solve(w, omega)
        return abs(self.w_response(x, y, omega) - w) + abs(self.omega_response(x, y, w) - omega)


def _grid_refine(sys: _QuadraticSystem, n: int = 17, passes: int = 22):
    """Vectorized grid refinement on (w, omega) minimizing the squared
    best-response displacement; the unique zero is the joint solution."""
    lo_w, hi_w = sys.wlo, sys.whi
    lo_o, hi_o = sys.wlo, sys.whi
    w_best = o_best = None
    for _ in range(passes):
        ws = np.linspace(lo_w, hi_w, n)
        os_ = np.linspace(lo_o, hi_o, n)
        W, O = np.meshgrid(ws, os_, indexing="ij")
        X, Y = sys.xy_solve_batch(W, O)
        Wbr, Obr = sys.responses_batch(X, Y, W, O)
        R = (Wbr - W) ** 2 + (Obr - O) ** 2
        i, j = np.unravel_index(np.argmin(R), R.shape)
        w_best, o_best = float(W[i, j]), float(O[i, j])
        dw = (hi_w - lo_w) / (n - 1)
        do = (hi_o - lo_o) / (n - 1)
        lo_w, hi_w = max(sys.wlo, w_best - 2 * dw), min(sys.whi, w_best + 2 * dw)
        lo_o, hi_o = max(sys.wlo, o_best - 2 * do), min(sys.whi, o_best + 2 * do)
    return w_best, o_best


def fixed_point_solve(
    ctx: OperatorContext,
    tol: float = 1e-11,
    beta: float = 0.5,
    max_sweeps: int = 400,
    fallback: bool = True,
) -> FixedPointResult:
    """Damped block best-response solve of the coupled system.

    Each sweep best-responds block by block, moving a fraction ``beta`` of
    the way (damping tames the rotational component of the saddle coupling;
    beta=1 is plain alternation). Stops when the undamped best-response
    displacement drops below ``tol``. For quadratic-family predictors the
    (x, y) sub-block is solved exactly every sweep and a grid-refinement
    fallback over (w, omega) runs if the iteration stalls; otherwise a
    generic per-block bisection path is used, falling back to certified dual
    extrapolation when the payoff carries smoothness metadata.
    """
    if ctx.h.quad_affine() is not None:
        return _fixed_point_quadratic(ctx, tol, beta, max_sweeps)
    return _fixed_point_generic(ctx, tol, beta, max_sweeps, fallback)


def _fixed_point_quadratic(ctx, tol, beta, max_sweeps):
    sys = _QuadraticSystem(ctx)
    w = _clip(ctx.w_anchor, sys.wlo, sys.whi)
    om = _clip(ctx.omega_anchor, sys.wlo, sys.whi)
    b = beta
    prev_res = math.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        x, y = sys.xy_solve(w, om)
        w_br = sys.w_response(x, y, om)
        w_new = w + b * (w_br - w)
        o_br = sys.omega_response(x, y, w_new)
        res = abs(w_br - w) + abs(o_br - om)
        om = om + b * (o_br - om)
        w = w_new
        if res <= tol:
            break
        if sweeps % 50 == 0:
            if res > 0.5 * prev_res:
                b = max(0.05, 0.5 * b)  # stall: damp harder
            prev_res = res
    x, y = sys.xy_solve(w, om)
    res = abs(sys.w_response(x, y, om) - w) + abs(sys.omega_response(x, y, w) - om)
    if res <= 10 * tol:
        return FixedPointResult(JointVector(x, y, w, om), sweeps, res, True, "fixed-point")
    w, om = _grid_refine(sys)
    x, y = sys.xy_solve(w, om)
    res = abs(sys.w_response(x, y, om) - w) + abs(sys.omega_response(x, y, w) - om)
    # Polish: the grid point is near the fixed point, where damped sweeps
    # contract; take a few and keep the better residual.
    wp, op = w, om
    for _ in range(40):
        xp, yp = sys.xy_solve(wp, op)
        wb = sys.w_response(xp, yp, op)
        ob = sys.omega_response(xp, yp, wp)
        rp = abs(wb - wp) + abs(ob - op)
        if rp < res:
            w, om, res = wp, op, rp
            x, y = xp, yp
        wp = wp + 0.3 * (wb - wp)
        op = op + 0.3 * (ob - op)
    return FixedPointResult(JointVector(x, y, w, om), sweeps, res, res <= 10 * tol, "grid")


def _bisect_block(deriv, lo: float, hi: float, iters: int = 80) -> float:
    """Exact minimizer of a scalar strongly convex block on [lo, hi]: the
    derivative is increasing, so bisect its sign change."""
    dlo = deriv(lo)
    if dlo >= 0:
        return lo
    dhi = deriv(hi)
    if dhi <= 0:
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if deriv(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _fixed_point_generic(ctx, tol, beta, max_sweeps, fallback):
    h = ctx.h
    xlo, xhi = float(ctx.X.lower[0]), float(ctx.X.upper[0])
    ylo, yhi = float(ctx.Y.lower[0]), float(ctx.Y.upper[0])
    wlo, whi = 1.0 / ctx.T, 1.0 - 1.0 / ctx.T
    logit_w = _logit(_clip(ctx.w_anchor, wlo, whi))
    logit_o = _logit(_clip(ctx.omega_anchor, wlo, whi))
    xb, yb = ctx.x_bar, ctx.y_bar

    def x_br(y, om):
        return _bisect_block(
            lambda x: ctx.eta * (om * h.grad_x(x, y) + (1 - om) * h.grad_x(x, yb))
            + x
            - ctx.x_anchor,
            xlo,
            xhi,
        )

    def y_br(x, w):
        return _bisect_block(
            lambda y: ctx.gamma * (w * h.grad_y_neg(x, y) + (1 - w) * h.grad_y_neg(xb, y))
            + y
            - ctx.y_anchor,
            ylo,
            yhi,
        )

    def w_br(x, y, om):
        cw = om * (h.value(x, y) - h.value(xb, y)) + (1 - om) * (
            h.value(x, yb) - h.value(xb, yb)
        )
        return _clip(_sigmoid(logit_w - ctx.theta * cw), wlo, whi)

    def o_br(x, y, w):
        co = w * (h.value(x, y) - h.value(x, yb)) + (1 - w) * (
            h.value(xb, y) - h.value(xb, yb)
        )
        return _clip(_sigmoid(logit_o + ctx.vartheta * co), wlo, whi)

    x = _clip(ctx.x_anchor, xlo, xhi)
    y = _clip(ctx.y_anchor, ylo, yhi)
    w = _clip(ctx.w_anchor, wlo, whi)
    om = _clip(ctx.omega_anchor, wlo, whi)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        xn = x_br(y, om)
        x_new = x + beta * (xn - x)
        yn = y_br(x_new, w)
        y_new = y + beta * (yn - y)
        wn = w_br(x_new, y_new, om)
        w_new = w + beta * (wn - w)
        on = o_br(x_new, y_new, w_new)
        res = abs(xn - x) + abs(yn - y) + abs(wn - w) + abs(on - om)
        x, y, w, om = x_new, y_new, w_new, om + beta * (on - om)
        if res <= tol:
            break
    res = (
        abs(x_br(y, om) - x) + abs(y_br(x, w) - y) + abs(w_br(x, y, om) - w) + abs(o_br(x, y, w) - om)
    )
    if res <= 10 * tol:
        return FixedPointResult(JointVector(x, y, w, om), sweeps, res, True, "fixed-point")
    if fallback and h.smoothness is not None:
        L = lipschitz_bound(ctx, constants_for(h, ctx.X, ctx.Y))
        de = dual_extrapolation_solve(make_operator(ctx), joint_constraints(ctx), L, tol=tol)
        return FixedPointResult(
            JointVector.from_flat(de.point),
            de.iterations,
            de.certificate,
            de.certified,
            "dual-extrapolation",
        )
    return FixedPointResult(JointVector(x, y, w, om), sweeps, res, False, "fixed-point")


# ---------------------------------------------------------------------------
# Two-block solve (the baseline's decision step: weights frozen at 1).
# ---------------------------------------------------------------------------


def two_block_solve(
    h: PayoffFunction,
    X: BoxDomain,
    Y: BoxDomain,
    x_anchor: float,
    y_anchor: float,
    eta: float,
    gamma: float,
    tol: float = 1e-12,
    max_sweeps: int = 400,
) -> tuple[float, float, int, bool]:
    """Saddle step ``argmin_x max_y eta*gamma*h + gamma*B(x,anchor) - eta*B(y,anchor)``.

    Equivalent to the coupled system with both weight blocks frozen at 1.
    Exact for quadratic-family predictors; otherwise damped alternation of
    the per-block bisection solves.
    """
    xlo, xhi = float(X.lower[0]), float(X.upper[0])
    ylo, yhi = float(Y.lower[0]), float(Y.upper[0])
    qa = h.quad_affine()
    if qa is not None:
        s, lx, ly, _ = qa
        x, y = solve_linear_box_vi_2x2(
            1.0 + eta * s,
            eta * s,
            -gamma * s,
            1.0 + gamma * s,
            eta * lx - x_anchor,
            -gamma * ly - y_anchor,
            xlo,
            xhi,
            ylo,
            yhi,
        )
        return x, y, 1, True

    def x_br(y):
        return _bisect_block(
            lambda x: eta * h.grad_x(x, y) + x - x_anchor, xlo, xhi
        )

    def y_br(x):
        return _bisect_block(
            lambda y: gamma * h.grad_y_neg(x, y) + y - y_anchor, ylo, yhi
        )

    x = _clip(x_anchor, xlo, xhi)
    y = _clip(y_anchor, ylo, yhi)
    beta = 0.5
    for sweeps in range(1, max_sweeps + 1):
        xn = x_br(y)
        x_new = x + beta * (xn - x)
        yn = y_br(x_new)
        res = abs(xn - x) + abs(yn - y)
        x, y = x_new, y + beta * (yn - y)
        if res <= tol:
            return x, y, sweeps, True
    return x, y, max_sweeps, False
