"""Interdependent expert/meta update: joint decision through the coupled
solver, implicit mirror steps for the expert anchors, clipped-Hedge steps
for the weight anchors, the four per-round residuals, and the residual-sum
learning-rate schedules.

Round order (fixed): joint decision -> observe the payoff -> expert mirror
steps (both sides) -> meta mirror steps (both sides) -> residuals -> rate
advance. The joint decision couples the prediction-error expert with the
meta weights, so it is solved as one four-block system rather than
layer-by-layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, InvariantViolation
from .geometry import BoxDomain, ClippedSimplex, hedge_step
from .payoffs import PayoffFunction
from .solver import (
    FixedPointResult,
    OperatorContext,
    _bisect_block,
    fixed_point_solve,
)

# Residuals are guaranteed nonnegative at exact block optima; numerical
# slack below zero up to CLAMP_TOL is clamped, beyond RAISE_TOL it signals
# solver failure.
CLAMP_TOL = 1e-9
RAISE_TOL = 1e-6


@dataclass(frozen=True)
class IntegrationConstants:
    """Problem constants of the expert/meta schedules.

    ``L_B_phi``/``L_B_psi`` are the Lipschitz constants of the Fenchel
    couplings in their first argument; for the Euclidean regularizer on a
    box they equal the domain diameter.
    """

    L_B_phi: float
    L_B_psi: float
    D_X: float
    D_Y: float
    T: int
    epsilon: float = 1.0

    def __post_init__(self):
        if self.T < 2:
            raise InputError("the meta schedule requires T >= 2")
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")


def experiment_integration_constants(X: BoxDomain, Y: BoxDomain, T: int, epsilon: float = 1.0):
    """Constants for the Euclidean instance: L_B equals the diameter."""
    return IntegrationConstants(
        L_B_phi=X.diameter(),
        L_B_psi=Y.diameter(),
        D_X=X.diameter(),
        D_Y=Y.diameter(),
        T=T,
        epsilon=epsilon,
    )


@dataclass
class IntegrationState:
    """Anchors, residual sums, and constants of one run epoch."""

    X: BoxDomain
    Y: BoxDomain
    consts: IntegrationConstants
    x_anchor: float = 0.0
    y_anchor: float = 0.0
    w_anchor: float = 0.5
    omega_anchor: float = 0.5
    sum_delta_x: float = 0.0
    sum_delta_y: float = 0.0
    sum_meta_x: float = 0.0
    sum_meta_y: float = 0.0

    @classmethod
    def fresh(cls, X: BoxDomain, Y: BoxDomain, consts: IntegrationConstants):
        """Centered anchors and uniform weight anchors."""
        return cls(
            X=X,
            Y=Y,
            consts=consts,
            x_anchor=float(X.center()[0]),
            y_anchor=float(Y.center()[0]),
        )

    # Self-tuning rates: reciprocal in the accumulated residuals, hence
    # non-increasing over rounds.
    @property
    def eta(self) -> float:
        c = self.consts
        return c.L_B_phi * c.D_X * (c.T + 1) / (c.epsilon + self.sum_delta_x)

    @property
    def gamma(self) -> float:
        c = self.consts
        return c.L_B_psi * c.D_Y * (c.T + 1) / (c.epsilon + self.sum_delta_y)

    @property
    def theta(self) -> float:
        c = self.consts
        return math.log(c.T) / (c.epsilon + self.sum_meta_x)

    @property
    def vartheta(self) -> float:
        c = self.consts
        return math.log(c.T) / (c.epsilon + self.sum_meta_y)

    def meta_simplex(self) -> ClippedSimplex:
        return ClippedSimplex(dim=2, alpha=2.0 / self.consts.T)


@dataclass(frozen=True)
class RoundDecisions:
    """The round's strategy ingredients: joint decision plus side strategies."""

    x_hat: float
    y_hat: float
    w: float
    omega: float
    x_bar: float
    y_bar: float

    @property
    def w_vec(self) -> np.ndarray:
        return np.array([self.w, 1.0 - self.w])

    @property
    def omega_vec(self) -> np.ndarray:
        return np.array([self.omega, 1.0 - self.omega])

    @property
    def x_play(self) -> float:
        return self.w * self.x_hat + (1.0 - self.w) * self.x_bar

    @property
    def y_play(self) -> float:
        return self.omega * self.y_hat + (1.0 - self.omega) * self.y_bar


def build_matrices(
    f_or_h: PayoffFunction, x_hat: float, y_hat: float, x_bar: float, y_bar: float
) -> np.ndarray:
    """The 2x2 strategy-pair payoff matrix at {x_hat, x_bar} x {y_hat, y_bar}."""
    return np.array(
        [
            [f_or_h.value(x_hat, y_hat), f_or_h.value(x_hat, y_bar)],
            [f_or_h.value(x_bar, y_hat), f_or_h.value(x_bar, y_bar)],
        ]
    )


def operator_context(
    state: IntegrationState, h: PayoffFunction, x_bar: float, y_bar: float
) -> OperatorContext:
    return OperatorContext(
        h=h,
        X=state.X,
        Y=state.Y,
        x_anchor=state.x_anchor,
        y_anchor=state.y_anchor,
        w_anchor=state.w_anchor,
        omega_anchor=state.omega_anchor,
        x_bar=x_bar,
        y_bar=y_bar,
        eta=state.eta,
        gamma=state.gamma,
        theta=state.theta,
        vartheta=state.vartheta,
        T=state.consts.T,
    )


def joint_decision(
    state: IntegrationState,
    h: PayoffFunction,
    x_bar: float,
    y_bar: float,
    tol: float = 1e-11,
    beta: float = 0.5,
) -> tuple[RoundDecisions, FixedPointResult]:
    """Solve the coupled system for this round's (x_hat, y_hat, w, omega).

    Delegates to the coupled-update solver; the returned weights live in
    [1/T, 1-1/T] and the decisions combine as ``x = w*x_hat + (1-w)*x_bar``.
    A non-converged solve is returned flagged rather than raised; the run
    continues with the best iterate.
    """
    ctx = operator_context(state, h, x_bar, y_bar)
    result = fixed_point_solve(ctx, tol=tol, beta=beta)
    p = result.point
    dec = RoundDecisions(
        x_hat=p.x, y_hat=p.y, w=p.w, omega=p.omega, x_bar=x_bar, y_bar=y_bar
    )
    return dec, result


def expert_mirror_step(
    state: IntegrationState, f: PayoffFunction, dec: RoundDecisions, side: str
) -> float:
    """Implicit (proximal) anchor update against the observed payoff.

    x side: ``argmin_X eta*[f(x,y_hat), f(x,y_bar)] . omega_vec + B(x, anchor)``;
    y side the analogous maximization at rate gamma. Quadratic-family
    payoffs are solved in closed form (derivative zeroing plus clamp);
    otherwise the strictly monotone derivative is bisected to machine
    precision.
    """
    qa = f.quad_affine()
    if side == "x":
        eta, om = state.eta, dec.omega
        y_eff = om * dec.y_hat + (1.0 - om) * dec.y_bar
        lo, hi = float(state.X.lower[0]), float(state.X.upper[0])
        if qa is not None:
            s, lx, _, _ = qa
            xs = (state.x_anchor - eta * (s * y_eff + lx)) / (1.0 + eta * s)
            return min(max(xs, lo), hi)
        return _bisect_block(
            lambda x: eta
            * (om * f.grad_x(x, dec.y_hat) + (1 - om) * f.grad_x(x, dec.y_bar))
            + x
            - state.x_anchor,
            lo,
            hi,
        )
    if side == "y":
        gam, w = state.gamma, dec.w
        x_eff = w * dec.x_hat + (1.0 - w) * dec.x_bar
        lo, hi = float(state.Y.lower[0]), float(state.Y.upper[0])
        if qa is not None:
            s, _, ly, _ = qa
            ys = (state.y_anchor + gam * (s * x_eff + ly)) / (1.0 + gam * s)
            return min(max(ys, lo), hi)
        return _bisect_block(
            lambda y: gam
            * (w * f.grad_y_neg(dec.x_hat, y) + (1 - w) * f.grad_y_neg(dec.x_bar, y))
            + y
            - state.y_anchor,
            lo,
            hi,
        )
    raise InputError(f"side must be 'x' or 'y', got {side!r}")


def meta_mirror_step(
    state: IntegrationState, A: np.ndarray, dec: RoundDecisions, side: str
) -> np.ndarray:
    """Clipped-Hedge anchor update on the observed 2x2 matrix.

    w side plays the loss ``A . omega_vec`` at rate theta; omega side plays
    the sign-flipped gain ``A^T . w_vec`` at rate vartheta. Both project
    back into the clipped two-point simplex with floor 1/T.
    """
    cs = state.meta_simplex()
    if side == "w":
        loss = A @ dec.omega_vec
        anchor = np.array([state.w_anchor, 1.0 - state.w_anchor])
        return hedge_step(anchor, loss, state.theta, cs)
    if side == "omega":
        gain = A.T @ dec.w_vec
        anchor = np.array([state.omega_anchor, 1.0 - state.omega_anchor])
        return hedge_step(anchor, -gain, state.vartheta, cs)
    raise InputError(f"side must be 'w' or 'omega', got {side!r}")


def expert_residuals(
    f: PayoffFunction,
    h: PayoffFunction,
    dec: RoundDecisions,
    x_next: float,
    y_next: float,
) -> tuple[float, float]:
    """Per-round prediction-error residuals of the expert layer.

    Each residual is the omega- (resp. w-) weighted bracket of payoff-minus-
    predictor values at the decision versus the fresh anchor; nonnegative at
    exact block optima, and at most twice the predictor's sup-norm error.
    """
    ov = dec.omega_vec
    wv = dec.w_vec
    fx_hat = np.array([f.value(dec.x_hat, dec.y_hat), f.value(dec.x_hat, dec.y_bar)])
    hx_hat = np.array([h.value(dec.x_hat, dec.y_hat), h.value(dec.x_hat, dec.y_bar)])
    fx_next = np.array([f.value(x_next, dec.y_hat), f.value(x_next, dec.y_bar)])
    hx_next = np.array([h.value(x_next, dec.y_hat), h.value(x_next, dec.y_bar)])
    delta_x = float((fx_hat - hx_hat) @ ov + (hx_next - fx_next) @ ov)
    fy_hat = np.array([f.value(dec.x_hat, dec.y_hat), f.value(dec.x_bar, dec.y_hat)])
    hy_hat = np.array([h.value(dec.x_hat, dec.y_hat), h.value(dec.x_bar, dec.y_hat)])
    fy_next = np.array([f.value(dec.x_hat, y_next), f.value(dec.x_bar, y_next)])
    hy_next = np.array([h.value(dec.x_hat, y_next), h.value(dec.x_bar, y_next)])
    delta_y = float((hy_hat - fy_hat) @ wv + (fy_next - hy_next) @ wv)
    return delta_x, delta_y


def _kl2(a_head: float, b_head: float) -> float:
    """KL divergence between two-point distributions given by their heads."""
    out = 0.0
    if a_head > 0:
        out += a_head * math.log(a_head / b_head)
    if a_head < 1:
        out += (1 - a_head) * math.log((1 - a_head) / (1 - b_head))
    return out


def meta_residuals(
    A: np.ndarray,
    Lam: np.ndarray,
    dec: RoundDecisions,
    w_next: np.ndarray,
    omega_next: np.ndarray,
    theta: float,
    vartheta: float,
) -> tuple[float, float]:
    """Per-round meta-layer residuals.

    ``(w - w_next)^T (A - Lam) omega - KL(w_next, w)/theta`` on the w side,
    and the sign-flipped analogue on the omega side. Nonnegative at exact
    block optima; a perfect predictor makes the hedge step a no-op and both
    residuals exactly zero.
    """
    D = A - Lam
    wv, ov = dec.w_vec, dec.omega_vec
    meta_x = float((wv - w_next) @ (D @ ov)) - _kl2(float(w_next[0]), dec.w) / theta
    meta_y = float(-wv @ (D @ (ov - omega_next))) - _kl2(float(omega_next[0]), dec.omega) / vartheta
    return meta_x, meta_y


def _checked(value: float, label: str) -> float:
    if value < -RAISE_TOL:
        raise InvariantViolation(f"{label} = {value} below -{RAISE_TOL}")
    return max(value, 0.0)


def advance_rates(
    state: IntegrationState,
    delta_x: float,
    delta_y: float,
    meta_x: float,
    meta_y: float,
) -> None:
    """Accumulate the round's residuals into the rate denominators.

    Residuals within numerical slack below zero are clamped to zero before
    accumulating; anything below the raise tolerance aborts the run as a
    solver-accuracy invariant violation.
    """
    state.sum_delta_x += _checked(delta_x, "delta_x")
    state.sum_delta_y += _checked(delta_y, "delta_y")
    state.sum_meta_x += _checked(meta_x, "meta_x residual")
    state.sum_meta_y += _checked(meta_y, "meta_y residual")
