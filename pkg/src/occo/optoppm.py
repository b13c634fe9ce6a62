"""Standalone optimistic proximal point baseline.

A single predictor steers the joint decision (a two-block saddle step with
both mixing weights frozen at one), followed by implicit anchor updates
against the observed payoff. Learning rates self-tune on the residuals,
which here include the Fenchel-coupling correction term, against preset
path-length budgets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError, InvariantViolation
from .geometry import BoxDomain
from .integration import RAISE_TOL
from .payoffs import PayoffFunction
from .solver import _bisect_block, two_block_solve


@dataclass(frozen=True)
class OptOppmConstants:
    """Rate-schedule constants; lam/mu are the comparator path-length budgets."""

    L_B_phi: float
    L_B_psi: float
    D_X: float
    D_Y: float
    lam: float
    mu: float
    epsilon: float = 1.0


def default_constants(X: BoxDomain, Y: BoxDomain, T: int, epsilon: float = 1.0):
    """Budgets proportional to the horizon (lam = D_X * T, mu = D_Y * T)."""
    dx, dy = X.diameter(), Y.diameter()
    return OptOppmConstants(
        L_B_phi=dx, L_B_psi=dy, D_X=dx, D_Y=dy, lam=dx * T, mu=dy * T, epsilon=epsilon
    )


@dataclass
class OptOppmState:
    X: BoxDomain
    Y: BoxDomain
    consts: OptOppmConstants
    x_anchor: float = 0.0
    y_anchor: float = 0.0
    sum_nu_x: float = 0.0
    sum_nu_y: float = 0.0

    @classmethod
    def fresh(cls, X: BoxDomain, Y: BoxDomain, consts: OptOppmConstants):
        return cls(
            X=X, Y=Y, consts=consts,
            x_anchor=float(X.center()[0]), y_anchor=float(Y.center()[0]),
        )

    @property
    def eta(self) -> float:
        c = self.consts
        return c.L_B_phi * (c.D_X + c.lam) / (c.epsilon + self.sum_nu_x)

    @property
    def gamma(self) -> float:
        c = self.consts
        return c.L_B_psi * (c.D_Y + c.mu) / (c.epsilon + self.sum_nu_y)


def optoppm_decide(state: OptOppmState, h: PayoffFunction) -> tuple[float, float, int, bool]:
    """Predictor-guided saddle step from the current anchors.

    Returns (x, y, solver sweeps, converged); exact in one step for the
    quadratic family.
    """
    return two_block_solve(
        h, state.X, state.Y, state.x_anchor, state.y_anchor, state.eta, state.gamma
    )


def optoppm_update(
    state: OptOppmState, f: PayoffFunction, h: PayoffFunction, x: float, y: float
) -> tuple[float, float]:
    """Implicit anchor steps on the observed payoff, then the rate advance.

    The residuals subtract the proximity actually gained,
    ``B(new anchor, decision)/rate``, from the prediction-error brackets;
    they are nonnegative at the exact joint decision and are clamped /
    checked with the same tolerances as the expert layer's.
    """
    eta, gam = state.eta, state.gamma
    xlo, xhi = float(state.X.lower[0]), float(state.X.upper[0])
    ylo, yhi = float(state.Y.lower[0]), float(state.Y.upper[0])
    qa = f.quad_affine()
    if qa is not None:
        s, lx, ly, _ = qa
        x_next = (state.x_anchor - eta * (s * y + lx)) / (1.0 + eta * s)
        x_next = min(max(x_next, xlo), xhi)
        y_next = (state.y_anchor + gam * (s * x + ly)) / (1.0 + gam * s)
        y_next = min(max(y_next, ylo), yhi)
    else:
        x_next = _bisect_block(
            lambda xx: eta * f.grad_x(xx, y) + xx - state.x_anchor, xlo, xhi
        )
        y_next = _bisect_block(
            lambda yy: gam * f.grad_y_neg(x, yy) + yy - state.y_anchor, ylo, yhi
        )
    nu_x = (
        f.value(x, y)
        - h.value(x, y)
        + h.value(x_next, y)
        - f.value(x_next, y)
        - 0.5 * (x_next - x) ** 2 / eta
    )
    nu_y = (
        f.value(x, y_next)
        - h.value(x, y_next)
        + h.value(x, y)
        - f.value(x, y)
        - 0.5 * (y_next - y) ** 2 / gam
    )
    for label, val in (("nu_x", nu_x), ("nu_y", nu_y)):
        if val < -RAISE_TOL:
            raise InvariantViolation(f"{label} = {val} below -{RAISE_TOL}")
    state.x_anchor = x_next
    state.y_anchor = y_next
    state.sum_nu_x += max(nu_x, 0.0)
    state.sum_nu_y += max(nu_y, 0.0)
    return nu_x, nu_y
