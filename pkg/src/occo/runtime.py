"""Round-loop orchestration: wires the adaptive pair, the interdependent
update, and the aggregator together, with a doubling schedule for unknown
horizons and a per-round trace.

Every algorithm exposes the same two-phase protocol: ``decide(bank)``
commits the strategy pair before the payoff exists, and ``observe(f)``
performs all updates afterwards. Calling them out of order raises; the
payoff is structurally unavailable at decision time, which is what the
no-peek causality tests pin down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import ader as ader_mod
from .aggregator import AggregatorState, aggregate, aggregator_update
from .errors import InputError, ProtocolError
from .geometry import BoxDomain
from .integration import (
    IntegrationState,
    RoundDecisions,
    advance_rates,
    build_matrices,
    expert_mirror_step,
    expert_residuals,
    experiment_integration_constants,
    joint_decision,
    meta_mirror_step,
    meta_residuals,
)
from .optoppm import OptOppmState, default_constants, optoppm_decide, optoppm_update
from .payoffs import PayoffFunction, loss_vector


@dataclass
class TraceRow:
    """One round of a run; optional fields stay None for algorithms that
    have no corresponding quantity."""

    t: int
    x: float
    y: float
    u: float = math.nan
    v: float = math.nan
    gap: float = math.nan
    cum_gap: float = math.nan
    avg_gap: float = math.nan
    w: Optional[float] = None
    omega: Optional[float] = None
    xi: Optional[tuple] = None
    eta: Optional[float] = None
    gamma: Optional[float] = None
    theta: Optional[float] = None
    vartheta: Optional[float] = None
    zeta: Optional[float] = None
    solver_iters: Optional[int] = None
    solver_flag: Optional[str] = None
    extra: dict = field(default_factory=dict)


class GapTrace:
    """Per-round records with exact prefix sums of the instantaneous gap."""

    def __init__(self):
        self.rows: list[TraceRow] = []
        self._cum = 0.0

    def add(self, row: TraceRow, u: float, v: float, gap: float) -> None:
        row.u, row.v, row.gap = u, v, gap
        self._cum += gap
        row.cum_gap = self._cum
        row.avg_gap = self._cum / row.t
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


@dataclass
class GapSeries:
    instantaneous: np.ndarray
    cumulative: np.ndarray
    time_averaged: np.ndarray


def ddgap(trace: GapTrace, comparators: Sequence[tuple[float, float]]) -> GapSeries:
    """Gap series of a finished trace against an arbitrary comparator
    sequence: per round ``f_t(x_t, v_t) - f_t(u_t, y_t)``, with exact
    cumulative and time-averaged prefix aggregates.

    The trace must carry each round's payoff (all harness runs do).
    """
    if len(comparators) != len(trace):
        raise InputError("comparator sequence length must match the trace")
    inst = np.empty(len(trace))
    for i, (row, (u, v)) in enumerate(zip(trace.rows, comparators)):
        f: PayoffFunction = row.extra["payoff"]
        if not (row.extra["X"].contains(np.atleast_1d(u)) and row.extra["Y"].contains(np.atleast_1d(v))):
            raise InputError(f"comparator ({u}, {v}) infeasible at round {row.t}")
        inst[i] = f.value(row.x, v) - f.value(u, row.y)
    cum = np.cumsum(inst)
    avg = cum / np.arange(1, len(trace) + 1)
    return GapSeries(inst, cum, avg)


@dataclass
class Decision:
    x: float
    y: float
    diag: dict


class _TwoPhase:
    """Shared decide/observe sequencing guard."""

    def __init__(self):
        self._pending = False

    def _begin_decide(self):
        if self._pending:
            raise ProtocolError("decide called twice without observe")
        self._pending = True

    def _begin_observe(self):
        if not self._pending:
            raise ProtocolError("observe called before decide")
        self._pending = False


class ModularAlgorithm(_TwoPhase):
    """The full three-component learner under a doubling schedule.

    Sub-states all share the current epoch horizon; when the epoch budget is
    exhausted the horizon doubles and every sub-state is re-initialized
    (fresh rates, fresh clipping floors, centered anchors, uniform weights).
    The cumulative trace lives outside and is unaffected by epoch rolls.
    """

    def __init__(
        self,
        X: BoxDomain,
        Y: BoxDomain,
        n_predictors: int,
        grad_bound: float = 4.0,
        t0: int = 64,
        epsilon: float = 1.0,
        solver_tol: float = 1e-11,
        solver_beta: float = 0.5,
    ):
        super().__init__()
        if t0 < max(2, n_predictors):
            raise InputError("initial epoch must satisfy T >= 2 and T >= predictors")
        self.X, self.Y = X, Y
        self.d = n_predictors
        self.grad_bound = grad_bound
        self.epsilon = epsilon
        self.solver_tol = solver_tol
        self.solver_beta = solver_beta
        self.epoch = 0
        self.epoch_horizon = t0
        self.rounds_used = 0
        self._init_epoch_states()
        self._round_ctx: Optional[dict] = None

    def _init_epoch_states(self):
        T = self.epoch_horizon
        self.integ = IntegrationState.fresh(
            self.X, self.Y, experiment_integration_constants(self.X, self.Y, T, self.epsilon)
        )
        self.ader_x = ader_mod.ader_new(self.X, self.grad_bound, T)
        self.ader_y = ader_mod.ader_new(self.Y, self.grad_bound, T)
        self.agg = AggregatorState(d=self.d, T=T, epsilon=self.epsilon)

    def _maybe_roll_epoch(self):
        if self.rounds_used >= self.epoch_horizon:
            self.epoch += 1
            self.epoch_horizon *= 2
            self.rounds_used = 0
            self._init_epoch_states()

    def decide(self, bank: Sequence[PayoffFunction]) -> Decision:
        self._begin_decide()
        if len(bank) != self.d:
            raise InputError(f"bank has {len(bank)} predictors, expected {self.d}")
        self._maybe_roll_epoch()
        h = aggregate(self.agg, bank)
        x_bar = float(ader_mod.ader_predict(self.ader_x)[0])
        y_bar = float(ader_mod.ader_predict(self.ader_y)[0])
        dec, solve = joint_decision(
            self.integ, h, x_bar, y_bar, tol=self.solver_tol, beta=self.solver_beta
        )
        self._round_ctx = {"bank": tuple(bank), "h": h, "dec": dec, "solve": solve}
        diag = {
            "w": dec.w,
            "omega": dec.omega,
            "xi": tuple(self.agg.weights),
            "eta": self.integ.eta,
            "gamma": self.integ.gamma,
            "theta": self.integ.theta,
            "vartheta": self.integ.vartheta,
            "zeta": self.agg.rate,
            "solver_iters": solve.sweeps,
            "solver_flag": solve.method if solve.converged else "uncertified",
            "epoch": self.epoch,
            "decisions": dec,
        }
        return Decision(dec.x_play, dec.y_play, diag)

    def observe(self, f: PayoffFunction) -> dict:
        self._begin_observe()
        ctx = self._round_ctx
        self._round_ctx = None
        dec: RoundDecisions = ctx["dec"]
        h = ctx["h"]
        theta, vartheta = self.integ.theta, self.integ.vartheta
        x_next = expert_mirror_step(self.integ, f, dec, "x")
        y_next = expert_mirror_step(self.integ, f, dec, "y")
        A = build_matrices(f, dec.x_hat, dec.y_hat, dec.x_bar, dec.y_bar)
        Lam = build_matrices(h, dec.x_hat, dec.y_hat, dec.x_bar, dec.y_bar)
        w_next = meta_mirror_step(self.integ, A, dec, "w")
        omega_next = meta_mirror_step(self.integ, A, dec, "omega")
        d_x, d_y = expert_residuals(f, h, dec, x_next, y_next)
        m_x, m_y = meta_residuals(A, Lam, dec, w_next, omega_next, theta, vartheta)
        advance_rates(self.integ, d_x, d_y, m_x, m_y)
        self.integ.x_anchor = x_next
        self.integ.y_anchor = y_next
        self.integ.w_anchor = float(w_next[0])
        self.integ.omega_anchor = float(omega_next[0])
        losses = loss_vector(
            f, ctx["bank"], (dec.x_hat, dec.x_bar, x_next), (dec.y_hat, dec.y_bar, y_next)
        )
        agg_residual = aggregator_update(self.agg, losses)
        x_play, y_play = dec.x_play, dec.y_play
        self.ader_x = ader_mod.ader_update(
            self.ader_x, lambda p: np.atleast_1d(f.grad_x(float(p[0]), y_play))
        )
        self.ader_y = ader_mod.ader_update(
            self.ader_y, lambda p: np.atleast_1d(f.grad_y_neg(x_play, float(p[0])))
        )
        self.rounds_used += 1
        return {
            "delta_x": d_x,
            "delta_y": d_y,
            "meta_x": m_x,
            "meta_y": m_y,
            "agg_residual": agg_residual,
            "losses": losses,
            "A": A,
            "Lam": Lam,
        }


class AderPairAlgorithm(_TwoPhase):
    """The adaptive pair run standalone: plays its own predictions."""

    def __init__(self, X: BoxDomain, Y: BoxDomain, grad_bound: float = 4.0, t0: int = 64):
        super().__init__()
        self.X, self.Y = X, Y
        self.grad_bound = grad_bound
        self.epoch = 0
        self.epoch_horizon = t0
        self.rounds_used = 0
        self._init_epoch_states()
        self._play: Optional[tuple] = None

    def _init_epoch_states(self):
        self.ader_x = ader_mod.ader_new(self.X, self.grad_bound, self.epoch_horizon)
        self.ader_y = ader_mod.ader_new(self.Y, self.grad_bound, self.epoch_horizon)

    def _maybe_roll_epoch(self):
        if self.rounds_used >= self.epoch_horizon:
            self.epoch += 1
            self.epoch_horizon *= 2
            self.rounds_used = 0
            self._init_epoch_states()

    def decide(self, bank=None) -> Decision:
        self._begin_decide()
        self._maybe_roll_epoch()
        x = float(ader_mod.ader_predict(self.ader_x)[0])
        y = float(ader_mod.ader_predict(self.ader_y)[0])
        self._play = (x, y)
        return Decision(x, y, {"epoch": self.epoch})

    def observe(self, f: PayoffFunction) -> dict:
        self._begin_observe()
        x_play, y_play = self._play
        self.ader_x = ader_mod.ader_update(
            self.ader_x, lambda p: np.atleast_1d(f.grad_x(float(p[0]), y_play))
        )
        self.ader_y = ader_mod.ader_update(
            self.ader_y, lambda p: np.atleast_1d(f.grad_y_neg(x_play, float(p[0])))
        )
        self.rounds_used += 1
        return {}


class OptOppmAlgorithm(_TwoPhase):
    """Baseline wrapper: single-predictor optimistic proximal point."""

    def __init__(self, X: BoxDomain, Y: BoxDomain, t0: int = 64, epsilon: float = 1.0):
        super().__init__()
        self.X, self.Y = X, Y
        self.epsilon = epsilon
        self.epoch = 0
        self.epoch_horizon = t0
        self.rounds_used = 0
        self._init_epoch_states()
        self._round_ctx = None

    def _init_epoch_states(self):
        self.state = OptOppmState.fresh(
            self.X, self.Y, default_constants(self.X, self.Y, self.epoch_horizon, self.epsilon)
        )

    def _maybe_roll_epoch(self):
        if self.rounds_used >= self.epoch_horizon:
            self.epoch += 1
            self.epoch_horizon *= 2
            self.rounds_used = 0
            self._init_epoch_states()

    def decide(self, bank: Sequence[PayoffFunction]) -> Decision:
        self._begin_decide()
        if len(bank) < 1:
            raise InputError("baseline needs one predictor")
        self._maybe_roll_epoch()
        h = bank[0]
        x, y, iters, ok = optoppm_decide(self.state, h)
        self._round_ctx = {"h": h, "x": x, "y": y}
        diag = {
            "eta": self.state.eta,
            "gamma": self.state.gamma,
            "solver_iters": iters,
            "solver_flag": "fixed-point" if ok else "uncertified",
            "epoch": self.epoch,
        }
        return Decision(x, y, diag)

    def observe(self, f: PayoffFunction) -> dict:
        self._begin_observe()
        ctx = self._round_ctx
        self._round_ctx = None
        nu_x, nu_y = optoppm_update(self.state, f, ctx["h"], ctx["x"], ctx["y"])
        self.rounds_used += 1
        return {"nu_x": nu_x, "nu_y": nu_y}


def doubling_epochs(alg, t: int) -> None:
    """Roll epochs until global round ``t`` fits the cumulative budget.

    Epoch m hosts ``t0 * 2^m`` rounds, so epochs 0..m cover
    ``t0 * (2^(m+1) - 1)`` rounds in total. Each roll doubles the horizon
    and re-initializes every sub-state (full reset: fresh rates and halved
    clipping floors). Traces are kept by the caller and survive rolls
    untouched. The algorithms also roll themselves inside ``decide``; this
    entry point exists for explicit schedule control.
    """
    t0 = alg.epoch_horizon // (1 << alg.epoch)
    while t > t0 * ((1 << (alg.epoch + 1)) - 1):
        alg.epoch += 1
        alg.epoch_horizon *= 2
        alg.rounds_used = 0
        alg._init_epoch_states()


def play_round(alg, bank, f: PayoffFunction) -> tuple[float, float, dict]:
    """Convenience one-shot round for payoffs fixed in advance: decide on
    the bank, then observe ``f``. Harness loops call the two phases
    directly because adversarial environments create ``f`` from the play.
    """
    decision = alg.decide(bank)
    diag2 = alg.observe(f)
    return decision.x, decision.y, {**decision.diag, **diag2}
