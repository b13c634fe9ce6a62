"""Multi-predictor aggregation by clipped Hedge with a self-tuning rate.

Keeps a weight vector over d predictor sequences on the clipped simplex
with per-coordinate floor 1/T, emits the weighted mixture as the combined
predictor, and adapts its rate from accumulated update-progress residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, InvariantViolation
from .geometry import ClippedSimplex, hedge_step, kl_divergence
from .integration import RAISE_TOL
from .payoffs import MixturePayoff, PayoffFunction


@dataclass
class AggregatorState:
    """Clipped-Hedge weights plus the rate's residual sum."""

    d: int
    T: int
    epsilon: float = 1.0
    weights: np.ndarray = None
    residual_sum: float = 0.0

    def __post_init__(self):
        if self.d < 1:
            raise InputError("need at least one predictor")
        if self.T < self.d:
            raise InputError("horizon must be at least the number of predictors")
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")
        if self.weights is None:
            self.weights = np.full(self.d, 1.0 / self.d)

    @property
    def rate(self) -> float:
        """Self-tuning rate ln(T) / (epsilon + accumulated residuals)."""
        return math.log(self.T) / (self.epsilon + self.residual_sum)

    def simplex(self) -> ClippedSimplex:
        # alpha = d/T puts the per-coordinate floor at 1/T.
        return ClippedSimplex(dim=self.d, alpha=self.d / self.T)


def aggregate(state: AggregatorState, bank: Sequence[PayoffFunction]) -> PayoffFunction:
    """Combined predictor: the current-weight mixture of the bank."""
    if len(bank) != state.d:
        raise InputError(f"bank has {len(bank)} predictors, expected {state.d}")
    if state.d == 1:
        return bank[0]
    return MixturePayoff(bank, state.weights.copy())


def aggregator_update(state: AggregatorState, losses: np.ndarray) -> float:
    """Advance the weights on a nonnegative loss vector; returns the round's
    residual.

    The new weights come first (clipped-Hedge step at the current rate),
    then the residual ``<L, old - new> - KL(new, old)/rate`` -- nonnegative
    by optimality of the step -- is added to the rate denominator.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.size != state.d:
        raise InputError("loss vector size mismatch")
    if np.any(losses < 0):
        raise InputError("losses must be nonnegative")
    rate = state.rate
    old = state.weights
    new = hedge_step(old, losses, rate, state.simplex())
    residual = float(losses @ (old - new)) - kl_divergence(new, old) / rate
    if residual < -RAISE_TOL:
        raise InvariantViolation(f"aggregator residual {residual} below -{RAISE_TOL}")
    state.weights = new
    state.residual_sum += max(residual, 0.0)
    return residual
