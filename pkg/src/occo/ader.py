"""Meta-expert online learner pair used as the adaptive strategy source.

Each side (x-player minimizing, y-player maximizing the negated loss) runs
one such learner: a bank of projected-gradient experts on a geometric grid
of step sizes under an exponentiated-weights meta layer. The construction is
fully gradient-linearized: one gradient of the round's loss is taken at the
meta prediction, every expert performs a projected step with that surrogate
gradient, and the meta layer scores experts by the linear surrogate at their
pre-update iterates. The horizon enters only through the grid and the meta
rate; unknown horizons are handled by the runtime's doubling schedule, not
here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InputError
from .geometry import BoxDomain

GradOracle = Callable[[np.ndarray], np.ndarray]
ValueOracle = Callable[[np.ndarray], float]


@dataclass
class AderState:
    """Expert grid plus meta weights for one player.

    ``iterates`` has one row per expert; ``steps`` holds the geometric grid
    of step sizes (ratio 2); ``meta_weights`` is a distribution over experts.
    """

    domain: BoxDomain
    horizon: int
    g_bound: float
    steps: np.ndarray
    iterates: np.ndarray
    meta_weights: np.ndarray
    meta_rate: float


def ader_new(domain: BoxDomain, G: float, T: int) -> AderState:
    """Initialize a learner for gradient bound G over T rounds.

    The grid has ``ceil(log2(1 + 2T)/2) + 1`` experts with step sizes
    ``2^(i-1) * D / (G * sqrt(T (1 + 2T)))``, spanning the optimal tuning for
    comparator path lengths from 0 to D*T. Initial meta weights are
    proportional to ``1/(i (i+1))``; the meta rate is ``sqrt(8/T)`` scaled to
    the surrogate-loss range ``G * D``. All experts start at the domain
    center.
    """
    if T < 1:
        raise InputError("horizon must be at least 1")
    if G <= 0:
        raise InputError("gradient bound must be positive")
    D = domain.diameter()
    n_experts = math.ceil(0.5 * math.log2(1 + 2 * T)) + 1
    eta_min = D / (G * math.sqrt(T * (1 + 2 * T)))
    steps = eta_min * np.exp2(np.arange(n_experts))
    idx = np.arange(1, n_experts + 1)
    weights = 1.0 / (idx * (idx + 1.0))
    weights /= weights.sum()
    iterates = np.tile(domain.center(), (n_experts, 1))
    meta_rate = math.sqrt(8.0 / T) / (G * D)
    return AderState(
        domain=domain,
        horizon=T,
        g_bound=G,
        steps=steps,
        iterates=iterates,
        meta_weights=weights,
        meta_rate=meta_rate,
    )


def ader_predict(s: AderState) -> np.ndarray:
    """Meta-weighted average of the expert iterates; feasible by convexity."""
    return s.meta_weights @ s.iterates


def ader_update(
    s: AderState,
    loss_grad_at: GradOracle,
    loss_value_at: Optional[ValueOracle] = None,
) -> AderState:
    """One round of the linearized meta-expert update.

    The surrogate gradient is ``g = loss_grad_at(prediction)``. Experts move
    by ``-step * g`` with a box projection; the meta weights get an
    exponentiated update on the surrogate losses ``<g, iterate>`` evaluated
    at the pre-update iterates, then renormalize. ``loss_value_at`` is
    accepted for interface parity with non-linearized variants and unused.
    """
    del loss_value_at
    g = np.atleast_1d(np.asarray(loss_grad_at(ader_predict(s)), dtype=float))
    surrogate = s.iterates @ g
    scaled = s.meta_rate * (surrogate - surrogate.min())
    new_weights = s.meta_weights * np.exp(-scaled)
    new_weights /= new_weights.sum()
    moved = s.iterates - s.steps[:, None] * g
    new_iterates = np.clip(moved, s.domain.lower, s.domain.upper)
    return AderState(
        domain=s.domain,
        horizon=s.horizon,
        g_bound=s.g_bound,
        steps=s.steps,
        iterates=new_iterates,
        meta_weights=new_weights,
        meta_rate=s.meta_rate,
    )
