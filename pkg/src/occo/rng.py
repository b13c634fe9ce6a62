"""Seedable, splittable random streams for reproducible experiments.

Streams are Philox-4x64 counter-based generators keyed by the 64-bit pair
``(seed, stream_id)``, so distinct stream ids derived from one seed are
independent by construction and a run's environment randomness cannot be
perturbed by how (or whether) any other stream is consumed.

Stream ids used by the harness:

* ``STREAM_ENVIRONMENT`` (0) -- per-round environment draws (Case III's
  uniform radius, Case IV's Gaussian angle).
* ``STREAM_ALGORITHM`` (1) -- reserved for randomized algorithms; every
  algorithm shipped here is deterministic and never touches it.

Gaussians come from the Box-Muller transform. Each ``normal()`` call consumes
exactly two uniforms and discards the second variate, so one draw per round
always advances the stream by the same amount.
"""

from __future__ import annotations

import math

import numpy as np

STREAM_ENVIRONMENT = 0
STREAM_ALGORITHM = 1


class RngStream:
    """One independent random stream.

    Parameters
    ----------
    seed : int
        Master seed of the run (any Python int; reduced mod 2**64).
    stream : int
        Stream id; streams with different ids never overlap.
    """

    def __init__(self, seed: int, stream: int = STREAM_ENVIRONMENT):
        key = np.array([seed % (1 << 64), stream % (1 << 64)], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))
        self.seed = seed
        self.stream = stream

    def uniform(self) -> float:
        """Uniform draw on [0, 1)."""
        return float(self._gen.random())

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        """Gaussian draw via Box-Muller (cosine branch; sine variate discarded)."""
        u1 = 1.0 - self._gen.random()  # (0, 1], keeps log finite
        u2 = self._gen.random()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        return mean + std * z
