"""
Gamma Gain Sampler
numpy's general-shape Gamma generator, kept for cross-checking the Erlang path
"""
from typing import Tuple

import numpy as np

from .base import BaseGainSampler, SamplerKind


class GammaSampler(BaseGainSampler):

    @property
    def kind(self) -> SamplerKind:
        return SamplerKind.GAMMA

    def branch_gains(self, rng: np.random.Generator, m: int, lam: float, size: Tuple[int, ...]) -> np.ndarray:
        if not m > 0:
            raise ValueError(f"Gamma shape must be > 0, got {m}")
        return rng.gamma(shape=m, scale=1.0 / lam, size=size)
