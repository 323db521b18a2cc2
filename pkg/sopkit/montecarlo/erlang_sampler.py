"""
Erlang Gain Sampler
Integer-shape Gamma variates as sums of exponentials
"""
from typing import Tuple

import numpy as np

from .base import BaseGainSampler, SamplerKind


class ErlangSampler(BaseGainSampler):
    """Gamma(m, λ) = (E_1 + ... + E_m)/λ with E_r standard exponential"""

    @property
    def kind(self) -> SamplerKind:
        return SamplerKind.ERLANG

    def branch_gains(self, rng: np.random.Generator, m: int, lam: float, size: Tuple[int, ...]) -> np.ndarray:
        if m < 1 or int(m) != m:
            raise ValueError(f"Erlang sampling needs an integer shape >= 1, got {m}")
        return rng.standard_exponential(tuple(size) + (int(m),)).sum(axis=-1) / lam
