"""
Base Gain Sampler
Abstract interface for drawing Nakagami-m power gains
"""
from abc import ABC, abstractmethod
from enum import Enum
from typing import Tuple

import numpy as np

from ..channel import LinkFading


class SamplerKind(Enum):
    ERLANG = "erlang"
    GAMMA = "gamma"


class BaseGainSampler(ABC):
    """Abstract base class for Gamma(m, λ) branch-gain samplers"""

    @abstractmethod
    def branch_gains(self, rng: np.random.Generator, m: int, lam: float, size: Tuple[int, ...]) -> np.ndarray:
        """Draw i.i.d. Gamma(m, λ) gains of the given shape"""
        pass

    @property
    @abstractmethod
    def kind(self) -> SamplerKind:
        """Return sampler type"""
        pass

    def link_gains(self, rng: np.random.Generator, link: LinkFading, n: int, antennas: int = 1) -> np.ndarray:
        """Per-branch gains of one link, shape (n, antennas)"""
        return self.branch_gains(rng, link.m, link.lam, (n, antennas))

    def mrc_gains(self, rng: np.random.Generator, link: LinkFading, n: int, antennas: int = 1) -> np.ndarray:
        """Post-combining gain Σ_u g_u, distributed Gamma(antennas·m, λ)"""
        return self.link_gains(rng, link, n, antennas).sum(axis=1)
