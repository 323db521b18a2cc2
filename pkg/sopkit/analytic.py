"""
Exact SOP
Closed-form per-hop secrecy outage probabilities and their aggregation
into the system SOP, averaged over sources (and jammers).
"""
import logging
import math
import threading
from enum import Enum
from typing import Callable, Dict, Hashable, List, NamedTuple, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from .channel import DerivedCoefficients, FadingSet, NetworkConfig, derive_coefficients
from .errors import RangeError
from .specfun import (GammaKind, inc_gamma, log_gamma, log_upper_gamma, meijer_g1222, meijer_m1,
                      meijer_m2, meijer_m3_complement, regularized_lower)

logger = logging.getLogger(__name__)

RANGE_SLACK = 1e-9


class Scenario(str, Enum):
    JAMMER = "jammer"
    NO_JAMMER = "no_jammer"

    @classmethod
    def resolve(cls, cfg: NetworkConfig, scenario: Union["Scenario", str, None] = None) -> "Scenario":
        """An explicit scenario wins; otherwise cfg.jammer_present decides."""
        if scenario is None:
            return cls.JAMMER if cfg.jammer_present else cls.NO_JAMMER
        return cls(scenario)


# ============================================================================
# Result models
# ============================================================================

class PairBreakdown(BaseModel):
    model_config = ConfigDict(frozen=True)

    i: int
    J: Optional[int] = None
    sop1_per_k: Tuple[float, ...]
    sop2_per_k: Tuple[float, ...]
    system: float


class SopBreakdown(BaseModel):
    """
    Per-hop terms of the first (i, J) pair plus the system SOP averaged
    over all pairs. With identical sources there is a single pair and
    system = 1 - Π_k (1 - sop1_k)(1 - sop2_k).
    """

    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    sop1_per_k: Tuple[float, ...]
    sop2_per_k: Tuple[float, ...]
    system: float
    pairs: Tuple[PairBreakdown, ...] = ()


# ============================================================================
# Memo of per-hop terms
# ============================================================================

class _HopCache:
    """Thread-safe memo of per-hop SOP terms keyed on the coefficients they depend on."""

    def __init__(self):
        self._lock = threading.Lock()
        self._store: Dict[Hashable, float] = {}

    def get_or_compute(self, key: Hashable, compute: Callable[[], float]) -> float:
        with self._lock:
            if key in self._store:
                return self._store[key]
        value = compute()
        with self._lock:
            self._store[key] = value
            size = len(self._store)
        logger.debug(f"[cache] {key[0]} stored ({size} entries)")
        return value

    def clear(self) -> None:
        with self._lock:
            self._store.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)


_hop_cache = _HopCache()


def clear_cache() -> None:
    _hop_cache.clear()


# ============================================================================
# Shared pieces
# ============================================================================

class InterferenceLink(NamedTuple):
    """Transmitter-to-primary link and power ratio of one hop."""

    m: int
    lam: float
    phi: float
    ratio: float
    xi: float
    gbar_I: float


def _checked(value: float, what: str) -> float:
    if not (-RANGE_SLACK <= value <= 1.0 + RANGE_SLACK):
        raise RangeError(f"{what} evaluated to {value!r}, outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def _interference_average(n: int, link: InterferenceLink) -> float:
    """
    E[e^{-ξ/Φ} Φ^{-n}] over the interference gain x ~ Gamma(m, λ),
    with Φ = γ̄_I/ratio below the breakpoint and γ̄_I/x above it.
    """
    m, lam, phi, ratio, xi, gbar_I = link
    capped = inc_gamma(m, phi, GammaKind.LOWER) * math.exp(-ratio * xi / gbar_I) * (ratio / gbar_I) ** n
    rate = lam + xi / gbar_I
    log_limited = (m * math.log(lam) + log_upper_gamma(m + n, phi + ratio * xi / gbar_I)
                   - n * math.log(gbar_I) - (m + n) * math.log(rate))
    return (capped + math.exp(log_limited)) / math.exp(log_gamma(m))


def hop1_link(co: DerivedCoefficients) -> InterferenceLink:
    return InterferenceLink(co.m_SiP, co.lam_SiP, co.varphi_Si, co.sigma_i, co.xi_SiR, co.gbar_I)


def hop2_link(co: DerivedCoefficients) -> InterferenceLink:
    return InterferenceLink(co.m_RP, co.lam_RP, co.varphi_R, co.delta, co.xi_RD, co.gbar_I)


def _binomial_weights(a: int, gamma: float) -> List[float]:
    return [math.comb(a - 1, j) * (gamma - 1.0) ** (a - 1 - j) for j in range(a)]


def _hop_without_jammer(a: int, b: int, lam_main: float, lam_eve: float, gamma: float,
                        link: InterferenceLink) -> float:
    """
    1 - Σ_j B_j λ^{a-j-1} G^{1,2}_{2,2}(λ_e/(λγ) | -j, 1; b, 0) E[e^{-ξ/Φ}Φ^{-(a-j-1)}] / (Γ(a)Γ(b))

    Both hops without a jammer share this shape.
    """
    z = lam_eve / (lam_main * gamma)
    terms = []
    for j, weight in enumerate(_binomial_weights(a, gamma)):
        if weight == 0.0:
            continue
        n = a - j - 1
        terms.append(weight * lam_main ** n * meijer_g1222(j, b, z) * _interference_average(n, link))
    return 1.0 - math.fsum(terms) / math.exp(log_gamma(a) + log_gamma(b))


# ============================================================================
# Per-hop closed forms
# ============================================================================

def hop1_floor(co: DerivedCoefficients) -> float:
    """Pr(γ_R < γ - 1): main-link outage before any eavesdropping."""
    if co.xi_SiR == 0:
        return 0.0
    capped = inc_gamma(co.m_SiP, co.varphi_Si, GammaKind.LOWER) * regularized_lower(
        co.a_R, co.sigma_i * co.xi_SiR / co.gbar_I)
    z = co.xi_SiR / (co.lam_SiP * co.gbar_I)
    limited = meijer_m3_complement(co, z) / math.exp(log_gamma(co.a_R))
    return (capped + limited) / math.exp(log_gamma(co.m_SiP))


def _sop1_jammer(co: DerivedCoefficients) -> float:
    link = hop1_link(co)
    z1 = co.varpi * co.theta
    z2 = co.varsigma * co.varpi / co.gbar_I
    jammer_capped = inc_gamma(co.m_SJP, co.varphi_J, GammaKind.LOWER)
    terms = []
    for l, upsilon in enumerate(co.upsilon_l):
        if upsilon == 0.0:
            continue
        average = _interference_average(co.a_R - l - 1, link)
        for h, omega in enumerate(co.omega_h):
            kernel = jammer_capped * meijer_m1(h, l, co, z1) + meijer_m2(h, l, co, z2)
            terms.append(omega * upsilon * average * kernel / co.varpi ** co.mu(h, l))
    value = hop1_floor(co) + co.gamma_thr * co.alpha * math.fsum(terms)
    return _checked(value, "SOP1 with jammer")


def sop1_jammer(coeffs: DerivedCoefficients) -> float:
    """First-hop SOP when a friendly jammer degrades eavesdropper k."""
    return _hop_cache.get_or_compute(("sop1_jammer", coeffs), lambda: _sop1_jammer(coeffs))


def sop1_nojammer(coeffs: DerivedCoefficients) -> float:
    """First-hop SOP without jamming."""
    co = coeffs
    key = ("sop1_nojammer", co.a_R, co.b_E, co.lam_SiR, co.lam_SiE, co.gamma_thr, hop1_link(co))
    return _hop_cache.get_or_compute(key, lambda: _checked(
        _hop_without_jammer(co.a_R, co.b_E, co.lam_SiR, co.lam_SiE, co.gamma_thr, hop1_link(co)),
        "SOP1 without jammer"))


def sop2(coeffs: DerivedCoefficients) -> float:
    """Second-hop SOP (relay to destination, eavesdropper k listening)."""
    co = coeffs
    key = ("sop2", co.a_D, co.b_RE, co.lam_RD, co.lam_RE, co.gamma_thr, hop2_link(co))
    return _hop_cache.get_or_compute(key, lambda: _checked(
        _hop_without_jammer(co.a_D, co.b_RE, co.lam_RD, co.lam_RE, co.gamma_thr, hop2_link(co)),
        "SOP2"))


# ============================================================================
# System SOP
# ============================================================================

def source_pairs(cfg: NetworkConfig, scenario: Scenario, collapse: bool) -> List[Tuple[int, Optional[int]]]:
    """(i, J) pairs averaged by the system SOP; J is None without a jammer."""
    if scenario is Scenario.NO_JAMMER:
        return [(0, None)] if collapse else [(i, None) for i in range(cfg.N)]
    if collapse:
        return [(0, 1)]
    return [(i, J) for i in range(cfg.N) for J in range(cfg.N) if J != i]


def sop_system(cfg: NetworkConfig, fading: FadingSet, scenario: Union[Scenario, str, None] = None,
               collapse: Optional[bool] = None) -> SopBreakdown:
    """
    System SOP: average over (i, J) of 1 - Π_k (1 - SOP1_k)(1 - SOP2_k)

    Args:
        scenario: defaults to cfg.jammer_present
        collapse: evaluate a single representative pair; defaults to True
            when all sources share their power budgets

    Returns:
        SopBreakdown
    """
    scenario = Scenario.resolve(cfg, scenario)
    if cfg.M == 0:
        return SopBreakdown(scenario=scenario, sop1_per_k=(), sop2_per_k=(), system=0.0)
    if collapse is None:
        collapse = cfg.identical_sources

    hop1 = sop1_jammer if scenario is Scenario.JAMMER else sop1_nojammer
    pairs = []
    for i, J in source_pairs(cfg, scenario, collapse):
        sop1_k, sop2_k = [], []
        for k in range(cfg.M):
            co = derive_coefficients(cfg, fading, i, k, J)
            sop1_k.append(hop1(co))
            sop2_k.append(sop2(co))
        secure = math.prod((1.0 - s1) * (1.0 - s2) for s1, s2 in zip(sop1_k, sop2_k))
        pairs.append(PairBreakdown(i=i, J=J, sop1_per_k=tuple(sop1_k), sop2_per_k=tuple(sop2_k),
                                   system=1.0 - secure))

    system = math.fsum(p.system for p in pairs) / len(pairs)
    logger.debug(f"[exact] {scenario.value}: {len(pairs)} pair(s), SOP={system:.6g}")
    return SopBreakdown(scenario=scenario, sop1_per_k=pairs[0].sop1_per_k, sop2_per_k=pairs[0].sop2_per_k,
                        system=system, pairs=tuple(pairs))
