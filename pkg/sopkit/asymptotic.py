"""
High-SNR asymptotics
SOP as the interference cap γ̄_I grows with σ_i, δ and σ_J held fixed.

Without a jammer each hop's secure probability tends to A(1) with a 1/γ̄_I
correction A4. With a jammer the first hop's outage vanishes as
γ̄_I^{-min(a, c)} (a = L_R m_{S_iR}, c = L_E m_{S_JE}), with an extra
log γ̄_I factor when a = c.
"""
import logging
import math
import warnings
from enum import Enum
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict

from .analytic import InterferenceLink, Scenario, hop1_link, hop2_link, source_pairs
from .channel import DerivedCoefficients, FadingSet, NetworkConfig, derive_coefficients
from .errors import CaseMismatch, LowSnrWarning
from .specfun import GammaKind, inc_gamma, log_gamma, meijer_g1222

logger = logging.getLogger(__name__)


class AsymptoticRelation(str, Enum):
    LR_M_LESS = "LR_m_less"        # a < c
    LR_M_GREATER = "LR_m_greater"  # a > c
    EQUAL_ONE = "equal_one"        # a = c = 1
    EQUAL_GT_ONE = "equal_gt_one"  # a = c > 1


class Hop(int, Enum):
    FIRST = 1
    SECOND = 2


class AsymptoticCase(BaseModel):
    """First-hop decay with a jammer: coefficient · (log γ̄_I)^{log_factor} / γ̄_I^exponent."""

    model_config = ConfigDict(frozen=True)

    relation: AsymptoticRelation
    exponent: int
    log_factor: bool
    coefficient: float

    def hop1_outage(self, gbar_I: float) -> float:
        value = self.coefficient / gbar_I ** self.exponent
        return value * math.log(gbar_I) if self.log_factor else value


class AsymptoticReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    gbar_I: float
    raw: float
    value: float
    low_snr: bool = False
    cases: Tuple[AsymptoticCase, ...] = ()


def classify(co: DerivedCoefficients) -> AsymptoticRelation:
    a, c = co.a_R, co.c_J
    if a < c:
        return AsymptoticRelation.LR_M_LESS
    if a > c:
        return AsymptoticRelation.LR_M_GREATER
    return AsymptoticRelation.EQUAL_ONE if a == 1 else AsymptoticRelation.EQUAL_GT_ONE


# ============================================================================
# Coefficient families
# ============================================================================

def _hop_shapes(co: DerivedCoefficients, hop: Hop) -> Tuple[int, int, float, float, InterferenceLink]:
    if Hop(hop) is Hop.FIRST:
        return co.a_R, co.b_E, co.lam_SiR, co.lam_SiE, hop1_link(co)
    return co.a_D, co.b_RE, co.lam_RD, co.lam_RE, hop2_link(co)


def _cap_moment(m: int, lam: float, phi: float, ratio: float, n: int) -> float:
    """E[max(ratio, x)^n] for x ~ Gamma(m, λ) with φ = λ·ratio."""
    capped = ratio ** n * inc_gamma(m, phi, GammaKind.LOWER)
    limited = inc_gamma(m + n, phi, GammaKind.UPPER) / lam ** n
    return (capped + limited) / math.exp(log_gamma(m))


def coeff_A(co: DerivedCoefficients, hop: Union[Hop, int], y: int) -> float:
    """
    A(y) = G^{1,2}_{2,2}(λ_e/(λ_c γ) | -(a - y), 1; b, 0) / (Γ(b) Γ(a))

    A(1) is the limiting secure probability of the hop; A(2) vanishes for a = 1.
    """
    if y not in (1, 2):
        raise ValueError(f"y must be 1 or 2, got {y}")
    a, b, lam_c, lam_e, _ = _hop_shapes(co, hop)
    if a - y < 0:
        return 0.0
    z = lam_e / (lam_c * co.gamma_thr)
    return meijer_g1222(a - y, b, z) / math.exp(log_gamma(a) + log_gamma(b))


def coeff_A4(co: DerivedCoefficients, hop: Union[Hop, int]) -> float:
    """
    1/γ̄_I correction to the hop's secure probability:
    ξ E[max(ratio, x)] ((a - 1) A(2) - A(1)), x the transmitter-to-primary gain.
    """
    a, _, _, _, link = _hop_shapes(co, hop)
    moment = _cap_moment(link.m, link.lam, link.phi, link.ratio, 1)
    return link.xi * moment * ((a - 1) * coeff_A(co, hop, 2) - coeff_A(co, hop, 1))


def _jammer_weight(co: DerivedCoefficients) -> float:
    """λ_{S_JE}^c E[max(σ_J, x_{S_JP})^c] / Γ(c)"""
    c = co.c_J
    moment = _cap_moment(co.m_SJP, co.lam_SJP, co.varphi_J, co.sigma_J, c)
    return math.exp(c * math.log(co.lam_SJE) - log_gamma(c)) * moment


def _coeff_C1(co: DerivedCoefficients) -> float:
    a, b, c, gamma = co.a_R, co.b_E, co.c_J, co.gamma_thr
    terms = []
    for j in range(a + 1):
        eve = math.exp(log_gamma(b + j) - log_gamma(b) - j * math.log(co.lam_SiE))
        jam = math.exp(j * math.log(co.lam_SJE) + log_gamma(c - j) - log_gamma(c))
        jam *= _cap_moment(co.m_SJP, co.lam_SJP, co.varphi_J, co.sigma_J, j)
        src = _cap_moment(co.m_SiP, co.lam_SiP, co.varphi_Si, co.sigma_i, a - j)
        terms.append(math.comb(a, j) * gamma ** j * (gamma - 1.0) ** (a - j) * eve * jam * src)
    return math.exp(a * math.log(co.lam_SiR) - log_gamma(a + 1)) * math.fsum(terms)


def _coeff_C2(co: DerivedCoefficients) -> float:
    a, b, c, gamma = co.a_R, co.b_E, co.c_J, co.gamma_thr
    terms = []
    for h, omega in enumerate(co.omega_h):
        p = a + b - c - h - 1
        terms.append(omega * math.exp(log_gamma(c + h + 1) + log_gamma(p) - p * math.log(co.varpi)))
    log_scale = (a * math.log(gamma * co.lam_SiR) - math.log(c) - log_gamma(a) - log_gamma(b)
                 - c * math.log(co.lam_SiE))
    return math.exp(log_scale) * math.fsum(terms) * _jammer_weight(co)


def _coeff_C3(co: DerivedCoefficients) -> float:
    a, b = co.a_R, co.b_E
    log_scale = (a * math.log(co.gamma_thr * co.lam_SiR / co.lam_SiE) + log_gamma(a + b)
                 - log_gamma(b) - log_gamma(a + 1))
    return math.exp(log_scale) * _jammer_weight(co)


_CASE_OF_RELATION = {
    AsymptoticRelation.LR_M_LESS: 1,
    AsymptoticRelation.LR_M_GREATER: 2,
    AsymptoticRelation.EQUAL_ONE: 3,
    AsymptoticRelation.EQUAL_GT_ONE: 3,
}


def coeff_C(case: int, co: DerivedCoefficients) -> float:
    """
    Leading first-hop outage coefficient with a jammer.

    Args:
        case: 1 for a < c (decay γ̄_I^{-a}), 2 for a > c (γ̄_I^{-c}),
            3 for a = c (log γ̄_I / γ̄_I^{a})

    Raises:
        CaseMismatch: case disagrees with the (a, c) relation of `co`
    """
    expected = _CASE_OF_RELATION[classify(co)]
    if case != expected:
        raise CaseMismatch(f"case {case} requested but a={co.a_R}, c={co.c_J} is case {expected}")
    return {1: _coeff_C1, 2: _coeff_C2, 3: _coeff_C3}[case](co)


def jammer_case(co: DerivedCoefficients) -> AsymptoticCase:
    relation = classify(co)
    case = _CASE_OF_RELATION[relation]
    return AsymptoticCase(
        relation=relation,
        exponent=min(co.a_R, co.c_J),
        log_factor=case == 3,
        coefficient=coeff_C(case, co),
    )


# ============================================================================
# System asymptote
# ============================================================================

def _pair_nojammer(cos: List[DerivedCoefficients], gbar_I: float) -> float:
    p1 = [coeff_A(co, Hop.FIRST, 1) for co in cos]
    p2 = [coeff_A(co, Hop.SECOND, 1) for co in cos]
    q1 = [coeff_A4(co, Hop.FIRST) for co in cos]
    q2 = [coeff_A4(co, Hop.SECOND) for co in cos]
    secure = math.prod(x * y for x, y in zip(p1, p2))
    correction = []
    for k in range(len(cos)):
        others = math.prod(p1[j] * p2[j] for j in range(len(cos)) if j != k)
        correction.append(others * (p1[k] * q2[k] + p2[k] * q1[k]))
    return 1.0 - secure - math.fsum(correction) / gbar_I


def _pair_jammer(cos: List[DerivedCoefficients], gbar_I: float) -> Tuple[float, List[AsymptoticCase]]:
    cases = [jammer_case(co) for co in cos]
    p2 = [coeff_A(co, Hop.SECOND, 1) for co in cos]
    q2 = [coeff_A4(co, Hop.SECOND) for co in cos]
    correction = []
    for k, case in enumerate(cases):
        # only first-hop terms of order 1/γ̄_I survive the expansion
        first_hop = case.hop1_outage(gbar_I) if case.exponent == 1 else 0.0
        others = math.prod(p2[j] for j in range(len(cos)) if j != k)
        correction.append(others * (q2[k] / gbar_I - p2[k] * first_hop))
    return 1.0 - math.prod(p2) - math.fsum(correction), cases


def sop_asymptotic(cfg: NetworkConfig, fading: FadingSet, scenario: Union[Scenario, str, None] = None,
                   collapse: Optional[bool] = None) -> AsymptoticReport:
    """
    Asymptotic system SOP at cfg.gbar_I, averaged over (i, J) like the
    exact evaluator. The raw value may leave [0, 1] at moderate SNR; it is
    then clamped, flagged and a LowSnrWarning is emitted.
    """
    scenario = Scenario.resolve(cfg, scenario)
    if cfg.M == 0:
        return AsymptoticReport(scenario=scenario, gbar_I=cfg.gbar_I, raw=0.0, value=0.0)
    if collapse is None:
        collapse = cfg.identical_sources

    values, cases = [], []
    for i, J in source_pairs(cfg, scenario, collapse):
        cos = [derive_coefficients(cfg, fading, i, k, J) for k in range(cfg.M)]
        if scenario is Scenario.JAMMER:
            value, pair_cases = _pair_jammer(cos, cfg.gbar_I)
            if not cases:
                cases = pair_cases
        else:
            value = _pair_nojammer(cos, cfg.gbar_I)
        values.append(value)

    raw = math.fsum(values) / len(values)
    clamped = min(max(raw, 0.0), 1.0)
    low_snr = clamped != raw
    if low_snr:
        logger.warning(f"[asym] {scenario.value}: raw asymptote {raw:.6g} clamped at gbar_I={cfg.gbar_I:.6g}")
        warnings.warn(f"asymptotic SOP {raw:.6g} outside [0, 1]; gbar_I={cfg.gbar_I:.6g} is too low",
                      LowSnrWarning, stacklevel=2)
    return AsymptoticReport(scenario=scenario, gbar_I=cfg.gbar_I, raw=raw, value=clamped,
                            low_snr=low_snr, cases=tuple(cases))
