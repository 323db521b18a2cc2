"""
Channel model
Network parameterization, Nakagami-m link statistics and the scalar
coefficients shared by the closed-form and asymptotic SOP expressions.
"""
import logging
import math
from enum import Enum
from typing import Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import special

from .errors import DomainError
from .specfun import regularized_lower

logger = logging.getLogger(__name__)


class LinkLabel(str, Enum):
    S_iR = "S_iR"
    RD = "RD"
    S_iE = "S_iE"
    S_JE = "S_JE"
    RE = "RE"
    RP = "RP"
    S_iP = "S_iP"
    S_JP = "S_JP"


class LinkFading(BaseModel):
    """Nakagami-m power gain: Gamma(shape m, rate λ = m/Ω)."""

    model_config = ConfigDict(frozen=True)

    label: LinkLabel
    m: int = Field(ge=1)
    lam: float = Field(gt=0)

    @field_validator("lam")
    @classmethod
    def _finite_rate(cls, v: float) -> float:
        if math.isinf(v) or math.isnan(v):
            raise ValueError("rate must be finite")
        return v


# Reference fading set of the "table1" preset; jammer-role links mirror the source links.
TABLE1_FADING: Dict[LinkLabel, Tuple[int, float]] = {
    LinkLabel.S_iR: (2, 0.1),
    LinkLabel.S_iP: (3, 0.3),
    LinkLabel.S_iE: (5, 0.6),
    LinkLabel.S_JE: (5, 0.6),
    LinkLabel.S_JP: (3, 0.3),
    LinkLabel.RD: (2, 0.1),
    LinkLabel.RE: (4, 0.6),
    LinkLabel.RP: (3, 0.2),
}


class FadingSet(BaseModel):
    """One LinkFading per link class."""

    model_config = ConfigDict(frozen=True)

    S_iR: LinkFading
    RD: LinkFading
    S_iE: LinkFading
    S_JE: LinkFading
    RE: LinkFading
    RP: LinkFading
    S_iP: LinkFading
    S_JP: LinkFading

    @model_validator(mode="after")
    def _labels_match(self) -> "FadingSet":
        for label in LinkLabel:
            link = getattr(self, label.value)
            if link.label is not label:
                raise ValueError(f"link stored under {label.value} is labelled {link.label.value}")
        return self

    @classmethod
    def from_pairs(cls, pairs: Dict[LinkLabel, Tuple[int, float]]) -> "FadingSet":
        return cls(**{label.value: LinkFading(label=label, m=m, lam=lam) for label, (m, lam) in pairs.items()})

    @classmethod
    def table1(cls) -> "FadingSet":
        return cls.from_pairs(TABLE1_FADING)

    def link(self, label: LinkLabel) -> LinkFading:
        return getattr(self, LinkLabel(label).value)

    def replace(self, label: LinkLabel, m: Optional[int] = None, lam: Optional[float] = None) -> "FadingSet":
        old = self.link(label)
        new = LinkFading(label=old.label, m=old.m if m is None else m, lam=old.lam if lam is None else lam)
        return self.model_copy(update={old.label.value: new})


class NetworkConfig(BaseModel):
    """
    Node counts, antenna counts, power budgets (linear SNRs, N0 = 1) and
    the secrecy rate. Scalars given for `gbar_S`/`gbar_SJ` apply to every
    source; a scalar `L_E` applies to every eavesdropper.
    """

    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=2)
    M: int = Field(ge=0)
    L_R: int = Field(ge=1)
    L_D: int = Field(ge=1)
    L_E: Tuple[int, ...]
    gbar_S: Tuple[float, ...]
    gbar_SJ: Tuple[float, ...]
    gbar_R: float = Field(gt=0)
    gbar_I: float = Field(gt=0)
    Rs: float = Field(ge=0)
    jammer_present: bool = True  # scenario used when an evaluator is given none

    @model_validator(mode="before")
    @classmethod
    def _broadcast(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if isinstance(data.get("L_E"), int):
            data["L_E"] = (data["L_E"],) * int(data.get("M", 0))
        for key in ("gbar_S", "gbar_SJ"):
            if isinstance(data.get(key), (int, float)):
                data[key] = (float(data[key]),) * int(data.get("N", 0))
        return data

    @model_validator(mode="after")
    def _shapes(self) -> "NetworkConfig":
        if len(self.L_E) != self.M:
            raise ValueError(f"L_E lists {len(self.L_E)} eavesdroppers but M = {self.M}")
        if any(L < 1 for L in self.L_E):
            raise ValueError("every L_E entry must be >= 1")
        for key in ("gbar_S", "gbar_SJ"):
            values = getattr(self, key)
            if len(values) != self.N:
                raise ValueError(f"{key} lists {len(values)} sources but N = {self.N}")
            if any(not (v > 0) or math.isinf(v) for v in values):
                raise ValueError(f"{key} entries must be finite and > 0")
        return self

    @property
    def gamma_thr(self) -> float:
        return 2.0 ** self.Rs

    @property
    def identical_sources(self) -> bool:
        return len(set(self.gbar_S)) == 1 and len(set(self.gbar_SJ)) == 1

    def updated(self, **changes) -> "NetworkConfig":
        """Re-validated copy; scalars broadcast as in the constructor."""
        data = self.model_dump()
        if "M" in changes and "L_E" not in changes:
            base = self.L_E[0] if self.L_E else 1
            changes["L_E"] = (base,) * changes["M"]
        data.update(changes)
        return NetworkConfig(**data)


class DerivedCoefficients(BaseModel):
    """Scalar symbols of the closed forms for one (i, k, J) triple."""

    model_config = ConfigDict(frozen=True)

    gamma_thr: float
    sigma_i: float
    delta: float
    sigma_J: float
    theta: float
    varphi_J: float
    varphi_R: float
    varphi_Si: float
    varsigma: float
    varpi: float
    xi_SiR: float
    xi_RD: float
    kappa: float
    omega_h: Tuple[float, ...]
    alpha: float
    beta: float
    upsilon_l: Tuple[float, ...]
    b_j: Tuple[float, ...]

    # integer shapes after MRC
    a_R: int
    b_E: int
    c_J: int
    a_D: int
    b_RE: int
    m_SiP: int
    m_SJP: int
    m_RP: int

    lam_SiR: float
    lam_SiE: float
    lam_SJE: float
    lam_SiP: float
    lam_SJP: float
    lam_RD: float
    lam_RE: float
    lam_RP: float

    gbar_I: float
    gbar_Si: float
    gbar_SJ: float
    gbar_R: float

    def mu(self, h: int, l: int) -> int:
        return self.b_E - h + l


def gain_cdf(link: LinkFading, antennas: int, x: float) -> float:
    """CDF of the sum of `antennas` i.i.d. Gamma(m, λ) branch gains."""
    if antennas < 1:
        raise DomainError(f"antenna count must be >= 1, got {antennas}")
    if x < 0:
        raise DomainError(f"gain_cdf needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    return regularized_lower(antennas * link.m, link.lam * x)


def effective_snr_scale(gbar_node: ArrayLike, gbar_I: float, g_nodeP: ArrayLike) -> Union[float, np.ndarray]:
    """
    Φ = min(γ̄_node, γ̄_I / g) under the interference cap.

    Broadcasts over arrays of gains (and per-sample node powers); a zero gain
    leaves the peak power.
    """
    with np.errstate(divide="ignore"):
        scale = np.minimum(gbar_node, gbar_I / np.asarray(g_nodeP, dtype=float))
    return float(scale) if np.ndim(scale) == 0 else scale


def derive_coefficients(cfg: NetworkConfig, fading: FadingSet, i: int, k: int,
                        J: Optional[int] = None) -> DerivedCoefficients:
    """
    Compute every scalar used by the closed forms for source i, eavesdropper k
    and jammer J (defaults to the next source; unused without a jammer).
    """
    if not 0 <= i < cfg.N:
        raise IndexError(f"source index {i} out of range for N={cfg.N}")
    if not 0 <= k < cfg.M:
        raise IndexError(f"eavesdropper index {k} out of range for M={cfg.M}")
    if J is None:
        J = (i + 1) % cfg.N
    if not 0 <= J < cfg.N or J == i:
        raise IndexError(f"jammer index {J} invalid for source {i} and N={cfg.N}")
    for label in LinkLabel:
        if not fading.link(label).lam > 0:
            raise DomainError(f"rate of link {label.value} must be > 0")

    f = fading
    gamma = cfg.gamma_thr
    L_E = cfg.L_E[k]
    a_R = cfg.L_R * f.S_iR.m
    b_E = L_E * f.S_iE.m
    c_J = L_E * f.S_JE.m
    a_D = cfg.L_D * f.RD.m
    gbar_Si = cfg.gbar_S[i]
    gbar_SJ = cfg.gbar_SJ[J]

    log_beta = -special.gammaln(c_J) - special.gammaln(f.S_JP.m)
    log_alpha = log_beta + a_R * math.log(f.S_iR.lam) - special.gammaln(b_E) - special.gammaln(a_R)

    return DerivedCoefficients(
        gamma_thr=gamma,
        sigma_i=cfg.gbar_I / gbar_Si,
        delta=cfg.gbar_I / cfg.gbar_R,
        sigma_J=cfg.gbar_I / gbar_SJ,
        theta=f.S_JE.lam / (gbar_SJ * f.S_iE.lam),
        varphi_J=f.S_JP.lam * cfg.gbar_I / gbar_SJ,
        varphi_R=f.RP.lam * cfg.gbar_I / cfg.gbar_R,
        varphi_Si=f.S_iP.lam * cfg.gbar_I / gbar_Si,
        varsigma=f.S_JE.lam / (f.S_JP.lam * f.S_iE.lam),
        varpi=gamma * f.S_iR.lam + f.S_iE.lam,
        xi_SiR=f.S_iR.lam * (gamma - 1.0),
        xi_RD=f.RD.lam * (gamma - 1.0),
        kappa=f.S_JE.lam / (f.S_JP.lam * cfg.gbar_I),
        omega_h=tuple(float(special.comb(b_E - 1, h, exact=True)) * f.S_iE.lam ** (b_E - h - 1)
                      for h in range(b_E)),
        alpha=math.exp(log_alpha),
        beta=math.exp(log_beta),
        upsilon_l=tuple(float(special.comb(a_R - 1, l, exact=True)) * gamma ** l * (gamma - 1.0) ** (a_R - 1 - l)
                        for l in range(a_R)),
        b_j=tuple(float(special.comb(a_D - 1, j, exact=True)) * (gamma - 1.0) ** (a_D - 1 - j)
                  for j in range(a_D)),
        a_R=a_R,
        b_E=b_E,
        c_J=c_J,
        a_D=a_D,
        b_RE=L_E * f.RE.m,
        m_SiP=f.S_iP.m,
        m_SJP=f.S_JP.m,
        m_RP=f.RP.m,
        lam_SiR=f.S_iR.lam,
        lam_SiE=f.S_iE.lam,
        lam_SJE=f.S_JE.lam,
        lam_SiP=f.S_iP.lam,
        lam_SJP=f.S_JP.lam,
        lam_RD=f.RD.lam,
        lam_RE=f.RE.lam,
        lam_RP=f.RP.lam,
        gbar_I=cfg.gbar_I,
        gbar_Si=gbar_Si,
        gbar_SJ=gbar_SJ,
        gbar_R=cfg.gbar_R,
    )
