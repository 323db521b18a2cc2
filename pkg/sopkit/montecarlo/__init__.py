"""
Monte Carlo SOP estimator
Samples channel gains, applies the interference cap, and counts secrecy
outages block by block with one RNG substream per (block, stream).

Streams: 0 legitimate and interference links, 1 source/jammer selection,
100 + k links seen by eavesdropper k, 200 + k per-eavesdropper copies of
the legitimate links in independent coupling.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..analytic import Scenario
from ..channel import FadingSet, NetworkConfig, effective_snr_scale
from ..settings import get_settings
from .base import BaseGainSampler, SamplerKind
from .erlang_sampler import ErlangSampler
from .gamma_sampler import GammaSampler

logger = logging.getLogger(__name__)

LEGIT_STREAM = 0
SELECTION_STREAM = 1
EAVESDROPPER_STREAM = 100
INDEPENDENT_LEGIT_STREAM = 200


class Coupling(str, Enum):
    SHARED = "shared"
    INDEPENDENT = "independent"


class Pairing(str, Enum):
    ROUND_ROBIN = "round_robin"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class ChannelDraw:
    """
    One block of channel snapshots. Per-eavesdropper tuples hold arrays of
    shape (n, antennas) for combined links and (n,) for links to P_Rx; in
    shared coupling the legitimate entries of every k are the same arrays.
    """

    source: np.ndarray
    jammer: np.ndarray
    g_SiR: Tuple[np.ndarray, ...]
    g_SiP: Tuple[np.ndarray, ...]
    g_SJP: Tuple[np.ndarray, ...]
    g_RD: Tuple[np.ndarray, ...]
    g_RP: Tuple[np.ndarray, ...]
    g_SiE: Tuple[np.ndarray, ...]
    g_SJE: Tuple[np.ndarray, ...]
    g_RE: Tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.source)


@dataclass(frozen=True)
class SnrSample:
    """Instantaneous SNRs, each of shape (M, n)."""

    gamma_R: np.ndarray
    gamma_1E: np.ndarray
    gamma_1E_unjammed: np.ndarray
    gamma_D: np.ndarray
    gamma_2E: np.ndarray


class SopEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_hat: float = Field(ge=0, le=1)
    n: int
    std_err: float
    seed: int
    scenario: Scenario
    coupling: Coupling = Coupling.SHARED
    pairing: Pairing = Pairing.ROUND_ROBIN
    sop1_mean: float = 0.0
    sop2_mean: float = 0.0


def _stream(seed: int, block: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block, stream)))


# ============================================================================
# Sampling and SNRs
# ============================================================================

def sample_draw(cfg: NetworkConfig, fading: FadingSet, n: int, seed: int, block: int = 0, start: int = 0,
                coupling: Union[Coupling, str] = Coupling.SHARED,
                sampler: Optional[BaseGainSampler] = None) -> ChannelDraw:
    """
    Draw n snapshots for `block`; `start` is the global index of the first
    one. The result depends only on (seed, block, start, n, coupling).
    """
    coupling = Coupling(coupling)
    sampler = sampler or ErlangSampler()

    selection = _stream(seed, block, SELECTION_STREAM)
    source = (start + np.arange(n)) % cfg.N
    offset = selection.integers(0, cfg.N - 1, size=n)
    jammer = offset + (offset >= source)

    def legit(rng: np.random.Generator) -> Tuple[np.ndarray, ...]:
        return (sampler.link_gains(rng, fading.S_iR, n, cfg.L_R),
                sampler.link_gains(rng, fading.S_iP, n)[:, 0],
                sampler.link_gains(rng, fading.S_JP, n)[:, 0],
                sampler.link_gains(rng, fading.RD, n, cfg.L_D),
                sampler.link_gains(rng, fading.RP, n)[:, 0])

    shared = legit(_stream(seed, block, LEGIT_STREAM))
    per_k: Dict[str, List[np.ndarray]] = {key: [] for key in
                                          ("g_SiR", "g_SiP", "g_SJP", "g_RD", "g_RP", "g_SiE", "g_SJE", "g_RE")}
    for k, L_E in enumerate(cfg.L_E):
        links = shared if coupling is Coupling.SHARED else legit(_stream(seed, block, INDEPENDENT_LEGIT_STREAM + k))
        for key, gains in zip(("g_SiR", "g_SiP", "g_SJP", "g_RD", "g_RP"), links):
            per_k[key].append(gains)
        rng = _stream(seed, block, EAVESDROPPER_STREAM + k)
        per_k["g_SiE"].append(sampler.link_gains(rng, fading.S_iE, n, L_E))
        per_k["g_SJE"].append(sampler.link_gains(rng, fading.S_JE, n, L_E))
        per_k["g_RE"].append(sampler.link_gains(rng, fading.RE, n, L_E))

    return ChannelDraw(source=source, jammer=jammer, **{key: tuple(v) for key, v in per_k.items()})


def instantaneous_snrs(draw: ChannelDraw, cfg: NetworkConfig, scenario: Union[Scenario, str],
                       i: Optional[int] = None, J: Optional[int] = None) -> SnrSample:
    """
    SNRs at R, D and every eavesdropper. Powers follow the per-sample
    (source, jammer) of the draw unless a fixed pair (i, J) is given.
    """
    scenario = Scenario(scenario)
    gbar_S = np.asarray(cfg.gbar_S)[draw.source if i is None else i]
    gbar_SJ = np.asarray(cfg.gbar_SJ)[draw.jammer if J is None else J]
    G = cfg.gbar_I

    rows = {key: [] for key in ("gamma_R", "gamma_1E", "gamma_1E_unjammed", "gamma_D", "gamma_2E")}
    for k in range(cfg.M):
        phi_S = effective_snr_scale(gbar_S, G, draw.g_SiP[k])
        phi_R = effective_snr_scale(cfg.gbar_R, G, draw.g_RP[k])
        eve = phi_S * draw.g_SiE[k].sum(axis=1)
        rows["gamma_R"].append(phi_S * draw.g_SiR[k].sum(axis=1))
        rows["gamma_1E_unjammed"].append(eve)
        if scenario is Scenario.JAMMER:
            phi_J = effective_snr_scale(gbar_SJ, G, draw.g_SJP[k])
            rows["gamma_1E"].append(eve / (phi_J * draw.g_SJE[k].sum(axis=1) + 1.0))
        else:
            rows["gamma_1E"].append(eve)
        rows["gamma_D"].append(phi_R * draw.g_RD[k].sum(axis=1))
        rows["gamma_2E"].append(phi_R * draw.g_RE[k].sum(axis=1))

    shape = (0, draw.n)
    return SnrSample(**{key: np.array(v) if v else np.empty(shape) for key, v in rows.items()})


def _hop_outage(legit: np.ndarray, eve: np.ndarray, Rs: float) -> np.ndarray:
    if Rs == 0:
        return legit <= eve
    capacity = np.maximum((np.log1p(legit) - np.log1p(eve)) / math.log(2.0), 0.0)
    return capacity < Rs


def hop_outages(snrs: SnrSample, Rs: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-hop outage indicators, each of shape (M, n)."""
    return _hop_outage(snrs.gamma_R, snrs.gamma_1E, Rs), _hop_outage(snrs.gamma_D, snrs.gamma_2E, Rs)


def secrecy_event(snrs: SnrSample, Rs: float) -> np.ndarray:
    """
    Outage iff min_k min(C1_k, C2_k) < Rs with capacities clipped at 0;
    at Rs = 0 outage means zero capacity. Never an outage when M = 0.
    """
    hop1, hop2 = hop_outages(snrs, Rs)
    return np.any(hop1 | hop2, axis=0)


# ============================================================================
# Estimator
# ============================================================================

class MonteCarloEngine:
    """Block-parallel SOP estimator over the registered gain samplers"""

    def __init__(self):
        self._samplers: Dict[SamplerKind, BaseGainSampler] = {
            SamplerKind.ERLANG: ErlangSampler(),
            SamplerKind.GAMMA: GammaSampler(),
        }

    def sampler(self, kind: Union[SamplerKind, str]) -> BaseGainSampler:
        return self._samplers[SamplerKind(kind)]

    def _run_block(self, cfg: NetworkConfig, fading: FadingSet, scenario: Scenario, seed: int, block: int,
                   start: int, size: int, coupling: Coupling, pairing: Pairing,
                   sampler: BaseGainSampler) -> Tuple[int, int, int]:
        draw = sample_draw(cfg, fading, size, seed, block, start, coupling, sampler)
        if pairing is Pairing.ROUND_ROBIN:
            pairs = [(None, None)]
        else:
            pairs = [(i, J) for i in range(cfg.N) for J in range(cfg.N) if J != i]
        outages = hop1_count = hop2_count = 0
        for i, J in pairs:
            snrs = instantaneous_snrs(draw, cfg, scenario, i, J)
            hop1, hop2 = hop_outages(snrs, cfg.Rs)
            outages += int(np.count_nonzero(np.any(hop1 | hop2, axis=0)))
            hop1_count += int(np.count_nonzero(hop1))
            hop2_count += int(np.count_nonzero(hop2))
        return outages, hop1_count, hop2_count

    def estimate(self, cfg: NetworkConfig, fading: FadingSet, scenario: Union[Scenario, str, None] = None,
                 n: Optional[int] = None, seed: Optional[int] = None,
                 coupling: Union[Coupling, str] = Coupling.SHARED,
                 pairing: Union[Pairing, str] = Pairing.ROUND_ROBIN,
                 sampler: Union[SamplerKind, str] = SamplerKind.ERLANG,
                 workers: Optional[int] = None, block_size: Optional[int] = None) -> SopEstimate:
        settings = get_settings()
        scenario, coupling, pairing = Scenario.resolve(cfg, scenario), Coupling(coupling), Pairing(pairing)
        n = settings.mc_samples if n is None else n
        seed = settings.seed if seed is None else seed
        block_size = block_size or settings.mc_block_size
        workers = workers or settings.workers
        if n < 1:
            raise ValueError(f"sample count must be >= 1, got {n}")

        if cfg.M == 0:
            return SopEstimate(p_hat=0.0, n=n, std_err=0.0, seed=seed, scenario=scenario,
                               coupling=coupling, pairing=pairing)

        gain_sampler = self.sampler(sampler)
        blocks = [(b, b * block_size, min(block_size, n - b * block_size))
                  for b in range(math.ceil(n / block_size))]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(
                lambda blk: self._run_block(cfg, fading, scenario, seed, *blk, coupling, pairing, gain_sampler),
                blocks))

        evaluations = n * (1 if pairing is Pairing.ROUND_ROBIN else cfg.N * (cfg.N - 1))
        outages = sum(c[0] for c in counts)
        p_hat = outages / evaluations
        estimate = SopEstimate(
            p_hat=p_hat,
            n=n,
            std_err=math.sqrt(p_hat * (1.0 - p_hat) / n),
            seed=seed,
            scenario=scenario,
            coupling=coupling,
            pairing=pairing,
            sop1_mean=sum(c[1] for c in counts) / (evaluations * cfg.M),
            sop2_mean=sum(c[2] for c in counts) / (evaluations * cfg.M),
        )
        logger.info(f"[mc] {scenario.value}/{coupling.value}: n={n} in {len(blocks)} block(s), "
                    f"p_hat={p_hat:.6g} ± {estimate.std_err:.2g}")
        return estimate


engine = MonteCarloEngine()


def estimate_sop(cfg: NetworkConfig, fading: FadingSet, scenario: Union[Scenario, str, None] = None,
                 n: Optional[int] = None, seed: Optional[int] = None, **options) -> SopEstimate:
    """Estimate the system SOP; see MonteCarloEngine.estimate for options."""
    return engine.estimate(cfg, fading, scenario, n, seed, **options)


__all__ = [
    "BaseGainSampler", "ChannelDraw", "Coupling", "ErlangSampler", "GammaSampler", "MonteCarloEngine",
    "Pairing", "SamplerKind", "SnrSample", "SopEstimate", "engine", "estimate_sop", "hop_outages",
    "instantaneous_snrs", "sample_draw", "secrecy_event",
]
