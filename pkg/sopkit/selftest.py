"""
Quick built-in checks, runnable without the test suite
"""
import logging
import math
import traceback
from typing import Callable, List, NamedTuple

from .analytic import Scenario, sop1_nojammer, sop2, sop_system
from .channel import FadingSet, LinkLabel, NetworkConfig, derive_coefficients
from .montecarlo import Coupling, estimate_sop
from .specfun import GammaKind, inc_gamma, meijer_g1222

logger = logging.getLogger(__name__)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _g1222_closed_form() -> str:
    for z in (0.1, 0.5, 0.9):
        got, want = meijer_g1222(0, 1, z), z / (1.0 + z)
        assert abs(got - want) < 1e-10, f"G(z={z}) = {got!r}, expected {want!r}"
    return "G^{1,2}_{2,2}(z | 0, 1; 1, 0) = z / (1 + z)"


def _gamma_complement() -> str:
    for a, x in ((1.0, 0.3), (3.0, 2.5), (7.0, 12.0)):
        total = inc_gamma(a, x, GammaKind.LOWER) + inc_gamma(a, x, GammaKind.UPPER)
        assert abs(total - math.gamma(a)) < 1e-10 * math.gamma(a), f"a={a}, x={x}: {total!r}"
    return "γ(a, x) + Γ(a, x) = Γ(a)"


def _hop_symmetry() -> str:
    fading = FadingSet.table1()
    for src, dst in ((LinkLabel.S_iR, LinkLabel.RD), (LinkLabel.S_iE, LinkLabel.RE), (LinkLabel.S_iP, LinkLabel.RP)):
        link = fading.link(dst)
        fading = fading.replace(src, m=link.m, lam=link.lam)
    cfg = NetworkConfig(N=3, M=1, L_R=2, L_D=2, L_E=1, gbar_S=40.0, gbar_SJ=40.0, gbar_R=40.0,
                        gbar_I=60.0, Rs=0.5)
    co = derive_coefficients(cfg, fading, 0, 0)
    first, second = sop1_nojammer(co), sop2(co)
    assert abs(first - second) < 1e-10, f"hop 1 {first!r} vs hop 2 {second!r}"
    return f"mirrored hops agree ({second:.6f})"


def _exact_vs_mc() -> str:
    cfg = NetworkConfig(N=3, M=2, L_R=1, L_D=1, L_E=1, gbar_S=100.0, gbar_SJ=100.0, gbar_R=100.0,
                        gbar_I=100.0, Rs=1.0)
    fading = FadingSet.table1()
    exact = sop_system(cfg, fading, Scenario.JAMMER).system
    mc = estimate_sop(cfg, fading, Scenario.JAMMER, n=200_000, seed=7, coupling=Coupling.INDEPENDENT)
    bound = max(0.01, 4.0 * mc.std_err)
    assert abs(exact - mc.p_hat) <= bound, f"exact {exact:.6f} vs mc {mc.p_hat:.6f} (bound {bound:.4f})"
    return f"exact {exact:.4f}, mc {mc.p_hat:.4f} ± {mc.std_err:.4f}"


def _determinism() -> str:
    cfg = NetworkConfig(N=4, M=3, L_R=1, L_D=1, L_E=1, gbar_S=100.0, gbar_SJ=100.0, gbar_R=100.0,
                        gbar_I=100.0, Rs=1.0)
    fading = FadingSet.table1()
    runs = [estimate_sop(cfg, fading, Scenario.JAMMER, n=50_000, seed=11, workers=w, block_size=8_192).p_hat
            for w in (1, 4)]
    assert runs[0] == runs[1], f"p_hat differs across worker counts: {runs}"
    return f"p_hat {runs[0]:.6f} with 1 and 4 workers"


CHECKS: List[Callable[[], str]] = [_g1222_closed_form, _gamma_complement, _hop_symmetry, _exact_vs_mc, _determinism]


def run_selftest() -> List[CheckResult]:
    results = []
    for check in CHECKS:
        name = check.__name__.lstrip("_")
        try:
            detail = check()
            results.append(CheckResult(name, True, detail))
            logger.info(f"[selftest] PASS {name}: {detail}")
        except Exception as e:
            results.append(CheckResult(name, False, str(e)))
            logger.error(f"[selftest] FAIL {name}: {e}")
            logger.debug(traceback.format_exc())
    return results
