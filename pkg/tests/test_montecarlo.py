import math

import numpy as np
import pytest
from scipy import stats

from sopkit.analytic import Scenario, sop_system
from sopkit.config_file import PowerRatios, table1_point
from sopkit.montecarlo import (ChannelDraw, Coupling, ErlangSampler, GammaSampler, Pairing, SamplerKind, SnrSample,
                               engine, estimate_sop, hop_outages, instantaneous_snrs, sample_draw, secrecy_event)


def _bound(*estimates):
    return max(0.01, 4.0 * math.sqrt(sum(e.std_err ** 2 for e in estimates)))


# ============================================================================
# Gain samplers
# ============================================================================

@pytest.mark.parametrize("sampler", [ErlangSampler(), GammaSampler()], ids=lambda s: s.kind.value)
@pytest.mark.parametrize("m, lam", [(1, 0.6), (3, 0.3), (5, 2.0)])
def test_branch_gains_follow_gamma_law(sampler, m, lam):
    rng = np.random.default_rng(1234)
    gains = sampler.branch_gains(rng, m, lam, (20_000,))
    assert gains.shape == (20_000,)
    assert stats.kstest(gains, stats.gamma(m, scale=1.0 / lam).cdf).pvalue > 1e-4


def test_mrc_gains_sum_branches(table1):
    rng = np.random.default_rng(7)
    sampler = ErlangSampler()
    per_branch = sampler.link_gains(rng, table1.S_iR, 10, antennas=3)
    assert per_branch.shape == (10, 3)
    combined = sampler.mrc_gains(np.random.default_rng(5), table1.S_iR, 20_000, antennas=3)
    law = stats.gamma(3 * table1.S_iR.m, scale=1.0 / table1.S_iR.lam)
    assert stats.kstest(combined, law.cdf).pvalue > 1e-4


def test_erlang_needs_integer_shape():
    with pytest.raises(ValueError):
        ErlangSampler().branch_gains(np.random.default_rng(0), 2.5, 1.0, (4,))
    with pytest.raises(ValueError):
        GammaSampler().branch_gains(np.random.default_rng(0), 0, 1.0, (4,))


def test_engine_registry():
    assert engine.sampler("gamma").kind is SamplerKind.GAMMA
    assert engine.sampler(SamplerKind.ERLANG).kind is SamplerKind.ERLANG


# ============================================================================
# Draws and SNRs
# ============================================================================

def test_draw_shapes_and_selection(table1, network):
    cfg = network(N=4, M=2, L_R=2, L_D=3, L_E=(1, 2))
    draw = sample_draw(cfg, table1, 1000, seed=3, start=6)
    assert draw.n == 1000
    assert draw.source[:4].tolist() == [2, 3, 0, 1]
    assert np.all(draw.jammer != draw.source)
    assert np.all((draw.jammer >= 0) & (draw.jammer < cfg.N))
    assert set(np.unique(draw.jammer)) == {0, 1, 2, 3}
    assert draw.g_SiR[0].shape == (1000, 2)
    assert draw.g_RD[1].shape == (1000, 3)
    assert draw.g_SiP[0].shape == (1000,)
    assert draw.g_SiE[1].shape == (1000, 2)
    # shared coupling: every eavesdropper sees the same legitimate links
    assert draw.g_SiR[0] is draw.g_SiR[1]


def test_draw_is_reproducible(table1, network):
    cfg = network(M=2)
    first = sample_draw(cfg, table1, 500, seed=9, block=2, coupling="independent")
    second = sample_draw(cfg, table1, 500, seed=9, block=2, coupling="independent")
    np.testing.assert_array_equal(first.g_RD[1], second.g_RD[1])
    np.testing.assert_array_equal(first.jammer, second.jammer)
    assert not np.array_equal(first.g_RD[0], first.g_RD[1])
    other_block = sample_draw(cfg, table1, 500, seed=9, block=3, coupling="independent")
    assert not np.array_equal(first.g_SiE[0], other_block.g_SiE[0])


def _single_draw():
    one = lambda *v: (np.array([list(v)]),)
    flat = lambda v: (np.array([v]),)
    return ChannelDraw(source=np.array([0]), jammer=np.array([1]),
                       g_SiR=one(2.0), g_SiP=flat(1.0), g_SJP=flat(0.1), g_RD=one(3.0), g_RP=flat(0.5),
                       g_SiE=one(1.0), g_SJE=one(0.4), g_RE=one(0.2))


def test_instantaneous_snrs_by_hand(network):
    cfg = network(N=2, gbar_S=10.0, gbar_SJ=10.0, gbar_R=10.0, gbar_I=5.0)
    draw = _single_draw()
    jammed = instantaneous_snrs(draw, cfg, Scenario.JAMMER)
    # Φ_S = min(10, 5/1) = 5, Φ_J = min(10, 5/0.1) = 10, Φ_R = min(10, 5/0.5) = 10
    assert jammed.gamma_R[0, 0] == pytest.approx(10.0)
    assert jammed.gamma_1E[0, 0] == pytest.approx(5.0 / (10.0 * 0.4 + 1.0))
    assert jammed.gamma_1E_unjammed[0, 0] == pytest.approx(5.0)
    assert jammed.gamma_D[0, 0] == pytest.approx(30.0)
    assert jammed.gamma_2E[0, 0] == pytest.approx(2.0)

    assert not secrecy_event(jammed, 1.0)[0]
    open_ = instantaneous_snrs(draw, cfg, "no_jammer")
    hop1, hop2 = hop_outages(open_, 1.0)
    assert hop1[0, 0] and not hop2[0, 0]
    assert secrecy_event(open_, 1.0)[0]


def test_rate_boundary():
    snrs = SnrSample(gamma_R=np.array([[3.0]]), gamma_1E=np.array([[1.0]]), gamma_1E_unjammed=np.array([[1.0]]),
                     gamma_D=np.array([[100.0]]), gamma_2E=np.array([[0.0]]))
    # C1 = log2(4/2) = 1
    assert secrecy_event(snrs, 1.0 + 1e-9)[0]
    assert not secrecy_event(snrs, 1.0 - 1e-9)[0]
    assert not secrecy_event(snrs, 0.0)[0]
    tie = SnrSample(gamma_R=np.array([[2.0]]), gamma_1E=np.array([[2.0]]), gamma_1E_unjammed=np.array([[2.0]]),
                    gamma_D=np.array([[9.0]]), gamma_2E=np.array([[1.0]]))
    assert secrecy_event(tie, 0.0)[0]


def test_no_eavesdroppers_never_outage(table1, network):
    cfg = network(M=0, L_E=())
    draw = sample_draw(cfg, table1, 100, seed=1)
    snrs = instantaneous_snrs(draw, cfg, Scenario.JAMMER)
    assert snrs.gamma_R.shape == (0, 100)
    assert not secrecy_event(snrs, 1.0).any()
    assert estimate_sop(cfg, table1, Scenario.JAMMER, n=100, seed=1).p_hat == 0.0


# ============================================================================
# Estimator
# ============================================================================

def test_common_random_numbers_keep_ordering(table1, network):
    by_rate = [estimate_sop(network(Rs=rs, M=2), table1, Scenario.JAMMER, n=20_000, seed=4).p_hat
               for rs in (0.0, 0.5, 1.0, 2.0)]
    assert by_rate == sorted(by_rate)
    by_eves = [estimate_sop(network(M=M), table1, Scenario.NO_JAMMER, n=20_000, seed=4).p_hat for M in (1, 2, 3)]
    assert by_eves == sorted(by_eves)


def test_result_independent_of_worker_count(table1, network):
    cfg = network(N=4, M=3)
    runs = [estimate_sop(cfg, table1, Scenario.JAMMER, n=30_000, seed=11, workers=w, block_size=8_192)
            for w in (1, 3)]
    assert runs[0].p_hat == runs[1].p_hat
    assert runs[0].sop1_mean == runs[1].sop1_mean


def test_estimate_metadata(table1, network):
    est = estimate_sop(network(), table1, "no_jammer", n=5_000, seed=2, coupling="independent")
    assert est.n == 5_000 and est.seed == 2
    assert est.coupling is Coupling.INDEPENDENT
    assert est.pairing is Pairing.ROUND_ROBIN
    assert est.std_err == pytest.approx(math.sqrt(est.p_hat * (1 - est.p_hat) / 5_000))
    with pytest.raises(ValueError):
        estimate_sop(network(), table1, "jammer", n=0, seed=2)


@pytest.mark.slow
@pytest.mark.parametrize("scenario", [Scenario.JAMMER, Scenario.NO_JAMMER])
def test_single_eavesdropper_matches_exact(table1, network, scenario):
    cfg = network(L_R=2, gbar_I=50.0)
    exact = sop_system(cfg, table1, scenario)
    mc = estimate_sop(cfg, table1, scenario, n=200_000, seed=21)
    assert mc.p_hat == pytest.approx(exact.system, abs=_bound(mc))
    assert mc.sop1_mean == pytest.approx(exact.sop1_per_k[0], abs=_bound(mc))
    assert mc.sop2_mean == pytest.approx(exact.sop2_per_k[0], abs=_bound(mc))


@pytest.mark.slow
def test_independent_coupling_matches_product_form(table1, network):
    cfg = network(M=3, L_E=(1, 2, 1))
    exact = sop_system(cfg, table1, Scenario.JAMMER).system
    mc = estimate_sop(cfg, table1, Scenario.JAMMER, n=200_000, seed=5, coupling=Coupling.INDEPENDENT)
    assert mc.p_hat == pytest.approx(exact, abs=_bound(mc))


@pytest.mark.slow
def test_shared_coupling_does_not_exceed_product_form(table1, network):
    cfg = network(M=3)
    exact = sop_system(cfg, table1, Scenario.NO_JAMMER).system
    mc = estimate_sop(cfg, table1, Scenario.NO_JAMMER, n=200_000, seed=6)
    assert mc.p_hat <= exact + 4.0 * mc.std_err


@pytest.mark.slow
def test_exhaustive_pairing_matches_pair_average(table1, network):
    cfg = network(gbar_S=(20.0, 100.0, 500.0), gbar_SJ=(10.0, 50.0, 200.0))
    exact = sop_system(cfg, table1, Scenario.JAMMER, collapse=False).system
    mc = estimate_sop(cfg, table1, Scenario.JAMMER, n=100_000, seed=8, pairing=Pairing.EXHAUSTIVE)
    assert mc.pairing is Pairing.EXHAUSTIVE
    assert mc.p_hat == pytest.approx(exact, abs=_bound(mc))


@pytest.mark.slow
def test_samplers_agree(table1, network):
    cfg = network(M=2, L_D=2)
    erlang = estimate_sop(cfg, table1, Scenario.JAMMER, n=100_000, seed=13)
    gamma = estimate_sop(cfg, table1, Scenario.JAMMER, n=100_000, seed=13, sampler="gamma")
    assert erlang.p_hat == pytest.approx(gamma.p_hat, abs=_bound(erlang, gamma))


@pytest.mark.slow
@pytest.mark.parametrize("scenario", [Scenario.JAMMER, Scenario.NO_JAMMER])
@pytest.mark.parametrize("L", [1, 2, 3])
@pytest.mark.parametrize("Rs", [0.5, 1.0])
def test_reference_grid_matches_exact(scenario, L, Rs):
    # powers tied to gbar_I through sigma_i = delta = sigma_J = 0.1
    point = table1_point(L=L, Rs=Rs)
    ratios = PowerRatios(sigma=0.1, delta=0.1, sigma_J=0.1)
    for gbar_dB in range(0, 35, 5):
        cfg = ratios.apply(point.network, 10.0 ** (gbar_dB / 10.0))
        exact = sop_system(cfg, point.fading, scenario).system
        mc = estimate_sop(cfg, point.fading, scenario, n=200_000, seed=31 + gbar_dB, coupling=Coupling.INDEPENDENT)
        assert mc.p_hat == pytest.approx(exact, abs=_bound(mc)), f"{gbar_dB} dB"
