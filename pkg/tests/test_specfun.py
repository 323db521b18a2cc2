import math

import pytest
from scipy import integrate, special, stats

from sopkit.channel import derive_coefficients
from sopkit.errors import DomainError, NonConvergence, PoleOrderTooHigh, SpecError
from sopkit.specfun import (GammaFactor, GammaKind, Location, MellinBarnesSpec, ZeroPole, contour_quadrature,
                            digamma, eval_residue_series, evaluate_mellin_barnes, inc_gamma, log_gamma,
                            log_upper_gamma, meijer_delta, meijer_g1222, meijer_m3, meijer_m3_complement,
                            meijer_theta2, meijer_v, regularized_lower, spec_delta, spec_g1222, spec_m1, spec_m2,
                            spec_m3, v_function)


# ============================================================================
# Gamma family
# ============================================================================

def test_log_gamma_and_digamma():
    assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-14)
    assert digamma(1.0) == pytest.approx(-0.5772156649, abs=1e-10)
    assert digamma(2.0) == pytest.approx(1.0 - 0.5772156649015329, abs=1e-12)
    with pytest.raises(DomainError):
        digamma(0.0)
    with pytest.raises(DomainError):
        log_gamma(-1.0)


@pytest.mark.parametrize("a, x", [(1.0, 0.3), (2.5, 1.0), (5.0, 4.0), (12.0, 30.0)])
def test_incomplete_gamma_complementarity(a, x):
    total = inc_gamma(a, x, GammaKind.LOWER) + inc_gamma(a, x, GammaKind.UPPER)
    assert total == pytest.approx(math.gamma(a), rel=1e-10)


def test_incomplete_gamma_edges():
    assert inc_gamma(3.0, 0.0, "lower") == 0.0
    assert inc_gamma(3.0, 0.0, "upper") == pytest.approx(2.0)
    assert regularized_lower(1.0, 2.0) == pytest.approx(1.0 - math.exp(-2.0), rel=1e-14)
    # deep tail that scipy's regularized form underflows
    assert log_upper_gamma(2.0, 800.0) == pytest.approx(math.log(801.0) - 800.0, rel=1e-12)
    with pytest.raises(DomainError):
        inc_gamma(0.0, 1.0)


def test_log_upper_gamma_negative_shape():
    # Γ(0, x) = E1(x)
    assert log_upper_gamma(0.0, 0.5) == pytest.approx(math.log(special.exp1(0.5)), rel=1e-10)
    assert log_upper_gamma(3.0, 2.0) == pytest.approx(math.log(special.gammaincc(3.0, 2.0) * 2.0), rel=1e-12)


# ============================================================================
# Spec validation
# ============================================================================

def test_factor_validation():
    with pytest.raises(SpecError):
        GammaFactor(2, 1, Location.NUMERATOR_BOTTOM)
    with pytest.raises(SpecError):
        GammaFactor(-1, 1, Location.NUMERATOR_BOTTOM)
    with pytest.raises(SpecError):
        GammaFactor(1, 1, Location.DENOMINATOR, second_arg=0.5)
    assert GammaFactor.minus(2, 0.0).second_arg is None


def test_spec_validation():
    with pytest.raises(SpecError):
        MellinBarnesSpec((GammaFactor.plus(1), GammaFactor.minus(-2))).validate()
    with pytest.raises(PoleOrderTooHigh):
        MellinBarnesSpec((GammaFactor.plus(1), GammaFactor.plus(2), GammaFactor.plus(3))).validate()
    with pytest.raises(SpecError):
        MellinBarnesSpec((GammaFactor.plus(1),), ZeroPole.LEFT, 3)


@pytest.mark.parametrize("a", [1, 2, 5])
def test_double_zero_pole_with_integer_shape_is_accepted(a):
    # 1/s² at s = 0 and Γ(a + s) at s = -a, -a-1, ... never meet
    spec = MellinBarnesSpec((GammaFactor.plus(a),), ZeroPole.LEFT, 2, name="V")
    spec.validate()
    result = eval_residue_series(spec, 0.4)
    assert max(order for _, order in result.pole_classification) == 2


def test_zero_pole_stacking_on_a_lattice_is_rejected():
    spec = MellinBarnesSpec((GammaFactor.plus(0),), ZeroPole.LEFT, 2)
    with pytest.raises(PoleOrderTooHigh):
        spec.validate()
    with pytest.raises(PoleOrderTooHigh):
        eval_residue_series(spec, 0.4)


def test_contour_abscissa_separates_poles():
    spec = spec_g1222(2, 3)
    c = spec.contour_abscissa()
    assert spec.max_left_pole() < c < spec.min_right_pole()


# ============================================================================
# G-function instances against closed forms
# ============================================================================

@pytest.mark.parametrize("z", [0.1, 0.5, 0.59])
def test_g1222_simplest_series(z):
    assert meijer_g1222(0, 1, z) == pytest.approx(z / (1.0 + z), abs=1e-10)


@pytest.mark.parametrize("z", [0.8, 3.0, 25.0])
def test_g1222_simplest_contour(z):
    assert meijer_g1222(0, 1, z) == pytest.approx(z / (1.0 + z), rel=1e-8)


def _g1222_finite_sum(h: int, b: int, z: float) -> float:
    tail = sum(z ** n * math.factorial(h + n) / (math.factorial(n) * (1.0 + z) ** (h + n + 1)) for n in range(b))
    return math.gamma(b) * (math.factorial(h) - tail)


@pytest.mark.parametrize("h, b, z", [(2, 3, 0.3), (0, 5, 0.2), (4, 2, 0.45), (1, 2, 1.5), (3, 4, 6.0)])
def test_g1222_matches_finite_sum(h, b, z):
    assert meijer_g1222(h, b, z) == pytest.approx(_g1222_finite_sum(h, b, z), rel=1e-8)


def _delta_finite_sum(c: int, m: int, phi: float, x: float) -> float:
    tail = sum(x ** n * inc_gamma(m + n, phi * (1.0 + x), "upper") / (math.factorial(n) * (1.0 + x) ** (m + n))
               for n in range(c))
    return math.gamma(c) * (inc_gamma(m, phi, "upper") - tail)


def _delta_quadrature(c: int, m: int, phi: float, x: float) -> float:
    integrand = lambda u: u ** (m - 1) * math.exp(-u) * special.gammainc(c, x * u) * math.gamma(c)
    return integrate.quad(integrand, phi, math.inf, epsabs=0, epsrel=1e-12)[0]


@pytest.mark.parametrize("c, m, phi, x", [(2, 3, 0.5, 0.3), (5, 3, 0.03, 0.1), (1, 2, 1.2, 2.0)])
def test_incomplete_g_against_finite_sum_and_quadrature(c, m, phi, x):
    value = evaluate_mellin_barnes(spec_delta(c, m, phi), x).value
    assert value == pytest.approx(_delta_finite_sum(c, m, phi, x), rel=1e-7)
    assert value == pytest.approx(_delta_quadrature(c, m, phi, x), rel=1e-7)


def test_incomplete_g_reduces_to_classical_as_phi_vanishes():
    # φ = 0 drops the incomplete argument
    complete = evaluate_mellin_barnes(spec_delta(3, 2, 0.0), 0.4).value
    assert complete == pytest.approx(_delta_finite_sum(3, 2, 0.0, 0.4), rel=1e-10)
    tiny = evaluate_mellin_barnes(spec_delta(3, 2, 1e-12), 0.4).value
    assert tiny == pytest.approx(complete, rel=1e-10)


def test_m3_and_complement_sum_to_product():
    a, m, phi, z = 3, 2, 0.4, 0.25
    total = (evaluate_mellin_barnes(spec_m3(a, m, phi), z).value
             + evaluate_mellin_barnes(spec_m3(a, m, phi, complement=True), z).value)
    assert total == pytest.approx(math.gamma(a) * inc_gamma(m, phi, "upper"), rel=1e-10)


def test_m3_complement_is_an_expectation():
    # Γ(a)Γ(m, φ) - M3(z) = ∫_φ^∞ u^{m-1} e^{-u} γ(a, z u) du
    a, m, phi, z = 2, 3, 0.3, 0.2
    value = evaluate_mellin_barnes(spec_m3(a, m, phi, complement=True), z).value
    assert value == pytest.approx(_delta_quadrature(a, m, phi, z), rel=1e-8)


@pytest.mark.parametrize("a, phi", [(2.5, 0.7), (3.0, 0.03), (1.0, 2.0)])
def test_v_function_quadrature(a, phi):
    integrand = lambda t: t ** (a - 1) * math.exp(-t) * math.log(t / phi)
    expected = integrate.quad(integrand, phi, math.inf, epsabs=0, epsrel=1e-12)[0]
    assert v_function(a, phi) == pytest.approx(expected, rel=1e-8)


def test_m1_matches_expectation():
    # M1(z) = ∫ y^{mu-1} e^{-y} G1222(h, c, z / y) dy
    h, mu, c, z = 1, 3, 2, 0.3
    value = evaluate_mellin_barnes(spec_m1(h, mu, c), z).value
    integrand = lambda y: y ** (mu - 1) * math.exp(-y) * _g1222_finite_sum(h, c, z / y)
    expected = integrate.quad(integrand, 0, math.inf, epsabs=0, epsrel=1e-10, limit=200)[0]
    assert value == pytest.approx(expected, rel=1e-7)


# ============================================================================
# Residue series vs contour quadrature
# ============================================================================

SERIES_SPECS = [
    spec_g1222(0, 1),
    spec_g1222(3, 4),
    spec_m1(0, 5, 5),
    spec_m1(2, 4, 2),
    spec_m1(1, 2, 7),
    spec_m2(0, 5, 5, 3, 0.03),
    spec_m2(2, 3, 4, 2, 0.5),
    spec_m3(2, 3, 0.3),
    spec_m3(4, 2, 1.5, complement=True),
    spec_delta(3, 3, 0.2),
]


@pytest.mark.parametrize("spec", SERIES_SPECS, ids=lambda s: s.name)
@pytest.mark.parametrize("z", [0.05, 0.2])
def test_residue_series_agrees_with_contour(spec, z):
    series = eval_residue_series(spec, z)
    contour = contour_quadrature(spec, z)
    assert series.method == "residue"
    assert contour.method == "contour"
    assert series.value == pytest.approx(contour.value, rel=1e-6)


@pytest.mark.parametrize("spec", SERIES_SPECS, ids=lambda s: s.name)
def test_dispatch_agrees_with_contour(spec):
    # at z = 0.3 the series may lose to cancellation; dispatch falls back to the contour
    value = evaluate_mellin_barnes(spec, 0.3).value
    assert value == pytest.approx(contour_quadrature(spec, 0.3).value, rel=1e-6)


def test_cancelling_series_falls_back_to_contour():
    spec = spec_m2(0, 5, 5, 3, 0.03)
    with pytest.raises(NonConvergence):
        eval_residue_series(spec, 0.3)
    result = evaluate_mellin_barnes(spec, 0.3)
    assert result.method == "contour"
    assert result.value == pytest.approx(1.84665, rel=1e-4)


def test_residue_series_reports_terms():
    result = eval_residue_series(spec_g1222(0, 1), 0.2)
    assert result.terms_used > 3
    assert result.truncation_estimate < 1e-10
    # Γ(1 + s) alone has simple poles
    assert all(order == 1 for _, order in result.pole_classification)


def test_double_poles_classified():
    result = eval_residue_series(spec_m1(0, 3, 3), 0.2)
    assert any(order == 2 for _, order in result.pole_classification)


def test_series_rejects_bad_argument():
    with pytest.raises(DomainError):
        eval_residue_series(spec_g1222(0, 1), 0.0)
    with pytest.raises(DomainError):
        contour_quadrature(spec_g1222(0, 1), -1.0)


def test_gamma_mixture_identity_from_stats():
    # G1222(h=0, b, z) / Γ(b) = P(Y < z T) with T ~ Exp(1), Y ~ Gamma(b, 1)
    b, z = 3, 0.4
    expected = integrate.quad(lambda t: math.exp(-t) * stats.gamma.cdf(z * t, b), 0, math.inf)[0]
    assert meijer_g1222(0, b, z) / math.gamma(b) == pytest.approx(expected, rel=1e-8)



# ============================================================================
# Wrappers bound to derived coefficients
# ============================================================================

def test_wrappers_follow_their_coefficients(table1, network):
    co = derive_coefficients(network(L_R=2, gbar_I=30.0), table1, 0, 0)
    z = 0.2
    total = meijer_m3(co, z) + meijer_m3_complement(co, z)
    assert total == pytest.approx(math.gamma(co.a_R) * inc_gamma(co.m_SiP, co.varphi_Si, "upper"), rel=1e-9)
    assert meijer_m3_complement(co, 0.0) == 0.0

    t = 5.0
    expected = _delta_quadrature(co.c_J, co.m_SJP, co.varphi_J, co.kappa * t)
    assert meijer_delta(co, t) == pytest.approx(expected, rel=1e-7)
    assert meijer_delta(co, 0.0) == 0.0

    # Θ2(y) = ∫_φ^∞ u^{m-1} e^{-u} G1222(h, c, y u) du
    h, y = 1, 0.1
    integrand = lambda u: u ** (co.m_SJP - 1) * math.exp(-u) * _g1222_finite_sum(h, co.c_J, y * u)
    expected = integrate.quad(integrand, co.varphi_J, math.inf, epsabs=0, epsrel=1e-10)[0]
    assert meijer_theta2(h, co, y) == pytest.approx(expected, rel=1e-6)

    assert meijer_v(2, co) == pytest.approx(v_function(co.m_SJP + 2.0, co.varphi_J), rel=1e-14)
