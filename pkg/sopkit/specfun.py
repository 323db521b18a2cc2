"""
Special functions
Gamma family helpers and the Mellin-Barnes residue engine behind the
classical and upper-incomplete Meijer G-functions of the SOP closed forms.

A Mellin-Barnes integrand is described symbolically by `MellinBarnesSpec`:
a product of Gamma factors Γ(a ± s) (optionally upper-incomplete
Γ(a ± s, φ)), an optional 1/s structure, and the kernel z^{-s}. The value
is the sum of residues at the left poles. Simple poles give ratio-of-Gamma
terms, double poles add log z and digamma terms, and incomplete factors at
double poles contribute through the V-function correction.
"""
import cmath
import heapq
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING, Iterator, List, Optional, Tuple, Union

import mpmath
from scipy import integrate, special

from .errors import DomainError, NonConvergence, PoleOrderTooHigh, SpecError

if TYPE_CHECKING:
    from .channel import DerivedCoefficients

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_CAP = 200

# Left-pole series are used below these arguments; beyond them the contour
# quadrature takes over.
SERIES_RADIUS = 0.6
SERIES_ENTIRE_LIMIT = 8.0
# Largest tolerated ratio between the biggest residue term and the sum.
CANCELLATION_LIMIT = 1e4

Number = Union[int, float, Fraction]


# ============================================================================
# Gamma family
# ============================================================================

def log_gamma(x: float) -> float:
    """ln Γ(x) for x > 0."""
    if not (x > 0) or math.isinf(x):
        raise DomainError(f"log_gamma needs a finite x > 0, got {x}")
    return float(special.gammaln(x))


def digamma(x: float) -> float:
    """ψ(x) for x > 0."""
    if not (x > 0) or math.isinf(x):
        raise DomainError(f"digamma needs a finite x > 0, got {x}")
    return float(special.psi(x))


class GammaKind(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


def inc_gamma(a: float, x: float, kind: Union[GammaKind, str] = GammaKind.LOWER) -> float:
    """
    Non-regularized incomplete Gamma function

    Args:
        a: shape, > 0
        x: integration limit, >= 0
        kind: "lower" for γ(a, x), "upper" for Γ(a, x)

    Returns:
        γ(a, x) or Γ(a, x)
    """
    kind = GammaKind(kind)
    if not (a > 0):
        raise DomainError(f"inc_gamma needs a > 0, got a={a}")
    if not (x >= 0):
        raise DomainError(f"inc_gamma needs x >= 0, got x={x}")
    if x == 0:
        return 0.0 if kind is GammaKind.LOWER else math.exp(log_gamma(a))
    regularized = special.gammainc(a, x) if kind is GammaKind.LOWER else special.gammaincc(a, x)
    if regularized > 0:
        return math.exp(log_gamma(a) + math.log(regularized))
    # scipy underflowed; mpmath keeps the tail
    if kind is GammaKind.LOWER:
        return float(mpmath.gammainc(a, 0, x))
    return float(mpmath.gammainc(a, x))


def log_upper_gamma(a: float, x: float) -> float:
    """ln Γ(a, x) for x > 0 and any real a, or for x = 0 and a > 0."""
    if x < 0:
        raise DomainError(f"log_upper_gamma needs x >= 0, got {x}")
    if x == 0:
        return log_gamma(a)
    if a > 0:
        regularized = special.gammaincc(a, x)
        if regularized > 0:
            return log_gamma(a) + math.log(regularized)
    return float(mpmath.log(mpmath.gammainc(a, x)))


def regularized_lower(a: float, x: float) -> float:
    """P(a, x) = γ(a, x)/Γ(a)."""
    if not (a > 0) or x < 0:
        raise DomainError(f"regularized_lower needs a > 0, x >= 0, got a={a}, x={x}")
    return float(special.gammainc(a, x))


# ============================================================================
# Mellin-Barnes integrand description
# ============================================================================

class Location(str, Enum):
    NUMERATOR_TOP = "numerator_top"        # Γ(1 - a_j - s) group, written Γ(offset - s)
    NUMERATOR_BOTTOM = "numerator_bottom"  # Γ(b_j + s) group
    DENOMINATOR = "denominator"


class ZeroPole(str, Enum):
    NONE = "none"
    LEFT = "left"    # Γ(s)/Γ(1+s) = 1/s
    RIGHT = "right"  # Γ(-s)/Γ(1-s) = -1/s


@dataclass(frozen=True)
class GammaFactor:
    """One factor Γ(offset + sign·s), upper-incomplete when second_arg is set."""

    sign: int
    offset: Fraction
    location: Location
    second_arg: Optional[float] = None

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise SpecError(f"factor sign must be +1 or -1, got {self.sign}")
        try:
            offset = Fraction(self.offset)
        except (TypeError, ValueError, OverflowError) as e:
            raise SpecError(f"factor offset must be finite: {e}") from e
        object.__setattr__(self, "offset", offset)
        if self.location is Location.NUMERATOR_BOTTOM and self.sign != 1:
            raise SpecError("numerator_bottom factors are Γ(b + s)")
        if self.location is Location.NUMERATOR_TOP and self.sign != -1:
            raise SpecError("numerator_top factors are Γ(a - s)")
        if self.second_arg is not None:
            if self.location is Location.DENOMINATOR:
                raise SpecError("denominator factors are never incomplete")
            if not (self.second_arg >= 0) or math.isinf(self.second_arg):
                raise SpecError(f"second_arg must be finite and >= 0, got {self.second_arg}")
            if self.second_arg == 0:
                object.__setattr__(self, "second_arg", None)
            else:
                object.__setattr__(self, "second_arg", float(self.second_arg))

    @classmethod
    def plus(cls, offset: Number) -> "GammaFactor":
        return cls(1, offset, Location.NUMERATOR_BOTTOM)

    @classmethod
    def minus(cls, offset: Number, second_arg: Optional[float] = None) -> "GammaFactor":
        return cls(-1, offset, Location.NUMERATOR_TOP, second_arg)

    @classmethod
    def denominator(cls, offset: Number, sign: int = 1) -> "GammaFactor":
        return cls(sign, offset, Location.DENOMINATOR)

    @property
    def incomplete(self) -> bool:
        return self.second_arg is not None

    @property
    def in_numerator(self) -> bool:
        return self.location is not Location.DENOMINATOR

    @property
    def has_left_poles(self) -> bool:
        return self.in_numerator and self.sign == 1 and not self.incomplete

    @property
    def has_right_poles(self) -> bool:
        return self.in_numerator and self.sign == -1 and not self.incomplete


@dataclass(frozen=True)
class MellinBarnesSpec:
    """
    Integrand Π factors · (zero-pole term) · z^{-s}

    `zero_pole` LEFT contributes (1/s)^order, RIGHT contributes (-1/s)^order.
    """

    factors: Tuple[GammaFactor, ...]
    zero_pole: ZeroPole = ZeroPole.NONE
    zero_pole_order: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.zero_pole is not ZeroPole.NONE and self.zero_pole_order not in (1, 2):
            raise SpecError(f"zero pole order must be 1 or 2, got {self.zero_pole_order}")

    @property
    def extra_pole_at_zero(self) -> bool:
        return self.zero_pole is not ZeroPole.NONE

    def max_left_pole(self) -> Optional[Fraction]:
        candidates = [-f.offset for f in self.factors if f.has_left_poles]
        if self.zero_pole is ZeroPole.LEFT:
            candidates.append(Fraction(0))
        return max(candidates) if candidates else None

    def min_right_pole(self) -> Optional[Fraction]:
        candidates = [f.offset for f in self.factors if f.has_right_poles]
        if self.zero_pole is ZeroPole.RIGHT:
            candidates.append(Fraction(0))
        return min(candidates) if candidates else None

    def series_growth(self) -> int:
        """Factorial growth exponent of the left-residue terms (negative: entire)."""
        growth = 0
        for f in self.factors:
            if f.in_numerator:
                if f.sign == -1:
                    growth += 1
                elif not f.incomplete:
                    growth -= 1
            else:
                growth += 1 if f.sign == 1 else -1
        return growth

    def validate(self) -> None:
        left, right = self.max_left_pole(), self.min_right_pole()
        if left is not None and right is not None and not left < right:
            raise SpecError(
                f"{self.name or 'spec'}: left poles (max {left}) not separable from right poles (min {right})"
            )
        # three Γ(a+s) factors in one residue class eventually stack into a triple pole
        classes = {}
        for f in self.factors:
            if f.has_left_poles:
                key = f.offset - math.floor(f.offset)
                classes[key] = classes.get(key, 0) + 1
        if any(count >= 3 for count in classes.values()):
            raise PoleOrderTooHigh(f"{self.name or 'spec'}: residue class with three or more coincident poles")
        # the zero pole sits at s = 0 only; it stacks with factors whose lattice reaches 0
        if self.zero_pole is ZeroPole.LEFT:
            at_zero = sum(1 for f in self.factors
                          if f.has_left_poles and f.offset.denominator == 1 and f.offset <= 0)
            if self.zero_pole_order + at_zero >= 3:
                raise PoleOrderTooHigh(f"{self.name or 'spec'}: pole of order three or more at s = 0")

    def contour_abscissa(self) -> float:
        left, right = self.max_left_pole(), self.min_right_pole()
        if left is None and right is None:
            return 0.0
        if right is None:
            return float(left) + 1.0
        if left is None:
            return float(right) - 1.0
        return float(left + right) / 2.0


@dataclass(frozen=True)
class ResidueSeriesResult:
    value: float
    terms_used: int
    truncation_estimate: float
    pole_classification: Tuple[Tuple[Fraction, int], ...] = field(default=())
    method: str = "residue"


# ============================================================================
# Residue series
# ============================================================================

def _left_poles(spec: MellinBarnesSpec) -> Iterator[Tuple[Fraction, List[Tuple[int, int]], int]]:
    """Yield (pole, [(factor index, r)], zero-pole order) in descending pole order."""
    heap: List[Tuple[Fraction, int, int]] = []
    for idx, f in enumerate(spec.factors):
        if f.has_left_poles:
            heapq.heappush(heap, (f.offset, idx, 0))
    pending_zero = spec.zero_pole is ZeroPole.LEFT
    while heap or pending_zero:
        key = heap[0][0] if heap else None
        if pending_zero and (key is None or key >= 0):
            key = Fraction(0)
        singular = []
        while heap and heap[0][0] == key:
            _, idx, r = heapq.heappop(heap)
            singular.append((idx, r))
            heapq.heappush(heap, (spec.factors[idx].offset + r + 1, idx, r + 1))
        zero_order = 0
        if pending_zero and key == 0:
            zero_order = spec.zero_pole_order
            pending_zero = False
        yield -key, singular, zero_order


@lru_cache(maxsize=4096)
def v_function(a: float, phi: float) -> float:
    """
    V(a, φ) = G^{3,0}_{2,3}(φ | -; 1, 1 / 0, 0, a)

    Satisfies ∂Γ(a, φ)/∂a = ln φ · Γ(a, φ) + V(a, φ).
    """
    if not (a > 0) or not (phi > 0):
        raise DomainError(f"v_function needs a > 0 and phi > 0, got a={a}, phi={phi}")
    spec = MellinBarnesSpec((GammaFactor.plus(a),), ZeroPole.LEFT, 2, name="V")
    return evaluate_mellin_barnes(spec, phi).value


def _incomplete_dlog(x: float, phi: float) -> float:
    """d/da ln Γ(a, φ) at a = x."""
    if not (x > 0):
        raise DomainError(f"incomplete factor derivative needs a positive argument, got {x}")
    upper = math.exp(log_upper_gamma(x, phi))
    return math.log(phi) + v_function(x, phi) / upper


def _residue(spec: MellinBarnesSpec, ln_z: float, pole: Fraction,
             singular: List[Tuple[int, int]], zero_order: int) -> float:
    order = len(singular) + zero_order
    s0 = float(pole)
    singular_idx = {idx for idx, _ in singular}

    sign = 1.0
    log_mag = 0.0
    ratio_sum = 0.0  # Σ d_i/c_i of the singular Laurent expansions
    for _, r in singular:
        if r % 2:
            sign = -sign
        log_mag -= special.gammaln(r + 1)
        ratio_sum += special.psi(r + 1)

    dlog = -ln_z
    log_mag -= s0 * ln_z
    for idx, f in enumerate(spec.factors):
        if idx in singular_idx:
            continue
        x = float(f.offset + f.sign * pole)
        if not f.in_numerator:
            if x <= 0 and x == math.floor(x):
                raise SpecError(f"{spec.name}: denominator vanishes at pole {pole}")
            sign *= special.gammasgn(x)
            log_mag -= special.gammaln(x)
            if order == 2:
                dlog -= f.sign * special.psi(x)
        elif f.incomplete:
            log_mag += log_upper_gamma(x, f.second_arg)
            if order == 2:
                dlog += f.sign * _incomplete_dlog(x, f.second_arg)
        else:
            sign *= special.gammasgn(x)
            log_mag += special.gammaln(x)
            if order == 2:
                dlog += f.sign * special.psi(x)

    if spec.zero_pole is not ZeroPole.NONE and zero_order == 0:
        k = spec.zero_pole_order
        base = 1.0 / s0 if spec.zero_pole is ZeroPole.LEFT else -1.0 / s0
        if base < 0 and k % 2:
            sign = -sign
        log_mag += k * math.log(abs(base))
        dlog -= k / s0

    if log_mag > 700:
        raise NonConvergence(f"{spec.name}: residue at {pole} overflows")
    value = sign * math.exp(log_mag)
    if order == 2:
        value *= dlog + ratio_sum
    return value


def eval_residue_series(spec: MellinBarnesSpec, z: float, tol: float = DEFAULT_TOL,
                        cap: int = DEFAULT_CAP) -> ResidueSeriesResult:
    """
    Sum of residues at the left poles of the integrand

    Stops once three consecutive terms fall below tol·|partial sum|.

    Raises:
        NonConvergence: cap reached, or cancellation destroyed the result
        PoleOrderTooHigh: a pole of order three or more
    """
    if not (z > 0) or math.isinf(z):
        raise DomainError(f"residue series needs a finite z > 0, got {z}")
    spec.validate()
    ln_z = math.log(z)
    terms: List[float] = []
    classification: List[Tuple[Fraction, int]] = []
    small_run = 0
    poles = _left_poles(spec)
    for pole, singular, zero_order in poles:
        order = len(singular) + zero_order
        if order > 2:
            raise PoleOrderTooHigh(f"{spec.name}: pole at {pole} has order {order}")
        if len(terms) >= cap:
            raise NonConvergence(f"{spec.name}: {cap} terms at z={z:.6g} without reaching tol={tol:g}")
        term = _residue(spec, ln_z, pole, singular, zero_order)
        terms.append(term)
        classification.append((pole, order))
        partial = math.fsum(terms)
        small_run = small_run + 1 if abs(term) < tol * abs(partial) else 0
        if small_run >= 3:
            break
    else:
        value = math.fsum(terms)
        return ResidueSeriesResult(value, len(terms), 0.0, tuple(classification))

    value = math.fsum(terms)
    largest = max(abs(t) for t in terms)
    if largest > CANCELLATION_LIMIT * abs(value):
        raise NonConvergence(
            f"{spec.name}: cancellation at z={z:.6g} (largest term {largest:.3e}, sum {value:.3e})"
        )
    try:
        pole, singular, zero_order = next(poles)
        omitted = abs(_residue(spec, ln_z, pole, singular, zero_order))
    except (StopIteration, NonConvergence):
        omitted = 0.0
    logger.debug(f"[residue] {spec.name} z={z:.4g}: {len(terms)} terms, value={value:.12g}")
    return ResidueSeriesResult(value, len(terms), omitted, tuple(classification))


# ============================================================================
# Contour quadrature
# ============================================================================

def _log_integrand(spec: MellinBarnesSpec, s: complex) -> complex:
    acc = 0j
    for f in spec.factors:
        arg = float(f.offset) + f.sign * s
        if not f.in_numerator:
            acc -= special.loggamma(arg)
        elif f.incomplete:
            acc += cmath.log(complex(mpmath.gammainc(mpmath.mpc(arg.real, arg.imag), f.second_arg)))
        else:
            acc += special.loggamma(arg)
    if spec.zero_pole is ZeroPole.LEFT:
        acc -= spec.zero_pole_order * cmath.log(s)
    elif spec.zero_pole is ZeroPole.RIGHT:
        acc += spec.zero_pole_order * cmath.log(-1.0 / s)
    return acc


def contour_quadrature(spec: MellinBarnesSpec, z: float, tol: float = 1e-10,
                       max_height: float = 512.0) -> ResidueSeriesResult:
    """
    Direct quadrature of (1/2πi)∫ integrand ds along Re s = c

    c sits midway between the largest left pole and the smallest right pole;
    the imaginary range grows until the integrand drops below 1e-16 of its peak.
    """
    if not (z > 0) or math.isinf(z):
        raise DomainError(f"contour quadrature needs a finite z > 0, got {z}")
    spec.validate()
    c = spec.contour_abscissa()
    ln_z = math.log(z)

    def integrand(t: float) -> float:
        s = complex(c, t)
        return cmath.exp(_log_integrand(spec, s) - s * ln_z).real

    scale = abs(integrand(0.0))
    height = 2.0
    while height < max_height:
        magnitude = abs(cmath.exp(_log_integrand(spec, complex(c, height)) - complex(c, height) * ln_z))
        scale = max(scale, magnitude)
        if magnitude < 1e-16 * scale:
            break
        height *= 1.5
    else:
        raise NonConvergence(f"{spec.name}: integrand not negligible below height {max_height}")

    edges = [0.0]
    while edges[-1] < height:
        edges.append(min(height, edges[-1] + 2.0))
    pieces = []
    abserr = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece, err = integrate.quad(integrand, lo, hi, epsabs=1e-16 * scale, epsrel=tol, limit=200)
        pieces.append(piece)
        abserr += err
    value = math.fsum(pieces) / math.pi
    logger.debug(f"[contour] {spec.name} z={z:.4g}: c={c:.3g}, height={height:.3g}, value={value:.12g}")
    return ResidueSeriesResult(value, 0, abserr / math.pi, (), method="contour")


# ============================================================================
# Dispatcher
# ============================================================================

@lru_cache(maxsize=8192)
def evaluate_mellin_barnes(spec: MellinBarnesSpec, z: float, tol: float = DEFAULT_TOL,
                           cap: int = DEFAULT_CAP) -> ResidueSeriesResult:
    """Residue series where it converges cleanly, contour quadrature otherwise."""
    growth = spec.series_growth()
    if (growth < 0 and z <= SERIES_ENTIRE_LIMIT) or (growth == 0 and z < SERIES_RADIUS):
        try:
            return eval_residue_series(spec, z, tol, cap)
        except NonConvergence as e:
            logger.debug(f"[residue] falling back to contour: {e}")
    return contour_quadrature(spec, z, max(tol, 1e-11))


_active = {"tol": DEFAULT_TOL, "cap": DEFAULT_CAP}


def configure(tol: Optional[float] = None, cap: Optional[int] = None) -> None:
    """Set the tolerance and term cap used by the G-function wrappers below."""
    if tol is not None:
        if not 0 < tol < 1:
            raise DomainError(f"tolerance must lie in (0, 1), got {tol}")
        _active["tol"] = tol
    if cap is not None:
        if cap < 1:
            raise DomainError(f"term cap must be >= 1, got {cap}")
        _active["cap"] = cap
    evaluate_mellin_barnes.cache_clear()
    logger.debug(f"[residue] tol={_active['tol']:g}, cap={_active['cap']}")


def _evaluate(spec: MellinBarnesSpec, z: float) -> float:
    return evaluate_mellin_barnes(spec, z, _active["tol"], _active["cap"]).value


# ============================================================================
# The G-function instances
# ============================================================================

def spec_g1222(h: int, b: int) -> MellinBarnesSpec:
    """G^{1,2}_{2,2}(z | -h, 1; b, 0) = ∫ t^h e^{-t} γ(b, z t) dt"""
    return MellinBarnesSpec((GammaFactor.plus(b), GammaFactor.minus(1 + h)), ZeroPole.RIGHT, name=f"G1222[h={h},b={b}]")


def spec_m1(h: int, mu: int, c: int) -> MellinBarnesSpec:
    return MellinBarnesSpec(
        (GammaFactor.plus(mu), GammaFactor.plus(c), GammaFactor.minus(1 + h)),
        ZeroPole.RIGHT, name=f"M1[h={h},mu={mu},c={c}]",
    )


def spec_m2(h: int, mu: int, c: int, m_jp: int, phi_j: float) -> MellinBarnesSpec:
    return MellinBarnesSpec(
        (GammaFactor.plus(mu), GammaFactor.plus(c), GammaFactor.minus(1 + h),
         GammaFactor.minus(m_jp, phi_j)),
        ZeroPole.RIGHT, name=f"M2[h={h},mu={mu},c={c}]",
    )


def spec_m3(a: int, m_p: int, phi: float, complement: bool = False) -> MellinBarnesSpec:
    """
    M3 = Γ(a)Γ(m_p, φ) - Σ_r (-1)^r Γ(m_p+a+r, φ) z^{a+r}/(r!(a+r))

    complement=True moves the pole at zero to the right, leaving only the
    sum, i.e. Γ(a)Γ(m_p, φ) - M3.
    """
    zero = ZeroPole.RIGHT if complement else ZeroPole.LEFT
    return MellinBarnesSpec((GammaFactor.plus(a), GammaFactor.minus(m_p, phi)), zero,
                            name=f"M3{'c' if complement else ''}[a={a},m={m_p}]")


def spec_delta(c: int, m_jp: int, phi_j: float) -> MellinBarnesSpec:
    return MellinBarnesSpec((GammaFactor.plus(c), GammaFactor.minus(m_jp, phi_j)), ZeroPole.RIGHT,
                            name=f"Delta[c={c},m={m_jp}]")


def spec_theta2(h: int, c: int, m_jp: int, phi_j: float) -> MellinBarnesSpec:
    return MellinBarnesSpec(
        (GammaFactor.plus(c), GammaFactor.minus(1 + h), GammaFactor.minus(m_jp, phi_j)),
        ZeroPole.RIGHT, name=f"Theta2[h={h},c={c}]",
    )


def meijer_g1222(h: int, b: int, z: float) -> float:
    return _evaluate(spec_g1222(h, b), z)


def meijer_m1(h: int, l: int, params: "DerivedCoefficients", z: float) -> float:
    """M1^{(h,l)}(z) = G^{2,2}_{2,3}(z | -h, 1; μ, L_E m_{S_JE}; 0)"""
    return _evaluate(spec_m1(h, params.mu(h, l), params.c_J), z)


def meijer_m2(h: int, l: int, params: "DerivedCoefficients", z: float) -> float:
    """M1 with the extra incomplete factor Γ(m_{S_JP} - s, φ_J)."""
    spec = spec_m2(h, params.mu(h, l), params.c_J, params.m_SJP, params.varphi_J)
    return _evaluate(spec, z)


def meijer_m3(params: "DerivedCoefficients", z: float) -> float:
    return _evaluate(spec_m3(params.a_R, params.m_SiP, params.varphi_Si), z)


def meijer_m3_complement(params: "DerivedCoefficients", z: float) -> float:
    """Γ(L_R m_{S_iR}) Γ(m_{S_iP}, φ_{S_i}) - M3(z), without the cancellation."""
    if z == 0:
        return 0.0
    return _evaluate(spec_m3(params.a_R, params.m_SiP, params.varphi_Si, complement=True), z)


def meijer_delta(params: "DerivedCoefficients", t: float) -> float:
    """Δ(t) = ∫_{φ_J}^∞ u^{m_{S_JP}-1} e^{-u} γ(L_E m_{S_JE}, κ t u) du"""
    if t == 0:
        return 0.0
    return _evaluate(spec_delta(params.c_J, params.m_SJP, params.varphi_J), params.kappa * t)


def meijer_theta2(h: int, params: "DerivedCoefficients", y: float) -> float:
    """Θ2^{(h)} evaluated at G-function argument y."""
    spec = spec_theta2(h, params.c_J, params.m_SJP, params.varphi_J)
    return _evaluate(spec, y)


def meijer_v(rho: int, params: "DerivedCoefficients") -> float:
    """V(m_{S_JP} + ρ, φ_J)."""
    return v_function(float(params.m_SJP + rho), params.varphi_J)
