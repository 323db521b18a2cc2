"""
Parameter files
Flat `key = value` files (python-dotenv syntax, `#` comments) resolved
into validated network, fading and run settings.

Powers are linear SNRs; any power key also accepts a `_dB` variant.
`preset = table1` fills unset link parameters and N, M from the
reference parameter set. `sigma`, `delta` and `sigma_J` tie γ̄_S, γ̄_R
and γ̄_SJ to γ̄_I so they move together in a γ̄_I sweep.
"""
import io
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .channel import TABLE1_FADING, FadingSet, LinkFading, LinkLabel, NetworkConfig
from .errors import ConfigError

logger = logging.getLogger(__name__)


class Method(str, Enum):
    EXACT = "exact"
    ASYMPTOTIC = "asymptotic"
    MC = "mc"


class ScenarioChoice(str, Enum):
    JAMMER = "jammer"
    NO_JAMMER = "no_jammer"
    BOTH = "both"

    def scenarios(self) -> List[str]:
        return ["jammer", "no_jammer"] if self is ScenarioChoice.BOTH else [self.value]


class SweepAxis(str, Enum):
    GBAR_I_DB = "gbar_I_dB"
    GBAR_SJ_DB = "gbar_SJ_dB"
    M = "M"
    L = "L"
    RS = "Rs"


METHOD_ALIASES = {"asym": Method.ASYMPTOTIC, "monte_carlo": Method.MC}
MIN_MC_SAMPLES = 1000

PRESETS: Dict[str, Dict[str, object]] = {
    "table1": {"N": 4, "M": 3, **{label: pair for label, pair in TABLE1_FADING.items()}},
}


class PowerRatios(BaseModel):
    """γ̄_I / γ̄_S, γ̄_I / γ̄_R and γ̄_I / γ̄_SJ; unset ratios leave the power fixed."""

    model_config = ConfigDict(frozen=True)

    sigma: Optional[float] = Field(default=None, gt=0)
    delta: Optional[float] = Field(default=None, gt=0)
    sigma_J: Optional[float] = Field(default=None, gt=0)

    def apply(self, cfg: NetworkConfig, gbar_I: float) -> NetworkConfig:
        changes: Dict[str, object] = {"gbar_I": gbar_I}
        if self.sigma is not None:
            changes["gbar_S"] = (gbar_I / self.sigma,) * cfg.N
        if self.delta is not None:
            changes["gbar_R"] = gbar_I / self.delta
        if self.sigma_J is not None:
            changes["gbar_SJ"] = (gbar_I / self.sigma_J,) * cfg.N
        return cfg.updated(**changes)


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    axis: SweepAxis
    values: Tuple[float, ...] = Field(min_length=1)
    scenario: ScenarioChoice = ScenarioChoice.JAMMER
    methods: Tuple[Method, ...] = (Method.EXACT, Method.ASYMPTOTIC)
    mc_samples: int = Field(default=1_000_000, ge=1)
    seed: int = 20240601

    @model_validator(mode="after")
    def _enough_samples(self) -> "SweepSpec":
        if Method.MC in self.methods and self.mc_samples < MIN_MC_SAMPLES:
            raise ValueError(f"mc_samples must be >= {MIN_MC_SAMPLES} when mc is requested")
        return self


class PointConfig(BaseModel):
    """Everything one parameter file resolves to."""

    model_config = ConfigDict(frozen=True)

    network: NetworkConfig
    fading: FadingSet
    ratios: PowerRatios = PowerRatios()
    scenario: ScenarioChoice = ScenarioChoice.JAMMER
    methods: Tuple[Method, ...] = (Method.EXACT, Method.ASYMPTOTIC)
    mc_samples: int = 1_000_000
    seed: int = 20240601
    sweep: Optional[SweepSpec] = None


# ============================================================================
# Reading
# ============================================================================

def _line_numbers(text: str) -> Dict[str, int]:
    lines = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key = stripped.split("=", 1)[0].strip()
        if key.startswith("export "):
            key = key[len("export "):].strip()
        lines.setdefault(key, number)
    return lines


class _Reader:
    """Typed access to raw values with line-aware errors."""

    def __init__(self, values: Dict[str, Optional[str]], lines: Dict[str, int]):
        self.values = values
        self.lines = lines

    def error(self, message: str, key: Optional[str] = None) -> ConfigError:
        return ConfigError(message, key=key, line=self.lines.get(key) if key else None)

    def has(self, key: str) -> bool:
        return key in self.values

    def raw(self, key: str) -> str:
        value = self.values.get(key)
        if value is None or not value.strip():
            raise self.error("has no value", key)
        return value.strip()

    def number(self, key: str, kind=float):
        raw = self.raw(key)
        try:
            value = float(raw)
        except ValueError:
            raise self.error(f"expected a number, got {raw!r}", key) from None
        if kind is int:
            if not value.is_integer():
                raise self.error(f"expected an integer, got {raw!r}", key)
            return int(value)
        return value

    def numbers(self, key: str, kind=float) -> Tuple:
        parts = [p.strip() for p in self.raw(key).split(",") if p.strip()]
        try:
            values = tuple(float(p) for p in parts)
        except ValueError:
            raise self.error(f"expected a comma-separated list of numbers, got {self.values[key]!r}", key) from None
        if kind is int:
            if not all(v.is_integer() for v in values):
                raise self.error("expected integers", key)
            return tuple(int(v) for v in values)
        return values

    def power(self, key: str, scalar: bool = True):
        """Linear value of `key` or of `key_dB`; None when neither is present."""
        db_key = f"{key}_dB"
        if self.has(key) and self.has(db_key):
            raise self.error(f"both {key} and {db_key} given", db_key)
        if self.has(key):
            return self.number(key) if scalar else self.numbers(key)
        if self.has(db_key):
            if scalar:
                return 10.0 ** (self.number(db_key) / 10.0)
            return tuple(10.0 ** (v / 10.0) for v in self.numbers(db_key))
        return None

    def choice(self, key: str, enum, default):
        if not self.has(key):
            return default
        raw = self.raw(key)
        try:
            return enum(raw)
        except ValueError:
            allowed = ", ".join(e.value for e in enum)
            raise self.error(f"unknown value {raw!r} (allowed: {allowed})", key) from None


def _methods(reader: _Reader, key: str) -> Tuple[Method, ...]:
    methods = []
    for name in reader.raw(key).split(","):
        name = name.strip().lower()
        try:
            methods.append(METHOD_ALIASES.get(name) or Method(name))
        except ValueError:
            raise reader.error(f"unknown method {name!r}", key) from None
    return tuple(dict.fromkeys(methods))


def _fading(reader: _Reader, preset: Dict[str, object]) -> FadingSet:
    links = {}
    for label in LinkLabel:
        defaults = preset.get(label)
        m_key, lam_key = f"m_{label.value}", f"lambda_{label.value}"
        m = reader.number(m_key, int) if reader.has(m_key) else (defaults[0] if defaults else None)
        lam = reader.number(lam_key) if reader.has(lam_key) else (defaults[1] if defaults else None)
        for key, value in ((m_key, m), (lam_key, lam)):
            if value is None:
                raise ConfigError("required parameter missing (or set `preset = table1`)", key=key)
        try:
            links[label.value] = LinkFading(label=label, m=m, lam=lam)
        except ValidationError as e:
            raise _validation_error(reader, e, key_map={"m": m_key, "lam": lam_key}) from None
    return FadingSet(**links)


def _validation_error(reader: _Reader, error: ValidationError,
                      key_map: Optional[Dict[str, str]] = None) -> ConfigError:
    first = error.errors()[0]
    loc = [str(part) for part in first.get("loc", ())]
    key = (key_map or {}).get(loc[0], loc[0]) if loc else None
    return reader.error(first.get("msg", "invalid value"), key)


def _required(reader: _Reader, key: str, value):
    if value is None:
        raise ConfigError("required parameter missing", key=key)
    return value


def _scalar_or_tuple(value):
    if isinstance(value, tuple) and len(value) == 1:
        return value[0]
    return value


def parse_text(text: str, source: str = "<text>") -> PointConfig:
    """Resolve the contents of a parameter file; see parse_config."""
    values = dotenv_values(stream=io.StringIO(text), interpolate=False)
    reader = _Reader(dict(values), _line_numbers(text))

    preset_name = reader.raw("preset").lower() if reader.has("preset") else None
    if preset_name is not None and preset_name not in PRESETS:
        raise reader.error(f"unknown preset {preset_name!r}", "preset")
    preset = PRESETS.get(preset_name, {})

    fading = _fading(reader, preset)
    N = reader.number("N", int) if reader.has("N") else _required(reader, "N", preset.get("N"))
    M = reader.number("M", int) if reader.has("M") else _required(reader, "M", preset.get("M"))

    ratios = PowerRatios(**{key: reader.number(key) for key in ("sigma", "delta", "sigma_J") if reader.has(key)})
    gbar_I = _required(reader, "gbar_I", reader.power("gbar_I"))
    powers = {}
    for key, ratio in (("gbar_S", ratios.sigma), ("gbar_R", ratios.delta), ("gbar_SJ", ratios.sigma_J)):
        explicit = reader.power(key, scalar=key == "gbar_R")
        if explicit is not None and ratio is not None:
            raise reader.error(f"{key} is fixed by its ratio to gbar_I; remove one of them", key)
        if explicit is None and ratio is None:
            raise ConfigError("required parameter missing", key=key)
        powers[key] = explicit if explicit is not None else gbar_I / ratio

    if reader.has("L_E"):
        L_E = _scalar_or_tuple(reader.numbers("L_E", int))
    else:
        L_E = () if M == 0 else _required(reader, "L_E", None)
    data = {
        "N": N,
        "M": M,
        "L_R": reader.number("L_R", int) if reader.has("L_R") else _required(reader, "L_R", None),
        "L_D": reader.number("L_D", int) if reader.has("L_D") else _required(reader, "L_D", None),
        "L_E": L_E,
        "gbar_S": _scalar_or_tuple(powers["gbar_S"]),
        "gbar_SJ": _scalar_or_tuple(powers["gbar_SJ"]),
        "gbar_R": powers["gbar_R"],
        "gbar_I": gbar_I,
        "Rs": reader.number("Rs") if reader.has("Rs") else _required(reader, "Rs", None),
    }
    try:
        network = NetworkConfig(**data)
    except ValidationError as e:
        raise _validation_error(reader, e) from None

    scenario = reader.choice("scenario", ScenarioChoice, ScenarioChoice.JAMMER)
    methods = _methods(reader, "methods") if reader.has("methods") else (Method.EXACT, Method.ASYMPTOTIC)
    mc_samples = reader.number("mc_samples", int) if reader.has("mc_samples") else 1_000_000
    seed = reader.number("seed", int) if reader.has("seed") else 20240601

    sweep = None
    if reader.has("sweep_axis"):
        if not reader.has("sweep_values"):
            raise ConfigError("required when sweep_axis is set", key="sweep_values")
        try:
            sweep = SweepSpec(
                axis=reader.choice("sweep_axis", SweepAxis, None),
                values=reader.numbers("sweep_values"),
                scenario=scenario,
                methods=methods,
                mc_samples=mc_samples,
                seed=seed,
            )
        except ValidationError as e:
            raise _validation_error(reader, e, key_map={"axis": "sweep_axis", "values": "sweep_values"}) from None
    elif Method.MC in methods and mc_samples < MIN_MC_SAMPLES:
        raise reader.error(f"must be >= {MIN_MC_SAMPLES} when mc is requested", "mc_samples")

    for key in sorted(set(reader.values) - {"preset"} - _known_keys()):
        logger.warning(f"[config] {source}: ignoring unknown key '{key}' (line {reader.lines.get(key)})")

    logger.debug(f"[config] {source}: N={N}, M={M}, preset={preset_name}")
    return PointConfig(network=network, fading=fading, ratios=ratios, scenario=scenario, methods=methods,
                       mc_samples=mc_samples, seed=seed, sweep=sweep)


def _known_keys() -> set:
    keys = {"N", "M", "L_R", "L_D", "L_E", "Rs", "sigma", "delta", "sigma_J", "scenario", "methods",
            "mc_samples", "seed", "sweep_axis", "sweep_values"}
    for power in ("gbar_S", "gbar_SJ", "gbar_R", "gbar_I"):
        keys.update({power, f"{power}_dB"})
    for label in LinkLabel:
        keys.update({f"m_{label.value}", f"lambda_{label.value}"})
    return keys


def parse_config(path: Union[str, Path]) -> PointConfig:
    """
    Read and validate a parameter file.

    Raises:
        ConfigError: unreadable file, missing key or invalid value; the
            message names the key and its line
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_text(text, source=str(path))


# ============================================================================
# Writing
# ============================================================================

def _join(values: Iterable) -> str:
    return ",".join(repr(v) for v in values)


def dump_config(point: PointConfig) -> str:
    """Resolved parameter file; parse_text(dump_config(p)) == p."""
    net, ratios = point.network, point.ratios
    lines = ["# resolved SOP parameters", f"N = {net.N}", f"M = {net.M}"]
    for label in LinkLabel:
        link = point.fading.link(label)
        lines += [f"m_{label.value} = {link.m}", f"lambda_{label.value} = {link.lam!r}"]
    lines += [f"L_R = {net.L_R}", f"L_D = {net.L_D}"]
    if net.L_E:
        lines.append(f"L_E = {_join(net.L_E)}")
    lines.append(f"gbar_I = {net.gbar_I!r}")
    for key, ratio, value in (("sigma", ratios.sigma, f"gbar_S = {_join(net.gbar_S)}"),
                              ("delta", ratios.delta, f"gbar_R = {net.gbar_R!r}"),
                              ("sigma_J", ratios.sigma_J, f"gbar_SJ = {_join(net.gbar_SJ)}")):
        lines.append(f"{key} = {ratio!r}" if ratio is not None else value)
    lines += [f"Rs = {net.Rs!r}", f"scenario = {point.scenario.value}",
              f"methods = {','.join(m.value for m in point.methods)}",
              f"mc_samples = {point.mc_samples}", f"seed = {point.seed}"]
    if point.sweep is not None:
        lines += [f"sweep_axis = {point.sweep.axis.value}", f"sweep_values = {_join(point.sweep.values)}"]
    return "\n".join(lines) + "\n"


def table1_point(L: int = 1, gbar_dB: float = 20.0, Rs: float = 1.0, **overrides) -> PointConfig:
    """Reference parameter set with L_R = L_D = L_E = L and every power at gbar_dB."""
    gbar = 10.0 ** (gbar_dB / 10.0)
    preset = PRESETS["table1"]
    data = {"N": preset["N"], "M": preset["M"], "L_R": L, "L_D": L, "L_E": L,
            "gbar_S": gbar, "gbar_SJ": gbar, "gbar_R": gbar, "gbar_I": gbar, "Rs": Rs}
    data.update(overrides)
    return PointConfig(network=NetworkConfig(**data), fading=FadingSet.table1())
