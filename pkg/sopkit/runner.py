"""
Runner
Single-point evaluation, parameter sweeps and figure data, written as CSV
and gnuplot-ready data blocks.
"""
import csv
import io
import logging
import math
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from pydantic import BaseModel, ConfigDict

from .analytic import Scenario, sop_system
from .asymptotic import sop_asymptotic
from .channel import FadingSet, NetworkConfig
from .config_file import Method, PointConfig, PowerRatios, ScenarioChoice, SweepAxis, SweepSpec, table1_point
from .errors import ConfigError, SopError
from .montecarlo import estimate_sop
from .settings import get_settings

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("axis", "value", "method", "scenario", "sop", "std_err", "sop1_mean", "sop2_mean", "wall_time_s")
FIGURE_IDS = (2, 3, 4, 5, 6, 7)
AGREEMENT_SIGMAS = 4.0

_METHOD_ORDER = {Method.EXACT: 0, Method.ASYMPTOTIC: 1, Method.MC: 2}
_SHORT_NAME = {Method.EXACT: "exact", Method.ASYMPTOTIC: "asym", Method.MC: "mc"}


class ResultRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    axis: str
    value: float
    method: Method
    scenario: Scenario
    sop: float
    std_err: Optional[float] = None
    sop1_mean: Optional[float] = None
    sop2_mean: Optional[float] = None
    wall_time_s: float = 0.0
    curve: str = ""

    def csv_fields(self) -> List[str]:
        return [self.axis, _fmt(self.value), self.method.value, self.scenario.value, _fmt(self.sop),
                _fmt(self.std_err), _fmt(self.sop1_mean), _fmt(self.sop2_mean), _fmt(self.wall_time_s)]


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.10g}"


def _mean(values: Iterable[float]) -> Optional[float]:
    values = list(values)
    return math.fsum(values) / len(values) if values else None


# ============================================================================
# Evaluation
# ============================================================================

def evaluate(network: NetworkConfig, fading: FadingSet, scenario: Union[Scenario, str], method: Method,
             axis: str, value: float, mc_samples: Optional[int] = None, seed: Optional[int] = None,
             curve: str = "") -> ResultRow:
    """One method at one parameter point."""
    scenario = Scenario(scenario)
    start = time.perf_counter()
    std_err = sop1 = sop2 = None
    try:
        if method is Method.EXACT:
            breakdown = sop_system(network, fading, scenario)
            sop = breakdown.system
            sop1 = _mean(s for pair in breakdown.pairs for s in pair.sop1_per_k)
            sop2 = _mean(s for pair in breakdown.pairs for s in pair.sop2_per_k)
        elif method is Method.ASYMPTOTIC:
            sop = sop_asymptotic(network, fading, scenario).raw
        else:
            estimate = estimate_sop(network, fading, scenario, n=mc_samples, seed=seed)
            sop, std_err = estimate.p_hat, estimate.std_err
            sop1, sop2 = estimate.sop1_mean, estimate.sop2_mean
    except SopError as e:
        logger.error(f"Error evaluating {method.value}/{scenario.value} at {axis}={value:g}: {e}")
        logger.debug(traceback.format_exc())
        raise
    elapsed = time.perf_counter() - start
    logger.info(f"[sweep] {curve or scenario.value} {method.value} {axis}={value:g}: SOP={sop:.6g} ({elapsed:.2f}s)")
    return ResultRow(axis=axis, value=value, method=method, scenario=scenario, sop=sop, std_err=std_err,
                     sop1_mean=sop1, sop2_mean=sop2, wall_time_s=elapsed, curve=curve)


def _sort_key(row: ResultRow) -> Tuple:
    return row.curve, row.scenario.value, _METHOD_ORDER[row.method], row.value


def check_agreement(rows: Sequence[ResultRow]) -> List[Tuple[ResultRow, ResultRow]]:
    """Exact/MC pairs further apart than 4 standard errors (and 0.01); each is logged."""
    exact = {(r.curve, r.scenario, r.value): r for r in rows if r.method is Method.EXACT}
    mismatches = []
    for mc in (r for r in rows if r.method is Method.MC):
        ref = exact.get((mc.curve, mc.scenario, mc.value))
        if ref is None:
            continue
        if abs(ref.sop - mc.sop) > max(0.01, AGREEMENT_SIGMAS * (mc.std_err or 0.0)):
            logger.warning(f"[sweep] {mc.scenario.value} {mc.axis}={mc.value:g}: exact {ref.sop:.6g} "
                           f"vs mc {mc.sop:.6g} ± {mc.std_err:.2g}")
            mismatches.append((ref, mc))
    return mismatches


def run_point(point: PointConfig) -> List[ResultRow]:
    """One row per requested method and scenario at the configured point."""
    value = 10.0 * math.log10(point.network.gbar_I)
    rows = [evaluate(point.network, point.fading, scenario, method, SweepAxis.GBAR_I_DB.value, value,
                     point.mc_samples, point.seed)
            for scenario in point.scenario.scenarios() for method in point.methods]
    check_agreement(rows)
    return sorted(rows, key=_sort_key)


def apply_axis(network: NetworkConfig, ratios: PowerRatios, axis: SweepAxis, value: float) -> NetworkConfig:
    """Network at one sweep value; a γ̄_I sweep carries the ratio-tied powers along."""
    axis = SweepAxis(axis)
    if axis is SweepAxis.GBAR_I_DB:
        return ratios.apply(network, 10.0 ** (value / 10.0))
    if axis is SweepAxis.GBAR_SJ_DB:
        return network.updated(gbar_SJ=(10.0 ** (value / 10.0),) * network.N)
    if axis is SweepAxis.RS:
        return network.updated(Rs=value)
    if not float(value).is_integer():
        raise ConfigError(f"{axis.value} sweep values must be integers, got {value}", key="sweep_values")
    if axis is SweepAxis.M:
        L_E = network.L_E[0] if network.L_E else 1
        return network.updated(M=int(value), L_E=(L_E,) * int(value))
    return network.updated(L_R=int(value), L_D=int(value), L_E=(int(value),) * network.M)


def run_sweep(point: PointConfig, spec: Optional[SweepSpec] = None, workers: Optional[int] = None,
              curve: str = "") -> List[ResultRow]:
    """
    Cartesian product of scenarios, methods and sweep values.

    Returns:
        Rows sorted by (curve, scenario, method, value) whatever the completion order
    """
    spec = spec or point.sweep
    if spec is None:
        raise ConfigError("no sweep defined (set sweep_axis and sweep_values)", key="sweep_axis")
    tasks = [(scenario, method, value)
             for scenario in spec.scenario.scenarios() for method in spec.methods for value in spec.values]

    def work(task) -> ResultRow:
        scenario, method, value = task
        network = apply_axis(point.network, point.ratios, spec.axis, value)
        return evaluate(network, point.fading, scenario, method, spec.axis.value, value,
                        spec.mc_samples, spec.seed, curve)

    with ThreadPoolExecutor(max_workers=workers or get_settings().workers) as pool:
        rows = list(pool.map(work, tasks))
    check_agreement(rows)
    return sorted(rows, key=_sort_key)


# ============================================================================
# Output
# ============================================================================

def write_csv(rows: Sequence[ResultRow], out: Union[str, Path, TextIO]) -> None:
    """CSV_COLUMNS header, one line per row, numbers with 10 significant digits."""
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


def _series(rows: Sequence[ResultRow]) -> Dict[str, Dict[float, float]]:
    series: Dict[str, Dict[float, float]] = {}
    for row in rows:
        series.setdefault(f"sop_{_SHORT_NAME[row.method]}_{row.curve}", {})[row.value] = row.sop
    return series


def figure_table(axis: str, rows: Sequence[ResultRow]) -> str:
    """Wide CSV: the sweep value followed by one sop_<method>_<curve> column per series."""
    series = _series(sorted(rows, key=lambda r: (_METHOD_ORDER[r.method], r.curve)))
    xs = sorted({row.value for row in rows})
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([axis, *series])
    for x in xs:
        writer.writerow([_fmt(x), *(_fmt(points.get(x)) for points in series.values())])
    return buffer.getvalue()


def gnuplot_blocks(rows: Sequence[ResultRow]) -> str:
    """One x/y block per series, separated by two blank lines (gnuplot `index`)."""
    series = _series(sorted(rows, key=lambda r: (_METHOD_ORDER[r.method], r.curve)))
    blocks = []
    for name, points in series.items():
        lines = [f"# {name}"] + [f"{_fmt(x)} {_fmt(y)}" for x, y in sorted(points.items())]
        blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"


# ============================================================================
# Figures
# ============================================================================

@dataclass
class FigureCurve:
    label: str
    point: PointConfig
    scenario: ScenarioChoice
    methods: Tuple[Method, ...] = (Method.EXACT, Method.MC)


@dataclass
class FigureSpec:
    axis: SweepAxis
    values: Tuple[float, ...]
    curves: List[FigureCurve] = field(default_factory=list)


def figure_spec(fig_id: int) -> FigureSpec:
    """
    Figure protocols on the reference parameter set (Rs = 1):

    2/3: SOP vs γ̄_I with (without) jammer, σ_i = δ = σ_J = 0.1, L ∈ {1, 2, 3}
    4: SOP vs γ̄_SJ at γ̄_I = γ̄_S = γ̄_R = 20 dB, L ∈ {1, 2, 3}
    5/6: SOP vs M for γ̄_SJ ∈ {10, 20, 30} dB and no jammer, L_D = 4 (1)
    7: SOP vs M with and without jammer, single- and dual-antenna legitimate nodes
    """
    if fig_id in (2, 3):
        scenario = ScenarioChoice.JAMMER if fig_id == 2 else ScenarioChoice.NO_JAMMER
        ratios = PowerRatios(sigma=0.1, delta=0.1, sigma_J=0.1)
        curves = [FigureCurve(f"L{L}", table1_point(L=L).model_copy(update={"ratios": ratios}), scenario,
                              (Method.EXACT, Method.ASYMPTOTIC, Method.MC))
                  for L in (1, 2, 3)]
        return FigureSpec(SweepAxis.GBAR_I_DB, tuple(float(v) for v in range(0, 45, 5)), curves)
    if fig_id == 4:
        curves = [FigureCurve(f"L{L}", table1_point(L=L), ScenarioChoice.JAMMER) for L in (1, 2, 3)]
        return FigureSpec(SweepAxis.GBAR_SJ_DB, tuple(float(v) for v in range(0, 35, 5)), curves)
    if fig_id in (5, 6):
        L_D = 4 if fig_id == 5 else 1
        curves = [FigureCurve(f"SJ{db}dB", table1_point(L=1, L_D=L_D, gbar_SJ=10.0 ** (db / 10.0)),
                              ScenarioChoice.JAMMER)
                  for db in (10, 20, 30)]
        curves.append(FigureCurve("nojammer", table1_point(L=1, L_D=L_D), ScenarioChoice.NO_JAMMER))
        return FigureSpec(SweepAxis.M, tuple(float(m) for m in range(1, 9)), curves)
    if fig_id == 7:
        curves = []
        for scenario in (ScenarioChoice.NO_JAMMER, ScenarioChoice.JAMMER):
            for L, L_E in ((2, 1), (1, 2)):
                label = f"{scenario.value}_L{L}_LE{L_E}"
                curves.append(FigureCurve(label, table1_point(L=L, L_E=L_E), scenario))
        return FigureSpec(SweepAxis.M, tuple(float(m) for m in range(1, 9)), curves)
    raise ConfigError(f"unknown figure {fig_id}; choose one of {', '.join(map(str, FIGURE_IDS))}")


def run_figure(fig_id: int, mc_samples: Optional[int] = None, seed: Optional[int] = None,
               methods: Optional[Sequence[Method]] = None, workers: Optional[int] = None) -> Tuple[str, List[ResultRow]]:
    """Rows of every curve of a figure, plus the name of its sweep axis."""
    fig = figure_spec(fig_id)
    settings = get_settings()
    rows: List[ResultRow] = []
    for curve in fig.curves:
        chosen = tuple(m for m in curve.methods if methods is None or m in methods)
        if not chosen:
            continue
        spec = SweepSpec(axis=fig.axis, values=fig.values, scenario=curve.scenario, methods=chosen,
                         mc_samples=mc_samples or settings.mc_samples, seed=settings.seed if seed is None else seed)
        rows.extend(run_sweep(curve.point, spec, workers=workers, curve=curve.label))
    return fig.axis.value, rows


def reproduce_figure(fig_id: int, out_dir: Union[str, Path], **options) -> List[Path]:
    """Write figN.csv (wide table) and figN.gp-data (gnuplot blocks) into out_dir."""
    axis, rows = run_figure(fig_id, **options)
    out_dir = Path(out_dir)
    paths = [out_dir / f"fig{fig_id}.csv", out_dir / f"fig{fig_id}.gp-data"]
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths[0].write_text(figure_table(axis, rows), encoding="utf-8")
        paths[1].write_text(gnuplot_blocks(rows), encoding="utf-8")
    except OSError as e:
        logger.error(f"Error writing figure {fig_id} to {out_dir}: {e}")
        raise
    for path in paths:
        logger.info(f"[figure] wrote {path}")
    return paths
