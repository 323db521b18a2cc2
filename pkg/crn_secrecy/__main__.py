"""
CLI entry point for crn-secrecy-outage.
Usage: sop point params.env | sop sweep params.env | sop figure 2 --out figures | sop selftest
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from sopkit import specfun
from sopkit.analytic import clear_cache
from sopkit.channel import TABLE1_FADING
from sopkit.config_file import Method, parse_config, dump_config, METHOD_ALIASES, PRESETS
from sopkit.errors import ConfigError, SopError
from sopkit.runner import FIGURE_IDS, reproduce_figure, rows_to_csv, run_point, run_sweep, write_csv
from sopkit.selftest import run_selftest
from sopkit.settings import get_settings

from . import __version__

logger = logging.getLogger("crn_secrecy")

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

PARAMETER_HELP = (
    "Parameter file keys: N, M, L_R, L_D, L_E, gbar_S, gbar_SJ, gbar_R, gbar_I (each power also as *_dB), "
    "Rs, m_<link> and lambda_<link> for links S_iR, RD, S_iE, S_JE, RE, RP, S_iP, S_JP, optional sigma/delta/sigma_J "
    "ratios, scenario, methods, mc_samples, seed, sweep_axis, sweep_values. "
    f"`preset = table1` supplies the reference set: N={PRESETS['table1']['N']}, M={PRESETS['table1']['M']}, "
    + ", ".join(f"{label.value} (m={m}, lambda={lam})" for label, (m, lam) in TABLE1_FADING.items())
    + "."
)


class _UsageParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _methods(value: str) -> List[Method]:
    methods = []
    for name in value.split(","):
        name = name.strip().lower()
        try:
            methods.append(METHOD_ALIASES.get(name) or Method(name))
        except ValueError:
            raise argparse.ArgumentTypeError(f"unknown method {name!r} (exact, asym, mc)") from None
    return methods


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mc-samples", type=int, help="Monte Carlo sample count (default: from file or settings)")
    common.add_argument("--seed", type=int, help="RNG seed (default: from file or settings)")
    common.add_argument("--tol", type=float, help="Residue-series tolerance (default: 1e-12)")
    common.add_argument("--methods", type=_methods, help="Comma-separated subset of exact,asym,mc")
    common.add_argument("--workers", type=int, help="Worker threads (default: settings)")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = _UsageParser(
        prog="sop",
        description="Secrecy outage probability of a dual-hop underlay CRN with a friendly jammer",
        epilog=PARAMETER_HELP,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_UsageParser)

    point = sub.add_parser("point", parents=[common], help="Evaluate one parameter point")
    point.add_argument("config", type=Path, help="Parameter file")
    point.add_argument("--out", type=Path, help="CSV output (default: stdout)")
    point.add_argument("--dump-config", type=Path, metavar="PATH",
                       help="Also write the resolved parameter file ('-' for stdout)")

    sweep = sub.add_parser("sweep", parents=[common], help="Run the sweep defined in a parameter file")
    sweep.add_argument("config", type=Path, help="Parameter file with sweep_axis and sweep_values")
    sweep.add_argument("--out", type=Path, help="CSV output (default: stdout)")

    figure = sub.add_parser("figure", parents=[common], help="Regenerate the data of one figure")
    figure.add_argument("id", type=int, help=f"Figure number ({', '.join(map(str, FIGURE_IDS))})")
    figure.add_argument("--out", type=Path, default=Path("figures"), help="Output directory (default: figures)")

    sub.add_parser("selftest", parents=[common], help="Run the built-in quick checks")
    return parser


def _configure(args) -> None:
    settings = get_settings()
    level = logging.DEBUG if args.verbose else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    specfun.configure(tol=args.tol or settings.tol, cap=settings.series_cap)
    clear_cache()


def _load(args):
    point = parse_config(args.config)
    updates = {}
    if args.methods:
        updates["methods"] = tuple(args.methods)
    if args.mc_samples:
        updates["mc_samples"] = args.mc_samples
    if args.seed is not None:
        updates["seed"] = args.seed
    if updates and point.sweep is not None:
        updates["sweep"] = point.sweep.model_copy(update=dict(updates))
    return point.model_copy(update=updates)


def _emit(rows, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(rows_to_csv(rows))
    else:
        write_csv(rows, out)
        logger.info(f"Wrote {len(rows)} row(s) to {out}")


def run(args) -> int:
    if args.command == "selftest":
        results = run_selftest()
        failed = [r for r in results if not r.passed]
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        return EXIT_NUMERICAL if failed else EXIT_OK

    if args.command == "figure":
        if args.id not in FIGURE_IDS:
            raise ConfigError(f"unknown figure {args.id}; choose one of {', '.join(map(str, FIGURE_IDS))}")
        paths = reproduce_figure(args.id, args.out, mc_samples=args.mc_samples, seed=args.seed,
                                 methods=args.methods, workers=args.workers)
        for path in paths:
            print(path)
        return EXIT_OK

    point = _load(args)
    if args.command == "point":
        if args.dump_config is not None:
            text = dump_config(point)
            if str(args.dump_config) == "-":
                sys.stdout.write(text)
            else:
                args.dump_config.write_text(text, encoding="utf-8")
        _emit(run_point(point), args.out)
    else:
        _emit(run_sweep(point, workers=args.workers), args.out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure(args)
    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_USAGE
    except SopError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
