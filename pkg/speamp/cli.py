import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from speamp import analytics, sweep
from speamp.config import Config, load_config, merge_overrides
from speamp.models import DegenerateParameterError, ParameterError, SpeampError, SweepSpec
from speamp.protocol import aggregate, simulate
from speamp.recorder import format_value, write_rows

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3

MAX_LISTED_OFFENDERS = 20


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s.%(msecs)03d [%(levelname)s] %(name)s: %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
    )


def _t2_arg(raw: str):
    if raw.strip().lower() == "auto":
        return "auto"
    try:
        return float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {raw!r}") from None


def _add_protocol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, help="initial fidelity")
    p.add_argument("--a2", type=float, help="entanglement coefficient a^2")
    p.add_argument("--alpha", type=float, help="H amplitude of the polarization qubit (beta >= 0)")
    p.add_argument("--t1", type=float, help="VBS1 transmission")
    p.add_argument("--t2", type=_t2_arg, help="VBS2 transmission, or 'auto' for the matched value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speamp", description="Single-photon entanglement amplification simulator")
    parser.add_argument("--config", type=Path, help="key=value config file; flags override it")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--workers", type=int, help="worker processes for sweeps, figures and validation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one point and compare with the closed forms")
    _add_protocol_flags(run)
    run.add_argument("--out", type=Path, help="also write the row as CSV")
    run.add_argument("--tolerance", type=float)

    sw = sub.add_parser("sweep", help="sweep one parameter, one CSV row per point")
    _add_protocol_flags(sw)
    sw.add_argument("--variable", choices=("t1", "a2", "eta"))
    sw.add_argument("--start", type=float)
    sw.add_argument("--stop", type=float)
    sw.add_argument("--steps", type=int)
    sw.add_argument("--out", type=Path)

    fig = sub.add_parser("figure", help="CSV data behind one figure")
    fig.add_argument("n", type=int, choices=sweep.FIGURES)
    fig.add_argument("--out", type=Path)
    fig.add_argument("--simulate", action="store_true", help="add simulated columns to figures 4 and 5")

    val = sub.add_parser("validate", help="compare simulation and closed forms on a grid")
    # grid axes only; t2 is always matched
    val.add_argument("--eta", type=float, help="pin the eta axis")
    val.add_argument("--a2", type=float, help="pin the a^2 axis")
    val.add_argument("--t1", type=float, help="pin the t1 axis")
    val.add_argument("--tolerance", type=float)
    return parser


def _resolve_config(args: argparse.Namespace) -> Config:
    config = load_config(args.config) if args.config else Config()
    flags = {
        name: getattr(args, name, None)
        for name in (
            "eta",
            "a2",
            "alpha",
            "t1",
            "t2",
            "variable",
            "start",
            "stop",
            "steps",
            "log_level",
            "workers",
            "tolerance",
        )
    }
    out = getattr(args, "out", None)
    return merge_overrides(config, out=str(out) if out is not None else None, **flags)


# --- Commands ---


def cmd_run(config: Config) -> int:
    params = sweep.params_from_config(config.protocol)
    outcome = aggregate(simulate(params), params.eta)
    report = analytics.closed_form_report(params.eta, params.a, params.t1, params.t2)

    point = {
        "eta": params.eta,
        "a2": params.a2,
        "t1": params.t1,
        "t2": outcome.t2,
        "alpha": params.alpha,
        "beta": params.beta,
    }
    print(" ".join(f"{k}={format_value(v)}" for k, v in point.items()))
    print(f"{'metric':<10}{'simulated':>18}{'closed':>18}{'abs_diff':>18}")
    for metric in sweep.METRICS:
        sim_value, closed_value = getattr(outcome, metric), getattr(report, metric)
        diff = abs(sim_value - closed_value) if sim_value is not None and closed_value is not None else None
        print(f"{metric:<10}{format_value(sim_value):>18}{format_value(closed_value):>18}{format_value(diff):>18}")
        if diff is not None and diff > config.tolerance:
            logger.warning(f"{metric} deviates by {diff:.3e} (> {config.tolerance:g})")
    if report.near_boundary:
        logger.warning(f"t1={params.t1} lies at the edge of the closed-form domain")

    if config.out:
        write_rows(Path(config.out), [sweep.sweep_row(outcome, report)])
    return EXIT_OK


def cmd_sweep(config: Config) -> int:
    spec = SweepSpec(
        variable=config.sweep.variable, start=config.sweep.start, stop=config.sweep.stop, steps=config.sweep.steps
    )
    rows = sweep.run_sweep(spec, config.protocol, workers=config.workers)
    write_rows(Path(config.out) if config.out else None, rows)
    return EXIT_OK


def cmd_figure(n: int, with_simulation: bool, config: Config) -> int:
    rows = sweep.figure_rows(n, simulate=with_simulation, workers=config.workers)
    write_rows(Path(config.out) if config.out else None, rows)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, config: Config) -> int:
    etas, a2s, t1s = sweep.default_validation_grid()
    # a flag pins its axis to one value; protocol keys from --config do not
    etas = [args.eta] if args.eta is not None else etas
    a2s = [args.a2] if args.a2 is not None else a2s
    t1s = [args.t1] if args.t1 is not None else t1s
    report = sweep.validate_grid(etas, a2s, t1s, tolerance=config.tolerance, workers=config.workers)

    status = "PASS" if report.passed else "FAIL"
    print(f"{status}: {report.points} points, tolerance {config.tolerance:g}")
    if report.worst is not None:
        print(f"worst deviation: {report.worst}")
    for deviation in report.offenders[:MAX_LISTED_OFFENDERS]:
        print(f"  {deviation}")
    if len(report.offenders) > MAX_LISTED_OFFENDERS:
        print(f"  ... and {len(report.offenders) - MAX_LISTED_OFFENDERS} more")
    return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entry point: `uv run speamp <command>`"""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = _resolve_config(args)
        setup_logging(config.log_level)
        if config.workers < 1:
            raise ParameterError(f"workers must be at least 1, got {config.workers}")
        if not config.tolerance > 0.0:
            raise ParameterError(f"tolerance must be positive, got {config.tolerance}")

        if args.command == "run":
            return cmd_run(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "figure":
            return cmd_figure(args.n, args.simulate, config)
        return cmd_validate(args, config)
    except DegenerateParameterError as exc:
        print(f"speamp: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ParameterError as exc:
        parser.print_usage(sys.stderr)
        print(f"speamp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpeampError:
        logger.exception("Simulation failed")
        return EXIT_VALIDATION_FAILED
    except (ValueError, OSError) as exc:
        print(f"speamp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logger.exception("Unexpected error")
        return EXIT_VALIDATION_FAILED
