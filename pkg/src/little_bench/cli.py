import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from rich.console import Console
from rich.logging import RichHandler

from little_bench.bounds import bound_report
from little_bench.core import generate_instance, symmetrize
from little_bench.domain import (
    DEFAULT_XI_SK,
    Axis,
    ConfigError,
    Distribution,
    ExperimentConfig,
    LittleBenchError,
    OutputFormat,
    Problem,
    SweepResult,
)
from little_bench.harness import (
    check_bounds,
    run_trials,
    sk_comparison_report,
    sweep,
    universality_compare,
)
from little_bench.persist import (
    SWEEP_HEADER,
    flatten_record,
    format_value,
    render,
    sweep_rows,
    to_record,
    write_plot_data,
    write_text,
)
from little_bench.solvers import solve_max, solve_minmax, solve_sk
from little_bench.version import VERSION

logger: logging.Logger = logging.getLogger(__name__)

PROG = "little-bench"
TEXT_HEADER = "# little-bench text-v1"
WORKERS_ENV = "LITTLE_WORKERS"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILURE = 3

SOLVABLE = {
    "max": Problem.MAX,
    "minmax": Problem.MINMAX,
    "sk": Problem.SK,
}


class LittleArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        sys.stderr.write(f"{PROG}: error[usage]: {message}\n")
        raise SystemExit(EXIT_USAGE)


def u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from e
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"must be an unsigned 64-bit integer: {text}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from e
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0: {text}")
    return value


def value_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(
            f"not a comma-separated list of numbers: {text!r}"
        ) from e


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return positive_int(raw)
    except argparse.ArgumentTypeError as e:
        raise ConfigError(f"{WORKERS_ENV}: {e}") from e


def _output_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    parent.add_argument(
        "--format",
        choices=[f.value for f in OutputFormat],
        default=None,
        help="output format (default: json, csv for sweep)",
    )
    parent.add_argument(
        "--output", type=Path, default=None, help="write to this file instead of stdout"
    )
    parent.add_argument(
        "--verbose", action="store_true", help="debug logging with timestamps on stderr"
    )
    return parent


def _experiment_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    parent.add_argument(
        "--problem", choices=sorted(SOLVABLE), default="max", help="ground-state form"
    )
    parent.add_argument("--m", type=positive_int, default=None, help="rows of H (default n)")
    parent.add_argument("--n", type=positive_int, required=True, help="columns of H")
    parent.add_argument(
        "--dist",
        choices=[d.value for d in Distribution],
        default=Distribution.GAUSSIAN.value,
        help="disorder distribution",
    )
    parent.add_argument("--trials", type=positive_int, required=True, help="disorder samples")
    parent.add_argument("--seed", type=u64, required=True, help="master seed")
    parent.add_argument(
        "--workers",
        type=positive_int,
        default=None,
        help=f"parallel trials (default ${WORKERS_ENV} or 1)",
    )
    parent.add_argument("--xi-sk", type=float, default=DEFAULT_XI_SK, help="SK constant")
    parent.add_argument(
        "--audit-every",
        type=int,
        default=0,
        help="re-solve every k-th trial on a relabeled copy (0 disables)",
    )
    parent.add_argument(
        "--keep-per-trial", action="store_true", help="retain per-trial values in memory"
    )
    parent.add_argument(
        "--cache", action="store_true", help="reuse finished experiments from the user cache"
    )
    return parent


def build_parser() -> LittleArgumentParser:
    output = _output_parent()
    experiment = _experiment_parent()

    parser = LittleArgumentParser(
        prog=PROG,
        allow_abbrev=False,
        description="Bounds, exact ground states and Monte Carlo checks for the "
        "asymmetric Little model.",
    )
    parser.add_argument("--version", action="version", version=f"{PROG} {VERSION}")
    commands = parser.add_subparsers(dest="subcommand", required=True)

    bounds = commands.add_parser(
        "bounds", parents=[output], allow_abbrev=False, help="print the bound report"
    )
    bounds.add_argument("--alpha", type=positive_float, required=True, help="ratio m/n")
    bounds.add_argument("--xi-sk", type=float, default=DEFAULT_XI_SK, help="SK constant")
    bounds.set_defaults(handler=cmd_bounds)

    solve = commands.add_parser(
        "solve", parents=[output], allow_abbrev=False, help="solve one instance exactly"
    )
    solve.add_argument("--problem", choices=sorted(SOLVABLE), required=True)
    solve.add_argument("--m", type=positive_int, default=None, help="rows of H (default n)")
    solve.add_argument("--n", type=positive_int, required=True, help="columns of H")
    solve.add_argument(
        "--dist",
        choices=[d.value for d in Distribution],
        default=Distribution.GAUSSIAN.value,
    )
    solve.add_argument("--seed", type=u64, required=True, help="instance seed")
    solve.set_defaults(handler=cmd_solve)

    run = commands.add_parser(
        "experiment",
        parents=[output, experiment],
        allow_abbrev=False,
        help="disorder-average one configuration",
    )
    run.set_defaults(handler=cmd_experiment)

    sweeper = commands.add_parser(
        "sweep",
        parents=[output, experiment],
        allow_abbrev=False,
        help="repeat an experiment along n or alpha",
    )
    sweeper.add_argument("--axis", choices=[a.value for a in Axis], required=True)
    sweeper.add_argument("--values", type=value_list, required=True, help="v1,v2,...")
    sweeper.add_argument(
        "--plot-data", type=Path, default=None, help="also write two-column plot data"
    )
    sweeper.set_defaults(handler=cmd_sweep)

    universality = commands.add_parser(
        "universality",
        parents=[output],
        allow_abbrev=False,
        help="compare gaussian and bernoulli disorder",
    )
    universality.add_argument("--m", type=positive_int, default=None)
    universality.add_argument("--n", type=positive_int, required=True)
    universality.add_argument("--trials", type=positive_int, required=True)
    universality.add_argument("--seed", type=u64, required=True)
    universality.add_argument("--workers", type=positive_int, default=None)
    universality.set_defaults(handler=cmd_universality)

    compare = commands.add_parser(
        "sk-compare",
        parents=[output],
        allow_abbrev=False,
        help="finite-n SK comparison inequality",
    )
    compare.add_argument("--n", type=positive_int, required=True)
    compare.add_argument("--m", type=positive_int, default=None)
    compare.add_argument("--trials", type=positive_int, required=True)
    compare.add_argument("--seed", type=u64, required=True)
    compare.add_argument("--xi-sk", type=float, default=DEFAULT_XI_SK)
    compare.add_argument("--workers", type=positive_int, default=None)
    compare.set_defaults(handler=cmd_sk_compare)

    return parser


def configure_logging(verbose: bool) -> None:
    handler = RichHandler(
        console=Console(stderr=True),
        show_time=verbose,
        show_path=False,
    )
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[handler],
        force=True,
    )


def render_text(result: Any) -> str:
    lines = [TEXT_HEADER]
    if isinstance(result, SweepResult):
        lines.append("# columns " + " ".join(SWEEP_HEADER))
        lines += [" ".join(row) for row in sweep_rows(result)]
        return "\n".join(lines) + "\n"
    for key, value in flatten_record(to_record(result)).items():
        lines.append(f"{key} {format_value(value)}")
    return "\n".join(lines) + "\n"


def emit(result: Any, args: argparse.Namespace, default: OutputFormat) -> None:
    fmt = OutputFormat(args.format) if args.format else default
    text = render_text(result) if fmt is OutputFormat.TEXT else render(result, fmt)
    if args.output is not None:
        write_text(args.output, text)
    elif fmt is OutputFormat.TEXT:
        Console(markup=False, highlight=False, emoji=False, soft_wrap=True).print(
            text, end=""
        )
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _workers(args: argparse.Namespace) -> int:
    return args.workers if args.workers is not None else default_workers()


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    problem = SOLVABLE[args.problem]
    m = args.n if args.m is None or problem is Problem.SK else args.m
    return ExperimentConfig(
        problem=problem,
        m=m,
        n=args.n,
        dist=Distribution(args.dist),
        trials=args.trials,
        master_seed=args.seed,
        workers=_workers(args),
        xi_sk=args.xi_sk,
        keep_per_trial=args.keep_per_trial,
        audit_every=args.audit_every,
    )


def cmd_bounds(args: argparse.Namespace) -> int:
    emit(bound_report(args.alpha, args.xi_sk), args, OutputFormat.JSON)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    problem = SOLVABLE[args.problem]
    if problem is Problem.SK:
        square = generate_instance(args.n, args.n, Distribution(args.dist), args.seed)
        result = solve_sk(symmetrize(square))
    else:
        m = args.n if args.m is None else args.m
        inst = generate_instance(m, args.n, Distribution(args.dist), args.seed)
        result = (solve_max if problem is Problem.MAX else solve_minmax)(inst)
    logger.debug("solved in %.3fs", result.elapsed)
    emit(result, args, OutputFormat.JSON)
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    alpha = 1.0 if cfg.problem is Problem.SK else cfg.alpha
    report = bound_report(alpha, cfg.xi_sk)
    stats = run_trials(cfg, cache=args.cache)
    check = check_bounds(stats, report)
    emit(
        {"stats": stats.to_record(), "bounds": report.to_record(), "checks": check.checks},
        args,
        OutputFormat.JSON,
    )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.values:
        raise ConfigError("--values needs at least one number")
    axis = Axis(args.axis)
    values: list[float] = args.values
    if axis is Axis.N:
        if any(v != int(v) for v in values):
            raise ConfigError("--values must be integers for an n sweep")
        values = [int(v) for v in values]
    template = config_from_args(args)
    result = sweep(template, axis, values, cache=args.cache)
    if args.plot_data is not None:
        write_plot_data(result, args.plot_data)
    emit(result, args, OutputFormat.CSV)
    return EXIT_OK


def cmd_universality(args: argparse.Namespace) -> int:
    m = args.n if args.m is None else args.m
    report = universality_compare(m, args.n, args.trials, args.seed, workers=_workers(args))
    emit(report, args, OutputFormat.JSON)
    return EXIT_OK


def cmd_sk_compare(args: argparse.Namespace) -> int:
    report = sk_comparison_report(
        args.n,
        args.trials,
        args.seed,
        xi_sk=args.xi_sk,
        m=args.m,
        workers=_workers(args),
    )
    emit(report, args, OutputFormat.JSON)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except ConfigError as e:
        sys.stderr.write(f"{PROG}: error[{e.reason}]: {e}\n")
        return EXIT_USAGE
    except LittleBenchError as e:
        sys.stderr.write(f"{PROG}: error[{e.reason}]: {e}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
