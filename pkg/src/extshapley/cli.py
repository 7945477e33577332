"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 parse or validation failure,
4 player count over the cap of the chosen route. Every failure prints one
line ``extshapley: error[<code>]: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    DISTRIBUTIONS,
    RandomGameSpec,
    make_random_game,
    run_error_experiment,
    run_timing_experiment,
)
from .core import ConfigurationError, SizeError
from .exact import EXACT_CAP, check_axioms, exact_value
from .gamefile import GameFileError, parse_game_file
from .montecarlo import (
    ErrorSpec,
    approximate,
    contribution_bounds,
    required_samples,
    theoretical_epsilon,
)
from .weightings import ValidationReport, get_weighting, validate_weighting

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_SIZE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_game_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--game", metavar="PATH", help="JSON game file")
    src.add_argument("--distribution", choices=DISTRIBUTIONS, help="random game family")
    p.add_argument("--n", type=int, help="player count for --distribution")
    p.add_argument("--seed", type=int, default=0)


def _add_output(p):
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="extshapley", description="Extended Shapley values for partition-function games.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact value and axiom check")
    _add_game_source(p)
    p.add_argument("--weighting", required=True)
    _add_output(p)

    p = sub.add_parser("approx", help="Monte Carlo estimate")
    _add_game_source(p)
    p.add_argument("--weighting", required=True)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--samples", type=int)
    size.add_argument("--epsilon", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--min-contrib", type=float)
    p.add_argument("--max-contrib", type=float)
    p.add_argument("--workers", type=int, default=1)
    _add_output(p)

    p = sub.add_parser("sample-size", help="samples needed for a given error")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--distribution", choices=DISTRIBUTIONS)
    p.add_argument("--n", type=int)
    p.add_argument("--min-contrib", type=float)
    p.add_argument("--max-contrib", type=float)
    _add_output(p)

    p = sub.add_parser("validate", help="check a weighting's axioms exhaustively")
    p.add_argument("--weighting", required=True)
    p.add_argument("--n", type=int, required=True)
    _add_output(p)

    p = sub.add_parser("bench", help="timing or error experiment, written as CSV")
    p.add_argument("--experiment", choices=("timing", "error"), default="timing")
    p.add_argument("--weighting", required=True)
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="normal")
    p.add_argument("--n", type=int, help="player count (error experiment)")
    p.add_argument("--n-min", type=int, default=8)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--schedule", default="1000,4000,16000,65000", help="comma-separated sample counts")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--max-exact-n", type=int, default=EXACT_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="PATH")
    return parser


def _load_game(args):
    if args.game is not None:
        if args.n is not None:
            raise UsageError("--n only applies to --distribution")
        return parse_game_file(args.game), f"file:{args.game}"
    if args.n is None:
        raise UsageError("--distribution requires --n")
    spec = RandomGameSpec(args.distribution, args.n, args.seed)
    return make_random_game(spec), f"{args.distribution}:n={args.n}:seed={args.seed}"


def _floats(x) -> list[float]:
    return [float(v) for v in np.asarray(x)]


def _emit(args, report: dict, csv_rows: list[list]) -> None:
    if args.output == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        text = "\n".join(",".join(str(c) for c in row) for row in csv_rows) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_exact(args) -> int:
    weighting = get_weighting(args.weighting)
    game, source = _load_game(args)
    if game.n > EXACT_CAP:
        raise SizeError(f"exact route supports n <= {EXACT_CAP} (got n={game.n})")
    phi = exact_value(game, weighting)
    axioms = None
    if game.n <= 6:
        axioms = check_axioms(game, weighting).as_dict()
    report = {
        "command": "exact",
        "game": source,
        "n": game.n,
        "weighting": weighting.name,
        "value": _floats(phi),
        "axioms": axioms,
    }
    rows = [["player", "value"]] + [[i + 1, repr(float(x))] for i, x in enumerate(phi)]
    _emit(args, report, rows)
    return EXIT_OK


def _bounds(args, n: int | None) -> tuple[float, float]:
    if args.min_contrib is not None or args.max_contrib is not None:
        if args.min_contrib is None or args.max_contrib is None:
            raise UsageError("--min-contrib and --max-contrib go together")
        return args.min_contrib, args.max_contrib
    if args.distribution is not None and n is not None:
        return contribution_bounds(args.distribution, n)
    raise UsageError("contribution bounds needed: pass --min-contrib/--max-contrib or --distribution/--n")


def _spec(epsilon, beta, lo, hi) -> ErrorSpec:
    try:
        return ErrorSpec(epsilon, beta, lo, hi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_approx(args) -> int:
    weighting = get_weighting(args.weighting)
    game, source = _load_game(args)
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    if args.samples is not None:
        if args.beta is not None:
            raise UsageError("--beta only applies with --epsilon")
        m = args.samples
        if m < 1:
            raise UsageError("--samples must be positive")
        beta = 0.01
        try:
            lo, hi = _bounds(args, game.n)
        except UsageError:
            lo = hi = None
    else:
        if args.beta is None:
            raise UsageError("--epsilon requires --beta")
        beta = args.beta
        lo, hi = _bounds(args, game.n)
        m = required_samples(_spec(args.epsilon, beta, lo, hi))
    est, diag = approximate(game, weighting, m, seed=args.seed, workers=args.workers)
    eps = theoretical_epsilon(m, beta, lo, hi) if lo is not None else None
    report = {
        "command": "approx",
        "game": source,
        "n": game.n,
        "weighting": weighting.name,
        "samples": m,
        "seed": args.seed,
        "estimate": _floats(est),
        "std_error": _floats(diag.std_error),
        "beta": beta,
        "theoretical_eps": eps,
    }
    rows = [["player", "estimate", "std_error"]]
    rows += [[i + 1, repr(float(x)), repr(float(e))] for i, (x, e) in enumerate(zip(est, diag.std_error))]
    _emit(args, report, rows)
    return EXIT_OK


def _cmd_sample_size(args) -> int:
    lo, hi = _bounds(args, args.n)
    m = required_samples(_spec(args.epsilon, args.beta, lo, hi))
    report = {
        "command": "sample-size",
        "epsilon": args.epsilon,
        "beta": args.beta,
        "min_contrib": lo,
        "max_contrib": hi,
        "samples": m,
    }
    rows = [["epsilon", "beta", "min_contrib", "max_contrib", "samples"], [args.epsilon, args.beta, lo, hi, m]]
    _emit(args, report, rows)
    return EXIT_OK


def _cmd_validate(args) -> int:
    weighting = get_weighting(args.weighting)
    report: ValidationReport = validate_weighting(weighting, args.n)
    out = {
        "command": "validate",
        "weighting": weighting.name,
        "n": args.n,
        "passed": report.passed,
        "checked": report.checked,
        "failure": report.failure,
    }
    rows = [["weighting", "n", "passed", "failure"], [weighting.name, args.n, report.passed, report.failure or ""]]
    _emit(args, out, rows)
    return EXIT_OK if report.passed else EXIT_INVALID


def _cmd_bench(args) -> int:
    weighting = get_weighting(args.weighting)
    if args.experiment == "error":
        if args.n is None:
            raise UsageError("--experiment error requires --n")
        if args.n > EXACT_CAP:
            raise SizeError(f"error experiment needs the exact value, n <= {EXACT_CAP} (got n={args.n})")
        try:
            schedule = [int(x) for x in args.schedule.split(",") if x]
        except ValueError:
            raise UsageError(f"bad --schedule {args.schedule!r}") from None
        result = run_error_experiment(
            args.n, weighting, schedule, trials=args.trials, seed=args.seed,
            distribution=args.distribution, beta=args.beta, workers=args.workers,
        )
    else:
        if args.n_min > args.n_max:
            raise UsageError("--n-min exceeds --n-max")
        if args.max_exact_n > EXACT_CAP:
            raise SizeError(f"exact timings support n <= {EXACT_CAP} (got --max-exact-n {args.max_exact_n})")
        result = run_timing_experiment(
            range(args.n_min, args.n_max + 1), weighting, epsilon=args.epsilon, beta=args.beta,
            seed=args.seed, distribution=args.distribution, repeats=args.repeats,
            max_exact_n=args.max_exact_n, workers=args.workers,
        )
    text = result.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "exact": _cmd_exact,
    "approx": _cmd_approx,
    "sample-size": _cmd_sample_size,
    "validate": _cmd_validate,
    "bench": _cmd_bench,
}


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(f"extshapley: error[{code}]: {' '.join(str(message).split())}\n")
    return status


def parse_config(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments into a run configuration; raises ``UsageError``."""
    return build_parser().parse_args(argv)


def run(config: argparse.Namespace) -> int:
    """Execute a parsed configuration and return the exit status."""
    try:
        return _COMMANDS[config.command](config)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except ConfigurationError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except SizeError as exc:
        return _fail("size", exc, EXIT_SIZE)
    except GameFileError as exc:
        return _fail("parse", exc, EXIT_INVALID)
    except ValueError as exc:
        return _fail("usage", exc, EXIT_USAGE)


def main(argv: list[str] | None = None) -> int:
    try:
        config = parse_config(argv)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
