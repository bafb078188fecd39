"""Command-line entry point (``bct-lab``)."""

import argparse
import json
import sys
from pathlib import Path

from dotenv import load_dotenv
from pydantic import ValidationError

from app.config.settings import settings
from app.models.schemas import AcceptanceResult, ExperimentConfig
from app.services import acceptance, golden, report_service
from app.services.experiment_service import run
from app.theory.errors import InvariantViolation
from app.utils.logger import logger
from app.utils.profiling import profiled

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2

# config field -> CLI flag, for error messages
FIELD_FLAGS = {
    "dist": "--dist",
    "dist2": "--dist2",
    "eps": "--eps",
    "n": "--n",
    "n_min": "--nmin",
    "n_max": "--nmax",
    "delta": "--delta",
    "seed": "--seed",
    "samples": "--samples",
    "a_size": "--a",
    "b_size": "--b",
    "out": "--out",
    "report": "--report",
    "memory_bound_log2": "--memory-bound",
    "jobs": "--jobs",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring the flags (flags win)")
    common.add_argument("--jobs", type=int, dest="jobs", help="Worker processes for sweeps")
    common.add_argument("--memory-bound", type=int, dest="memory_bound_log2", help="log2 of the entry bound")
    common.add_argument("--seed", type=int, help="Seed for samplers and oracles")
    common.add_argument("--profile", action="store_true", help="Profile the run with cProfile")
    common.add_argument("--log-level", default=None, help="Logging level (default from settings)")

    parser = argparse.ArgumentParser(prog="bct-lab", description=f"{settings.app_name} v{settings.app_version}")
    sub = parser.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", parents=[common], help="Minimal compression rate sweep")
    rate.add_argument("--dist", help="Source distribution, e.g. 0.9,0.1")
    rate.add_argument("--eps", help="Epsilon grid, e.g. 0.05,0.02")
    rate.add_argument("--nmin", type=int, dest="n_min")
    rate.add_argument("--nmax", type=int, dest="n_max")
    rate.add_argument("--out", help="CSV output path")

    codec = sub.add_parser("codec", parents=[common], help="Typical-set codec report")
    codec.add_argument("--dist")
    codec.add_argument("--n", type=int)
    codec.add_argument("--delta")
    codec.add_argument("--eps")
    codec.add_argument("--samples", type=int)
    codec.add_argument("--report", help="JSON report path")

    entropy = sub.add_parser("entropy", parents=[common], help="Entropies and their regularization")
    entropy.add_argument("--dist")
    entropy.add_argument("--nmax", type=int, dest="n_max")
    entropy.add_argument("--samples", type=int)
    entropy.add_argument("--report")

    steer = sub.add_parser("steer", parents=[common], help="Steering completeness on random dilations")
    steer.add_argument("--dist")
    steer.add_argument("--samples", type=int)
    steer.add_argument("--report")

    digitize = sub.add_parser("digitize", parents=[common], help="Digitizer and asymptotic rate")
    digitize.add_argument("--a", type=int, dest="a_size")
    digitize.add_argument("--b", type=int, dest="b_size")
    digitize.add_argument("--nmax", type=int, dest="n_max", help="Largest k1 tabulated")
    digitize.add_argument("--report")

    counter = sub.add_parser("counterexample", parents=[common], help="Permutation-restricted theory")
    counter.add_argument("--dist")
    counter.add_argument("--eps")
    counter.add_argument("--nmin", type=int, dest="n_min")
    counter.add_argument("--nmax", type=int, dest="n_max")
    counter.add_argument("--report")

    additivity = sub.add_parser("additivity", parents=[common], help="Rates of a composite source")
    additivity.add_argument("--dist")
    additivity.add_argument("--dist2")
    additivity.add_argument("--eps")
    additivity.add_argument("--nmin", type=int, dest="n_min")
    additivity.add_argument("--nmax", type=int, dest="n_max")
    additivity.add_argument("--out")
    additivity.add_argument("--report")

    accept = sub.add_parser("acceptance", parents=[common], help="Run named acceptance targets")
    accept.add_argument("--criterion", type=int, action="append", help="Criterion number (repeatable; default all)")
    accept.add_argument("--report")

    gold = sub.add_parser("golden", parents=[common], help="Compare reports with golden files")
    gold.add_argument("--golden", required=True, help="Golden directory")
    gold.add_argument("--update", action="store_true", help="Regenerate the golden files")

    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the JSON config file with the flags given on the command line."""
    fields: dict = {}
    if args.config:
        fields.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for name in FIELD_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    return ExperimentConfig(**fields)


def _config_error(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        name = str(item["loc"][0]) if item["loc"] else "config"
        messages.append(f"{FIELD_FLAGS.get(name, name)}: {item['msg']}")
    return "; ".join(messages)


def _run_acceptance(args: argparse.Namespace) -> int:
    numbers = args.criterion or sorted(acceptance.CRITERIA)
    results: list[AcceptanceResult] = [acceptance.run_criterion(k, seed=args.seed) for k in numbers]
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.criterion:2d} {r.name} ({r.elapsed_ms:.0f} ms)")
    if args.report:
        Path(args.report).write_text(
            "".join(report_service.render_json(r) for r in results), encoding="utf-8"
        )
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def _run_golden(args: argparse.Namespace) -> int:
    if args.update:
        files = golden.update_goldens(args.golden)
        print(f"Wrote {len(files)} golden files to {args.golden}")
        return EXIT_OK
    result = golden.golden_check(args.golden, seed=args.seed)
    for diff in result.diffs:
        print(diff)
    print(f"golden: {'pass' if result.passed else 'fail'} ({len(result.checked)} reports)")
    return EXIT_OK if result.passed else EXIT_INVARIANT


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    if args.log_level:
        logger.setLevel(args.log_level.upper())
        for handler in logger.handlers:
            handler.setLevel(args.log_level.upper())

    try:
        with profiled(args.command, enabled=args.profile, save_binary=args.profile):
            if args.command == "acceptance":
                return _run_acceptance(args)
            if args.command == "golden":
                return _run_golden(args)
            result = run(load_config(args), args.command)
    except ValidationError as e:
        print(f"error: {_config_error(e)}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if result.rows:
        print(report_service.summary_table(result.rows))
    if result.report is not None and args.command != "additivity":
        print(report_service.render_json(result.report), end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
