"""Command-line front end.

Exit codes: 0 success (physics verdicts live in the data, never in the code),
2 scenario schema error, 3 capacity limit exceeded, 4 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import CapacityError
from .harness import RunOptions, format_rows, run_scenario
from .scenario import ScenarioError, load_scenario, locate

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_CAPACITY = 3
EXIT_INTERNAL = 4

log = logging.getLogger("ptwitness")


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _diagnose(message: str) -> None:
    print(f"ptwitness: {message}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptwitness",
        description="Evaluate partial-transpose separability witnesses and the CFRD inequality on a scenario file.",
    )
    parser.add_argument("--scenario", required=True, metavar="PATH", help="YAML scenario file")
    parser.add_argument("--out", metavar="PATH", help="write rows here instead of stdout")
    parser.add_argument("--format", choices=("csv", "records"), help="override the scenario output format")
    parser.add_argument("--oracle", choices=("on", "off"), help="override the scenario oracle toggle")
    parser.add_argument("--cutoff", type=_positive_int, metavar="K", help="uniform per-mode oracle cutoff")
    parser.add_argument("--tolerance", type=_positive_float, metavar="EPS",
                        help="relative violation threshold (default 1e-9)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        scenario = load_scenario(args.scenario)
        options = RunOptions(
            oracle=None if args.oracle is None else args.oracle == "on",
            cutoff=args.cutoff,
            **({} if args.tolerance is None else {"tolerance": args.tolerance}),
        )
        rows = run_scenario(scenario, options)
        text = format_rows(rows, args.format or scenario.format)
    except ScenarioError as exc:
        try:
            exc = locate(exc, Path(args.scenario).read_text(encoding="utf-8"))
        except OSError:
            pass
        _diagnose(f"schema error: {exc}")
        return EXIT_SCHEMA
    except CapacityError as exc:
        _diagnose(f"capacity error: {exc}")
        return EXIT_CAPACITY
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL

    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
