"""Command-line front end.

Every subcommand takes --config <yaml>, --seed <int>, --out <path> and the
--override-qubit-ceiling escape hatch. Exit codes: 0 success, 2 configuration
error, 3 input/output error, 4 resource guard tripped.
"""

from __future__ import annotations

import argparse
import sys

from .dataset import DatasetError
from .harness import ConfigError, load_config, run_task
from .network import NetworkError
from .statevector import ResourceLimitError

TASKS = ("score", "learn", "sample", "sweep-pa", "sweep-noise", "compare")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RESOURCE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbnsl",
        description="Structure learning experiments: scoring, search, sweeps.",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    help_lines = {
        "score": "write the local score table for a dataset",
        "learn": "learn a structure with one algorithm",
        "sample": "draw a dataset from a network file",
        "sweep-pa": "grid over circuit depth and CVaR alpha",
        "sweep-noise": "grid over noise channels and strengths",
        "compare": "benchmark algorithms against a known network",
    }
    for task in TASKS:
        p = sub.add_parser(task, help=help_lines[task])
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--out", required=True, help="output file (CSV + .manifest.json)")
        p.add_argument(
            "--override-qubit-ceiling",
            action="store_true",
            help="allow registers past the default ceiling (memory permitting)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = "qbnsl " + " ".join(argv if argv is not None else sys.argv[1:])
    if args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        run_task(args.task, cfg, args.seed, args.out, args.override_qubit_ceiling, command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DatasetError, NetworkError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PermissionError, IsADirectoryError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
