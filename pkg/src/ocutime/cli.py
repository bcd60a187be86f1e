"""Command-line entry point.

Usage::

    ocutime <stage> --config config.yaml [--seed N] [--jobs N] [--strict-gate]

Stages: simulate, preprocess, window, train, ablate, analyze, stats,
report, all. Exit codes: 0 success, 2 configuration error, 3 stage
ordering / stale inputs, 4 numeric failure, 5 empty result.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import load_config
from .errors import (
    ConfigurationError,
    EmptyInputError,
    InsufficientDataError,
    NumericError,
    OcutimeError,
    StageOrderError,
    StaleInputError,
)
from . import pipeline

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE_ORDER = 3
EXIT_NUMERIC = 4
EXIT_EMPTY = 5

STAGES = {
    "simulate": pipeline.stage_simulate,
    "preprocess": pipeline.stage_preprocess,
    "window": pipeline.stage_window,
    "train": pipeline.stage_train,
    "ablate": pipeline.stage_ablate,
    "analyze": pipeline.stage_analyze,
    "stats": pipeline.stage_stats,
    "report": pipeline.stage_report,
    "all": pipeline.run_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocutime",
        description="Ocular response-time pipeline over EEG recordings.",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--config", required=True, help="YAML/JSON pipeline config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=None, help="worker processes for analysis")
        p.add_argument(
            "--strict-gate", action="store_true",
            help="require r strictly above the validity threshold",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed)
        if args.jobs is not None:
            cfg = replace(cfg, jobs=args.jobs)
        if args.strict_gate:
            cfg = replace(cfg, metrics=replace(cfg.metrics, strict_gate=True))
        result = STAGES[args.stage](cfg)
    except (FileNotFoundError, ConfigurationError) as exc:
        print(f"ocutime: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StageOrderError, StaleInputError) as exc:
        print(f"ocutime: {exc}", file=sys.stderr)
        return EXIT_STAGE_ORDER
    except NumericError as exc:
        print(f"ocutime: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (EmptyInputError, InsufficientDataError) as exc:
        print(f"ocutime: empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except OcutimeError as exc:
        print(f"ocutime: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.stage == "analyze" and result == 0:
        print("ocutime: no window passed the validity gate", file=sys.stderr)
        return EXIT_EMPTY
    print(f"ocutime: {args.stage} complete ({cfg.out_dir})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
