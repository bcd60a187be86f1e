#!/usr/bin/env python3
"""Run the full pipeline on a small synthetic dataset.

Writes a demo config, then executes every stage in order and prints the
resulting report inventory. Usage::

    python3 scripts/run_demo.py [--out runs/demo] [--seed 0] [--full]

--full uses the published session layout (2 subjects x 10 sessions x
5 trials x 4 tasks); the default is a minutes-scale reduction.
"""

import argparse
import json
from pathlib import Path

import yaml

from ocutime import pipeline
from ocutime.config import load_config

SMALL = {
    "seed": 0,
    "simulate": {
        "subjects": [["S1", 80.0], ["S2", 160.0]],
        "n_sessions": 2,
        "n_trials": 1,
        "tasks": ["horizontal_pursuit", "vertical_pursuit"],
    },
    "train": {"epochs": 30, "patience": 10, "batch_size": 64},
}

FULL = {
    "seed": 0,
    "simulate": {
        "subjects": [["S1", 80.0], ["S2", 160.0]],
        "n_sessions": 10,
        "n_trials": 5,
    },
    "train": {"epochs": 300, "patience": 50, "batch_size": 64},
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/demo")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--full", action="store_true")
    args = parser.parse_args()

    doc = dict(FULL if args.full else SMALL)
    doc["out_dir"] = args.out
    doc["jobs"] = args.jobs
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.yaml"
    cfg_path.write_text(yaml.safe_dump(doc))
    cfg = load_config(cfg_path, seed_override=args.seed)

    rep_dir = pipeline.run_all(cfg)
    bundle = json.loads((rep_dir / "bundle.json").read_text())
    print(f"report bundle: {rep_dir / 'bundle.json'}")
    for name in sorted(bundle["files"]):
        print(f"  {name}")


if __name__ == "__main__":
    main()
