#!/usr/bin/env python3
"""Synthetic latency-recovery sweep.

For each injected ocular-response lag and seed, generate a pursuit-only
synthetic subject, run simulate -> preprocess -> window -> train ->
analyze, and compare the recovered lag (median umax over gated windows)
against the injected value. Usage::

    python3 scripts/latency_recovery.py [--lags -200 0 200] [--seeds 0 1 2]
        [--epochs 40] [--out runs/latency] [--jobs 4]
"""

import argparse
import csv
import time
from pathlib import Path

import numpy as np

from ocutime import pipeline
from ocutime.config import MetricsConfig, PipelineConfig, SimulateConfig
from ocutime.model import TrainHyper


def run_one(out_dir: Path, lag_ms: float, seed: int, epochs: int, jobs: int):
    cfg = PipelineConfig(
        out_dir=str(out_dir),
        seed=seed,
        jobs=jobs,
        simulate=SimulateConfig(
            subjects=(("X", float(lag_ms)),),
            n_sessions=2,
            n_trials=2,
            tasks=("horizontal_pursuit", "vertical_pursuit"),
        ),
        train=TrainHyper(epochs=epochs, patience=epochs, batch_size=64),
        metrics=MetricsConfig(),
    )
    pipeline.stage_simulate(cfg)
    pipeline.stage_preprocess(cfg)
    pipeline.stage_window(cfg)
    pipeline.stage_train(cfg)
    n_valid = pipeline.stage_analyze(cfg)
    with open(out_dir / "analyze" / "X" / "metrics.csv") as fh:
        rows = [r for r in csv.DictReader(fh) if r["valid"] == "1"]
    lags = [float(r["umax_lag_ms"]) for r in rows if np.isfinite(float(r["umax_lag_ms"]))]
    recovered = float(np.median(lags)) if lags else np.nan
    return recovered, n_valid


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lags", type=float, nargs="+", default=[-200.0, 0.0, 200.0])
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--jobs", type=int, default=4)
    parser.add_argument("--tolerance-ms", type=float, default=50.0)
    parser.add_argument("--out", default="runs/latency")
    args = parser.parse_args()

    print(f"{'lag_ms':>8} {'seed':>5} {'recovered':>10} {'valid':>6} {'ok':>3} {'secs':>6}")
    for lag in args.lags:
        hits = 0
        for seed in args.seeds:
            t0 = time.perf_counter()
            out = Path(args.out) / f"lag{int(lag):+d}_seed{seed}"
            recovered, n_valid = run_one(out, lag, seed, args.epochs, args.jobs)
            ok = np.isfinite(recovered) and abs(recovered - lag) <= args.tolerance_ms
            hits += int(ok)
            print(
                f"{lag:8.0f} {seed:5d} {recovered:10.1f} {n_valid:6d} "
                f"{'yes' if ok else 'no':>3} {time.perf_counter() - t0:6.1f}"
            )
        print(f"  lag {lag:+.0f} ms: {hits}/{len(args.seeds)} within +-{args.tolerance_ms:.0f} ms")


if __name__ == "__main__":
    main()
