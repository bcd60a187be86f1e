#!/usr/bin/env python3
"""Model-variant comparison on gamma-contaminated synthetic sessions.

Trains M0 (full wavelet filtering), M1 (masking only), and M2 (no
wavelet stages) on identical splits and seeds, with a 25-50 Hz
contaminant injected into the raw EEG, and reports the per-variant
percentage of validation windows passing the r >= 0.5 gate. Usage::

    python3 scripts/ablation_trend.py [--seeds 0 1 2] [--epochs 12]
        [--gamma-level 0.05] [--out runs/ablation]
"""

import argparse
from pathlib import Path

import numpy as np

from ocutime import pipeline
from ocutime.config import PipelineConfig, SimulateConfig
from ocutime.model import TrainHyper


def run_seed(out_dir: Path, seed: int, epochs: int, gamma_level: float):
    cfg = PipelineConfig(
        out_dir=str(out_dir),
        seed=seed,
        simulate=SimulateConfig(
            subjects=(("X", 150.0),),
            n_sessions=1,
            n_trials=2,
            tasks=("horizontal_pursuit", "vertical_pursuit"),
            gamma_level=gamma_level,
        ),
        train=TrainHyper(epochs=epochs, patience=epochs, batch_size=64),
    )
    pipeline.stage_simulate(cfg)
    pipeline.stage_preprocess(cfg)
    pipeline.stage_window(cfg)
    rows = pipeline.stage_ablate(cfg)
    out = {}
    for variant, _subject, _task, pct in rows:
        out.setdefault(variant, []).append(pct)
    return {v: float(np.mean(p)) for v, p in out.items()}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--epochs", type=int, default=12)
    parser.add_argument("--gamma-level", type=float, default=0.05)
    parser.add_argument("--out", default="runs/ablation")
    args = parser.parse_args()

    per_variant = {"M0": [], "M1": [], "M2": []}
    for seed in args.seeds:
        res = run_seed(Path(args.out) / f"seed{seed}", seed, args.epochs, args.gamma_level)
        for v in per_variant:
            per_variant[v].append(res.get(v, np.nan))
        print(f"seed {seed}: " + "  ".join(f"{v}={res.get(v, float('nan')):.1f}%" for v in per_variant))

    means = {v: float(np.nanmean(p)) for v, p in per_variant.items()}
    order = sorted(means, key=means.get, reverse=True)
    print("mean pct acceptable: " + "  ".join(f"{v}={means[v]:.1f}%" for v in per_variant))
    print(f"observed ordering: {' >= '.join(order)}")


if __name__ == "__main__":
    main()
