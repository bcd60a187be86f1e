"""Pipeline configuration: one structured document drives every stage.

Defaults equal the published protocol values (2.56 s / 200 ms windows,
0.5-30 Hz band, kernel table 63/15/7/3, gate 0.5, DTW radius 50,
alpha 0.05, 300 epochs / patience 50 / batch 64).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .model import DEFAULT_KERNEL_TABLE, ConvSpec, DEFAULT_CONV_STACK, ModelConfig, TrainHyper
from .preprocess import BandPassSpec
from .signal_core import TaskKind
from .voms_synth import DEFAULT_TASK_ORDER, SessionConfig, SubjectSpec, SynthEegSpec


@dataclass(frozen=True)
class SimulateConfig:
    subjects: tuple = (("S1", 80.0), ("S2", 160.0))  # (id, lag_ms) pairs
    n_sessions: int = 10
    n_trials: int = 5
    tasks: tuple = tuple(t.value for t in DEFAULT_TASK_ORDER)
    gains: tuple = (0.9, 1.0, 0.95, 0.8, 0.85, 0.75)
    pink_level: float = 0.02
    alpha_level: float = 0.02
    gamma_level: float = 0.0
    truncate: tuple = ()  # (subject_id, session_idx, trial_idx, keep_s)


@dataclass(frozen=True)
class WindowConfig:
    win: int = 256
    stride: int = 20
    min_len: int = 1376


@dataclass(frozen=True)
class MetricsConfig:
    tau: float = 0.5
    strict_gate: bool = False
    dtw_radius: int = 50
    dtw_znorm: bool = True
    welch_seg: int = 128
    welch_overlap: int = 64
    xcorr_max_lag: int = 128
    alpha: float = 0.05


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: str = "runs/demo"
    seed: int = 0
    jobs: int = 1
    simulate: SimulateConfig = SimulateConfig()
    bandpass: BandPassSpec = BandPassSpec()
    target_fs: float = 100.0
    window: WindowConfig = WindowConfig()
    variant: str = "M0"
    kernel_table: dict = field(default_factory=lambda: dict(DEFAULT_KERNEL_TABLE))
    tied_wavelet_kernels: bool = True
    per_channel_kernels: bool = True
    train: TrainHyper = TrainHyper()
    metrics: MetricsConfig = MetricsConfig()

    def model_config(self, variant: str | None = None) -> ModelConfig:
        return ModelConfig(
            variant=variant or self.variant,
            seed=self.seed,
            kernel_table=dict(self.kernel_table),
            conv_stack=DEFAULT_CONV_STACK,
            tied_wavelet_kernels=self.tied_wavelet_kernels,
            per_channel_kernels=self.per_channel_kernels,
        )

    def session_config(self) -> SessionConfig:
        sim = self.simulate
        subjects = tuple(
            SubjectSpec(
                subject_id=sid,
                lag_ms=float(lag),
                seed=self.seed,
                eeg=SynthEegSpec(
                    lag_ms=float(lag),
                    gains=tuple(sim.gains),
                    pink_level=sim.pink_level,
                    alpha_level=sim.alpha_level,
                    gamma_level=sim.gamma_level,
                    seed=self.seed,
                ),
            )
            for sid, lag in sim.subjects
        )
        return SessionConfig(
            subjects=subjects,
            n_sessions=sim.n_sessions,
            n_trials=sim.n_trials,
            tasks=tuple(TaskKind(t) for t in sim.tasks),
            truncate=tuple(tuple(t) for t in sim.truncate),
        )

    def to_dict(self) -> dict:
        doc = asdict(self)
        return doc

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=list)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def _build(cls, doc: dict, **extra):
    fields = {f for f in cls.__dataclass_fields__}
    unknown = set(doc) - fields
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = dict(doc)
    for key, value in kwargs.items():
        if isinstance(value, list):
            kwargs[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
    kwargs.update(extra)
    return cls(**kwargs)


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc)
    sub = {}
    if "simulate" in doc:
        sub["simulate"] = _build(SimulateConfig, doc.pop("simulate"))
    if "bandpass" in doc:
        sub["bandpass"] = _build(BandPassSpec, doc.pop("bandpass"))
    if "window" in doc:
        sub["window"] = _build(WindowConfig, doc.pop("window"))
    if "train" in doc:
        sub["train"] = _build(TrainHyper, doc.pop("train"))
    if "metrics" in doc:
        sub["metrics"] = _build(MetricsConfig, doc.pop("metrics"))
    return _build(PipelineConfig, doc, **sub)


def load_config(path, seed_override: int | None = None, **overrides) -> PipelineConfig:
    """Read a YAML/JSON config file, applying seed overrides.

    Priority: explicit seed_override (CLI flag) > OCUTIME_SEED env var >
    config file value.
    """
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config must be a mapping")
    doc.update(overrides)
    env_seed = os.environ.get("OCUTIME_SEED")
    if env_seed is not None:
        doc["seed"] = int(env_seed)
    if seed_override is not None:
        doc["seed"] = int(seed_override)
    return config_from_dict(doc)
