"""VOMS stimulus synthesis and synthetic EEG sessions with known lags.

The synthetic generator is the ground-truth oracle for the end-to-end
tests: each EEG channel linearly couples the (lagged) normalized target
trajectory plus pink noise, a 10 Hz alpha oscillation, and an optional
gamma-band contaminant, so an ideal estimator recovers the injected lag
exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import ConfigurationError, SegmentRangeError
from .io_formats import write_eeg_csv, write_manifest, write_trajectory_csv
from .signal_core import (
    DEFAULT_CHANNELS,
    MultiChannelRecord,
    SessionManifest,
    TargetTrajectory,
    TaskKind,
    TaskSegmentSpec,
    TrialDescriptor,
    normalize_trajectory,
)

DISPLAY_FS = 60.0
ANALYSIS_FS = 100.0
EEG_FS = 250.0

SACCADE_DURATION_S = 14.0
PURSUIT_DURATION_S = 15.0
SACCADE_INTERVAL_S = 1.0
PURSUIT_EXCURSION_S = 3.16
INSTRUCTION_S = 2.0


@dataclass(frozen=True)
class StimulusSpec:
    """Geometry and timing of one VOMS task stimulus.

    extreme_offset is the (x, y) screen position of the positive
    extreme; the default asymmetric center keeps the saccade L2 trace
    non-constant (a centered window would make both extremes
    equidistant). Set window_center=(0, 0) for the symmetric geometry.
    """

    task: TaskKind
    extreme_offset: tuple = (1.0, 1.0)
    window_center: tuple = (0.35, 0.25)
    display_fs: float = DISPLAY_FS
    saccade_interval_s: float = SACCADE_INTERVAL_S
    pursuit_excursion_s: float = PURSUIT_EXCURSION_S
    pursuit_profile: str = "sinusoidal"  # or "triangular"

    @property
    def duration_s(self) -> float:
        return PURSUIT_DURATION_S if self.task.is_pursuit else SACCADE_DURATION_S

    def validate(self) -> None:
        if self.display_fs <= 0 or self.saccade_interval_s <= 0 or self.pursuit_excursion_s <= 0:
            raise ConfigurationError("stimulus timing parameters must be positive")
        if self.pursuit_profile not in ("sinusoidal", "triangular"):
            raise ConfigurationError(f"unknown pursuit profile {self.pursuit_profile!r}")


def gen_stimulus_coords(spec: StimulusSpec):
    """Patch-center coordinates at the display rate.

    Saccades alternate between the two extremes every interval starting
    at the positive extreme; pursuits move center -> extreme -> center
    over one excursion, alternating sides.
    """
    spec.validate()
    n = int(round(spec.duration_s * spec.display_fs))
    t = np.arange(n) / spec.display_fs
    if spec.task.is_pursuit:
        phase = np.pi * t / spec.pursuit_excursion_s
        if spec.pursuit_profile == "sinusoidal":
            pos = np.sin(phase)
        else:
            # constant-velocity triangle with the same period and range
            pos = 2.0 / np.pi * np.arcsin(np.sin(phase))
    else:
        k = np.floor(t / spec.saccade_interval_s).astype(int)
        pos = np.where(k % 2 == 0, 1.0, -1.0)
    x = np.zeros(n)
    y = np.zeros(n)
    if spec.task.is_horizontal:
        x = pos * spec.extreme_offset[0]
    else:
        y = pos * spec.extreme_offset[1]
    return t, x, y


def coords_to_l2(
    t, x_patch, y_patch, window_center=(0.35, 0.25), display_fs: float = DISPLAY_FS,
    target_fs: float = ANALYSIS_FS, task: TaskKind | None = None,
) -> TargetTrajectory:
    """Per-frame patch-to-window L2 distance, resampled to the analysis rate."""
    l2 = np.hypot(x_patch - window_center[0], y_patch - window_center[1])
    from fractions import Fraction

    ratio = Fraction(target_fs / display_fs).limit_denominator(100)
    resampled = signal.resample_poly(l2, ratio.numerator, ratio.denominator, padtype="line")
    return TargetTrajectory(values=resampled, fs=target_fs, task=task)


@dataclass(frozen=True)
class SynthEegSpec:
    """Synthetic EEG generator parameters.

    lag_ms > 0 delays the ocular response relative to the stimulus
    (reactive); negative values are anticipatory. Levels are linear
    amplitudes in mV.
    """

    lag_ms: float = 0.0
    gains: tuple = (0.9, 1.0, 0.95, 0.8, 0.85, 0.75)
    pink_level: float = 0.02
    alpha_level: float = 0.02
    gamma_level: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if abs(self.lag_ms) > 500.0:
            raise ConfigurationError(f"|lag_ms| = {abs(self.lag_ms)} exceeds the 500 ms DTW band")
        if min(self.pink_level, self.alpha_level, self.gamma_level) < 0:
            raise ConfigurationError("noise levels must be >= 0")


def _pink_noise(rng, n):
    """1/f-amplitude noise via spectral shaping of white noise."""
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n)
    shape = np.ones_like(freqs)
    shape[1:] = 1.0 / np.sqrt(freqs[1:])
    shaped = np.fft.irfft(spec * shape, n=n)
    return shaped / shaped.std()


def _bandlimited_noise(rng, n, fs, low, high):
    white = rng.standard_normal(n)
    sos = signal.butter(4, [low, high], btype="bandpass", fs=fs, output="sos")
    out = signal.sosfiltfilt(sos, white)
    return out / out.std()


def synth_eeg(
    traj: TargetTrajectory, spec: SynthEegSpec, channel_names=DEFAULT_CHANNELS,
    eeg_fs: float = EEG_FS,
) -> MultiChannelRecord:
    """Six-channel EEG coupling the lagged trajectory, at the raw EEG rate."""
    spec.validate()
    if len(spec.gains) != len(channel_names):
        raise ConfigurationError(
            f"{len(spec.gains)} gains for {len(channel_names)} channels"
        )
    n_out = int(round(traj.n_samples * eeg_fs / traj.fs))
    lag_samples = spec.lag_ms / 1000.0 * eeg_fs
    if abs(lag_samples) >= n_out:
        raise SegmentRangeError(f"lag {spec.lag_ms} ms exceeds the trajectory span")
    # band-limited interpolation to the EEG rate, then a fractional-safe
    # integer shift (lag rounded to the 250 Hz grid, i.e. 4 ms steps)
    from fractions import Fraction

    ratio = Fraction(eeg_fs / traj.fs).limit_denominator(100)
    base = signal.resample_poly(traj.values, ratio.numerator, ratio.denominator, padtype="line")
    base = base[:n_out]
    shift = int(round(lag_samples))
    lagged = np.empty_like(base)
    if shift >= 0:
        lagged[shift:] = base[: n_out - shift]
        lagged[:shift] = base[0]
    else:
        lagged[:shift] = base[-shift:]
        lagged[shift:] = base[-1]
    rng = np.random.default_rng(spec.seed)
    t = np.arange(n_out) / eeg_fs
    data = np.empty((len(channel_names), n_out))
    for c, gain in enumerate(spec.gains):
        chan = gain * lagged
        if spec.pink_level > 0:
            chan = chan + spec.pink_level * _pink_noise(rng, n_out)
        if spec.alpha_level > 0:
            phase = rng.uniform(0.0, 2.0 * np.pi)
            chan = chan + spec.alpha_level * np.sin(2.0 * np.pi * 10.0 * t + phase)
        if spec.gamma_level > 0:
            chan = chan + spec.gamma_level * _bandlimited_noise(rng, n_out, eeg_fs, 25.0, 50.0)
        data[c] = chan
    return MultiChannelRecord(data=data, fs=eeg_fs, channel_names=channel_names)


DEFAULT_TASK_ORDER = (
    TaskKind.HORIZONTAL_SACCADE,
    TaskKind.VERTICAL_SACCADE,
    TaskKind.HORIZONTAL_PURSUIT,
    TaskKind.VERTICAL_PURSUIT,
)


@dataclass(frozen=True)
class SubjectSpec:
    subject_id: str
    lag_ms: float
    seed: int = 0
    eeg: SynthEegSpec = SynthEegSpec()


@dataclass(frozen=True)
class SessionConfig:
    """Layout of one synthetic recording campaign."""

    subjects: tuple
    n_sessions: int = 10
    n_trials: int = 5
    tasks: tuple = DEFAULT_TASK_ORDER
    stimulus: dict = field(default_factory=dict)  # per-task StimulusSpec overrides
    truncate: tuple = ()  # (subject_id, session_idx, trial_idx, keep_s) entries


def build_trial(
    tasks, stimulus_overrides=None, eeg_spec: SynthEegSpec = SynthEegSpec(),
    instruction_s: float = INSTRUCTION_S,
):
    """One trial: instruction prefix then the task segments back to back.

    Returns (eeg record @250 Hz, trajectory @100 Hz, segment specs).
    The trial trajectory holds each segment's normalized L2 trace and
    zeros during the instruction prefix; the EEG couples the whole-trial
    trajectory with the configured lag.
    """
    stimulus_overrides = stimulus_overrides or {}
    pieces = [np.zeros(int(round(instruction_s * ANALYSIS_FS)))]
    segments = []
    cursor = instruction_s
    for task in tasks:
        spec = stimulus_overrides.get(task, StimulusSpec(task=task))
        t, x, y = gen_stimulus_coords(spec)
        traj = coords_to_l2(
            t, x, y, window_center=spec.window_center, display_fs=spec.display_fs, task=task
        )
        traj = normalize_trajectory(traj)
        pieces.append(traj.values)
        segments.append(
            TaskSegmentSpec(task=task, start_s=cursor, end_s=cursor + traj.duration)
        )
        cursor += traj.duration
    full = TargetTrajectory(values=np.concatenate(pieces), fs=ANALYSIS_FS)
    record = synth_eeg(full, eeg_spec)
    return record, full, tuple(segments)


def gen_session(out_dir, subject: SubjectSpec, session_idx: int, config: SessionConfig):
    """Write one synthetic session (manifest + per-trial EEG/trajectory CSVs)."""
    out_dir = Path(out_dir)
    session_id = f"session_{session_idx:02d}"
    sess_dir = out_dir / subject.subject_id / session_id
    sess_dir.mkdir(parents=True, exist_ok=True)
    trials = []
    for trial_idx in range(config.n_trials):
        trial_id = f"trial_{trial_idx:02d}"
        trial_seed = int(
            np.random.SeedSequence(
                [subject.seed, subject.eeg.seed, session_idx, trial_idx]
            ).generate_state(1)[0]
        )
        eeg_spec = replace(subject.eeg, lag_ms=subject.lag_ms, seed=trial_seed)
        record, traj, segments = build_trial(
            config.tasks, stimulus_overrides=config.stimulus, eeg_spec=eeg_spec
        )
        keep_s = None
        for trunc in config.truncate:
            if trunc[:3] == (subject.subject_id, session_idx, trial_idx):
                keep_s = float(trunc[3])
        if keep_s is not None:
            record = record.with_data(record.data[:, : int(round(keep_s * record.fs))])
            traj = replace(traj, values=traj.values[: int(round(keep_s * traj.fs))])
            segments = tuple(
                replace(seg, end_s=min(seg.end_s, keep_s))
                for seg in segments
                if seg.start_s < keep_s
            )
        eeg_path = f"{trial_id}_eeg.csv"
        traj_path = f"{trial_id}_trajectory.csv"
        write_eeg_csv(sess_dir / eeg_path, record)
        write_trajectory_csv(sess_dir / traj_path, traj)
        trials.append(
            TrialDescriptor(
                trial_id=trial_id, segments=segments,
                eeg_path=eeg_path, trajectory_path=traj_path,
            )
        )
    manifest = SessionManifest(
        subject_id=subject.subject_id, session_id=session_id, trials=tuple(trials)
    )
    write_manifest(sess_dir / "manifest.json", manifest)
    return sess_dir


def gen_dataset(out_dir, config: SessionConfig):
    """Write every subject/session plus the ground-truth lag sidecar.

    The sidecar (truth.json) lives next to the data but is never read by
    any analysis stage.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for subject in config.subjects:
        for session_idx in range(config.n_sessions):
            gen_session(out_dir, subject, session_idx, config)
    truth = {s.subject_id: {"lag_ms": s.lag_ms, "seed": s.seed} for s in config.subjects}
    (out_dir / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    return out_dir
