"""Core time-series containers, session bookkeeping, and windowing.

All containers hold float64 numpy arrays and are treated as immutable
after construction; operations return new containers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import (
    AlignmentError,
    EmptyInputError,
    OrderingError,
    SegmentRangeError,
    ShapeError,
)

DEFAULT_CHANNELS = ("O1", "Oz", "O2", "PO3", "POz", "PO4")

# Sliding-window defaults: 2.56 s window, 200 ms stride at 100 Hz, and a
# 13.76 s minimum segment (57 windows).
WINDOW_SAMPLES = 256
STRIDE_SAMPLES = 20
MIN_SEGMENT_SAMPLES = 1376


class TaskKind(str, Enum):
    HORIZONTAL_SACCADE = "horizontal_saccade"
    VERTICAL_SACCADE = "vertical_saccade"
    HORIZONTAL_PURSUIT = "horizontal_pursuit"
    VERTICAL_PURSUIT = "vertical_pursuit"

    @property
    def is_pursuit(self) -> bool:
        return self in (TaskKind.HORIZONTAL_PURSUIT, TaskKind.VERTICAL_PURSUIT)

    @property
    def is_horizontal(self) -> bool:
        return self in (TaskKind.HORIZONTAL_SACCADE, TaskKind.HORIZONTAL_PURSUIT)

    @property
    def label(self) -> str:
        return self.value.replace("_", " ").title()


@dataclass(frozen=True)
class MultiChannelRecord:
    """Multi-channel EEG segment (mV) with its sampling rate.

    data has shape (n_channels, n_samples); t0 is the segment start
    offset in seconds relative to its trial.
    """

    data: np.ndarray
    fs: float
    channel_names: tuple = DEFAULT_CHANNELS
    t0: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if data.ndim != 2:
            raise ShapeError(f"EEG data must be 2-D (channels, samples), got {data.shape}")
        if len(self.channel_names) != data.shape[0]:
            raise ShapeError(
                f"{len(self.channel_names)} channel names for {data.shape[0]} channels"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("EEG data contains non-finite samples")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.fs

    def with_data(self, data: np.ndarray, fs: float | None = None) -> "MultiChannelRecord":
        return replace(self, data=data, fs=self.fs if fs is None else fs)


@dataclass(frozen=True)
class TargetTrajectory:
    """Stimulus L2-distance time series (the prediction target)."""

    values: np.ndarray
    fs: float
    task: TaskKind | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise ShapeError(f"trajectory must be 1-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("trajectory contains non-finite samples")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def duration(self) -> float:
        return self.n_samples / self.fs


@dataclass(frozen=True)
class WindowPair:
    """One aligned (EEG window, target window) training example."""

    eeg: np.ndarray
    target: np.ndarray
    task: TaskKind
    subject_id: str = ""
    session_id: str = ""
    trial_id: str = ""
    window_index: int = 0
    start_sample: int = 0

    def __post_init__(self):
        eeg = np.asarray(self.eeg, dtype=np.float64)
        target = np.asarray(self.target, dtype=np.float64)
        object.__setattr__(self, "eeg", eeg)
        object.__setattr__(self, "target", target)
        if eeg.ndim != 2:
            raise ShapeError(f"window EEG must be 2-D, got {eeg.shape}")
        if eeg.shape[1] != target.shape[0]:
            raise AlignmentError(
                f"EEG window length {eeg.shape[1]} != target length {target.shape[0]}"
            )

    @property
    def sort_key(self):
        return (self.subject_id, self.session_id, self.trial_id, self.window_index)


@dataclass(frozen=True)
class TaskSegmentSpec:
    """Declared task segment inside a trial, boundaries in seconds."""

    task: TaskKind
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise SegmentRangeError(
                f"segment end {self.end_s} s not after start {self.start_s} s"
            )


@dataclass(frozen=True)
class TrialDescriptor:
    trial_id: str
    segments: tuple = ()
    eeg_path: str = ""
    trajectory_path: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if len(self.segments) > 4:
            raise SegmentRangeError(
                f"trial {self.trial_id} declares {len(self.segments)} segments (max 4)"
            )
        spans = sorted((s.start_s, s.end_s) for s in self.segments)
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            if b0 < a1:
                raise SegmentRangeError(
                    f"trial {self.trial_id}: segments [{a0},{a1}] and [{b0},{b1}] overlap"
                )


@dataclass(frozen=True)
class SessionManifest:
    subject_id: str
    session_id: str
    trials: tuple = ()
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))


@dataclass
class WindowingResult:
    """Windows plus the rejection flag for too-short segments."""

    windows: list = field(default_factory=list)
    rejected: bool = False


def normalize_trajectory(traj: TargetTrajectory) -> TargetTrajectory:
    """Min-max normalize a trajectory to [0, 1].

    Constant inputs map to all zeros (avoids a divide-by-zero on
    degenerate L2 traces).
    """
    if traj.n_samples == 0:
        raise EmptyInputError("cannot normalize an empty trajectory")
    v = traj.values
    lo, hi = v.min(), v.max()
    if hi - lo == 0.0:
        out = np.zeros_like(v)
    else:
        out = (v - lo) / (hi - lo)
    return replace(traj, values=out)


def slice_task_segments(
    record: MultiChannelRecord,
    traj: TargetTrajectory,
    trial: TrialDescriptor,
    instruction_s: float = 2.0,
):
    """Cut a trial into its declared per-task (EEG, trajectory) segments.

    The instruction prefix (first ``instruction_s`` seconds) must not be
    covered by any declared segment.
    """
    if record.fs != traj.fs:
        raise AlignmentError(f"record fs {record.fs} != trajectory fs {traj.fs}")
    fs = record.fs
    n = min(record.n_samples, traj.n_samples)
    out = []
    for seg in trial.segments:
        if seg.start_s < instruction_s:
            raise SegmentRangeError(
                f"segment starts at {seg.start_s} s inside the {instruction_s} s "
                "instruction prefix"
            )
        i0 = int(round(seg.start_s * fs))
        i1 = int(round(seg.end_s * fs))
        if i0 < 0 or i1 > n:
            raise SegmentRangeError(
                f"segment [{seg.start_s}, {seg.end_s}] s outside the "
                f"{n / fs:.2f} s recording"
            )
        sub_rec = replace(record, data=record.data[:, i0:i1], t0=seg.start_s)
        sub_traj = replace(traj, values=traj.values[i0:i1], task=seg.task)
        out.append((seg.task, sub_rec, sub_traj))
    return out


def make_windows(
    record: MultiChannelRecord,
    traj: TargetTrajectory,
    win: int = WINDOW_SAMPLES,
    stride: int = STRIDE_SAMPLES,
    min_len: int = MIN_SEGMENT_SAMPLES,
    subject_id: str = "",
    session_id: str = "",
    trial_id: str = "",
) -> WindowingResult:
    """Sliding-window extraction over one task segment.

    Segments shorter than ``min_len`` samples are rejected whole; longer
    segments are truncated to the first ``min_len`` samples, yielding
    exactly floor((min_len - win) / stride) + 1 windows.
    """
    if record.n_samples != traj.n_samples:
        raise AlignmentError(
            f"EEG length {record.n_samples} != trajectory length {traj.n_samples}"
        )
    if traj.task is None:
        raise ValueError("trajectory must carry its TaskKind for windowing")
    if record.n_samples < min_len:
        return WindowingResult(windows=[], rejected=True)
    data = record.data[:, :min_len]
    values = traj.values[:min_len]
    windows = []
    for k, start in enumerate(range(0, min_len - win + 1, stride)):
        windows.append(
            WindowPair(
                eeg=data[:, start : start + win],
                target=values[start : start + win],
                task=traj.task,
                subject_id=subject_id,
                session_id=session_id,
                trial_id=trial_id,
                window_index=k,
                start_sample=start,
            )
        )
    return WindowingResult(windows=windows, rejected=False)


def check_chronological(windows) -> None:
    """Raise OrderingError unless windows are sorted by their sort key."""
    keys = [w.sort_key for w in windows]
    if keys != sorted(keys):
        raise OrderingError("windows are not in chronological (session, trial, index) order")
