"""On-disk formats: EEG CSV, trajectory CSV, session manifest JSON."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .signal_core import (
    DEFAULT_CHANNELS,
    MultiChannelRecord,
    SessionManifest,
    TargetTrajectory,
    TaskKind,
    TaskSegmentSpec,
    TrialDescriptor,
)


def write_eeg_csv(path, record: MultiChannelRecord) -> None:
    """EEG CSV: header ``t,O1,Oz,...``, one row per sample, values in mV."""
    path = Path(path)
    t = record.t0 + np.arange(record.n_samples) / record.fs
    table = np.column_stack([t, record.data.T])
    header = "t," + ",".join(record.channel_names)
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.9g")


def read_eeg_csv(path, fs: float | None = None) -> MultiChannelRecord:
    path = Path(path)
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    if names[0] != "t":
        raise ConfigurationError(f"{path}: first EEG CSV column must be 't', got {names[0]!r}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = table[:, 0]
    if fs is None:
        if len(t) < 2:
            raise ConfigurationError(f"{path}: cannot infer fs from a single sample")
        fs = round(1.0 / np.median(np.diff(t)))
    return MultiChannelRecord(
        data=table[:, 1:].T, fs=float(fs), channel_names=tuple(names[1:]), t0=float(t[0])
    )


def write_trajectory_csv(path, traj: TargetTrajectory, t0: float = 0.0) -> None:
    """Derived trajectory CSV: header ``t,l2``."""
    t = t0 + np.arange(traj.n_samples) / traj.fs
    table = np.column_stack([t, traj.values])
    np.savetxt(path, table, delimiter=",", header="t,l2", comments="", fmt="%.9g")


def read_trajectory_csv(path, fs: float | None = None, task: TaskKind | None = None) -> TargetTrajectory:
    path = Path(path)
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = table[:, 0]
    if fs is None:
        if len(t) < 2:
            raise ConfigurationError(f"{path}: cannot infer fs from a single sample")
        fs = round(1.0 / np.median(np.diff(t)))
    if names[1:] == ["l2"]:
        values = table[:, 1]
    elif names[1:] == ["x_patch", "y_patch", "x_win", "y_win"]:
        values = np.hypot(table[:, 1] - table[:, 3], table[:, 2] - table[:, 4])
    else:
        raise ConfigurationError(f"{path}: unrecognized trajectory columns {names[1:]}")
    return TargetTrajectory(values=values, fs=float(fs), task=task)


def write_raw_coords_csv(path, t, x_patch, y_patch, x_win, y_win) -> None:
    """Raw stimulus CSV: header ``t,x_patch,y_patch,x_win,y_win``."""
    table = np.column_stack([t, x_patch, y_patch, x_win, y_win])
    np.savetxt(
        path, table, delimiter=",", header="t,x_patch,y_patch,x_win,y_win",
        comments="", fmt="%.9g",
    )


def manifest_to_dict(manifest: SessionManifest) -> dict:
    return {
        "subject_id": manifest.subject_id,
        "session_id": manifest.session_id,
        "notes": manifest.notes,
        "trials": [
            {
                "trial_id": tr.trial_id,
                "eeg_path": tr.eeg_path,
                "trajectory_path": tr.trajectory_path,
                "segments": [
                    {"task": seg.task.value, "start_s": seg.start_s, "end_s": seg.end_s}
                    for seg in tr.segments
                ],
            }
            for tr in manifest.trials
        ],
    }


def manifest_from_dict(doc: dict) -> SessionManifest:
    trials = tuple(
        TrialDescriptor(
            trial_id=tr["trial_id"],
            eeg_path=tr.get("eeg_path", ""),
            trajectory_path=tr.get("trajectory_path", ""),
            segments=tuple(
                TaskSegmentSpec(
                    task=TaskKind(seg["task"]),
                    start_s=float(seg["start_s"]),
                    end_s=float(seg["end_s"]),
                )
                for seg in tr.get("segments", ())
            ),
        )
        for tr in doc.get("trials", ())
    )
    return SessionManifest(
        subject_id=doc["subject_id"],
        session_id=doc["session_id"],
        trials=trials,
        notes=doc.get("notes", ""),
    )


def write_manifest(path, manifest: SessionManifest) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(manifest), indent=2) + "\n")


def read_manifest(path) -> SessionManifest:
    return manifest_from_dict(json.loads(Path(path).read_text()))
