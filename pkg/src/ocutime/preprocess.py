"""EEG preprocessing: rational resampling, zero-phase band-pass, re-referencing, QC.

Pipeline order is fixed: resample 250 -> 100 Hz, 0.5-30 Hz zero-phase
Butterworth band-pass, then average re-referencing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .errors import (
    ConfigurationError,
    DegenerateMontageError,
    EmptyInputError,
    TooShortError,
)
from .signal_core import MultiChannelRecord


@dataclass(frozen=True)
class BandPassSpec:
    """4th-order Butterworth band-pass, applied forward-backward."""

    low_hz: float = 0.5
    high_hz: float = 30.0
    order: int = 4

    def validate(self, fs: float) -> None:
        if not (0.0 < self.low_hz < self.high_hz < fs / 2.0):
            raise ConfigurationError(
                f"band edges ({self.low_hz}, {self.high_hz}) Hz invalid for fs={fs}"
            )


def design_antialias_fir(up: int, down: int, fs_in: float, attenuation_db: float = 60.0):
    """Kaiser low-pass FIR for polyphase resampling by up/down.

    Cutoff sits at the smaller Nyquist of the two rates; the window is
    sized for the requested stopband attenuation with a transition band
    of 10% of the cutoff.
    """
    fs_up = fs_in * up
    cutoff = min(fs_in, fs_in * up / down) / 2.0
    width = 0.2 * cutoff
    numtaps, beta = signal.kaiserord(attenuation_db, 2.0 * width / fs_up)
    numtaps |= 1  # odd length keeps the filter linear-phase type I
    taps = signal.firwin(numtaps, cutoff - width / 2.0, window=("kaiser", beta), fs=fs_up)
    return taps


def resample_rational(
    record: MultiChannelRecord, target_fs: float = 100.0, attenuation_db: float = 60.0
) -> MultiChannelRecord:
    """Polyphase resampling to target_fs (default 250 -> 100 Hz, ratio 2/5)."""
    ratio = Fraction(target_fs / record.fs).limit_denominator(1000)
    if abs(float(ratio) - target_fs / record.fs) > 1e-9:
        raise ConfigurationError(
            f"non-rational resampling ratio {record.fs} -> {target_fs} Hz"
        )
    up, down = ratio.numerator, ratio.denominator
    taps = design_antialias_fir(up, down, record.fs, attenuation_db)
    # resample_poly applies the up-factor gain itself; pass unit-DC taps
    out = signal.resample_poly(record.data, up, down, axis=1, window=taps)
    return record.with_data(out, fs=target_fs)


def design_bandpass_sos(spec: BandPassSpec, fs: float) -> np.ndarray:
    spec.validate(fs)
    return signal.butter(
        spec.order, [spec.low_hz, spec.high_hz], btype="bandpass", fs=fs, output="sos"
    )


def butter_bandpass_zero_phase(
    record: MultiChannelRecord, spec: BandPassSpec = BandPassSpec()
) -> MultiChannelRecord:
    """Forward-backward (zero-phase) Butterworth band-pass.

    Edges are stabilized with odd-symmetric reflection padding of
    3 * (n_sections * 2) samples, stripped from the output.
    """
    sos = design_bandpass_sos(spec, record.fs)
    padlen = 3 * (sos.shape[0] * 2)
    if record.n_samples <= padlen:
        raise TooShortError(
            f"signal of {record.n_samples} samples needs > {padlen} for edge padding"
        )
    out = signal.sosfiltfilt(sos, record.data, axis=1, padtype="odd", padlen=padlen)
    return record.with_data(out)


def average_reference(record: MultiChannelRecord) -> MultiChannelRecord:
    """Subtract the instantaneous across-channel mean from every channel."""
    if record.n_channels < 2:
        raise DegenerateMontageError("average reference needs at least 2 channels")
    out = record.data - record.data.mean(axis=0, keepdims=True)
    return record.with_data(out)


def preprocess_record(
    record: MultiChannelRecord,
    target_fs: float = 100.0,
    spec: BandPassSpec = BandPassSpec(),
) -> MultiChannelRecord:
    """Full preprocessing chain in the fixed order."""
    if record.fs != target_fs:
        record = resample_rational(record, target_fs)
    record = butter_bandpass_zero_phase(record, spec)
    return average_reference(record)


@dataclass(frozen=True)
class QcReport:
    """Per-trial per-channel mean/std (mV) plus pooled aggregates."""

    trial_ids: tuple
    channel_names: tuple
    means: np.ndarray  # (n_trials, n_channels)
    stds: np.ndarray
    aggregate_mean: float
    aggregate_std: float

    def to_rows(self):
        """Rows for the ``trial_id,channel,mean_mV,std_mV`` CSV."""
        rows = []
        for i, trial_id in enumerate(self.trial_ids):
            for j, ch in enumerate(self.channel_names):
                rows.append((trial_id, ch, self.means[i, j], self.stds[i, j]))
        rows.append(("aggregate", "all", self.aggregate_mean, self.aggregate_std))
        return rows


def qc_stats(trials, trial_ids=None) -> QcReport:
    """Trial-wise signal-quality statistics over preprocessed records."""
    trials = list(trials)
    if not trials:
        raise EmptyInputError("qc_stats needs at least one trial")
    if trial_ids is None:
        trial_ids = tuple(f"trial_{i:03d}" for i in range(len(trials)))
    means = np.array([tr.data.mean(axis=1) for tr in trials])
    stds = np.array([tr.data.std(axis=1) for tr in trials])
    pooled = np.concatenate([tr.data.ravel() for tr in trials])
    return QcReport(
        trial_ids=tuple(trial_ids),
        channel_names=trials[0].channel_names,
        means=means,
        stds=stds,
        aggregate_mean=float(pooled.mean()),
        aggregate_std=float(pooled.std()),
    )
