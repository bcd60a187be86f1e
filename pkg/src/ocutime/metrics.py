"""Response-time metrics: Pearson gate, banded DTW, cross-correlation,
Welch PSD summaries, and the Mann-Whitney U test."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, erfc, sqrt

import numpy as np

from .errors import (
    EmptyInputError,
    InfeasiblePathError,
    TooShortError,
    UndefinedCorrelationError,
)

DTW_BAND_RADIUS = 50  # samples (+-500 ms at 100 Hz)
XCORR_MAX_LAG = 128


def pearson_r(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise EmptyInputError(f"need equal-length 1-D sequences of >= 2, got {a.shape}/{b.shape}")
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def znorm(x) -> np.ndarray:
    """Zero-mean unit-variance scaling (DTW inputs are scale-free)."""
    x = np.asarray(x, dtype=np.float64)
    s = x.std()
    if s == 0.0:
        raise UndefinedCorrelationError("cannot z-normalize a constant sequence")
    return (x - x.mean()) / s


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: tuple  # ((i, j), ...) from (0, 0) to (n-1, m-1)
    band_radius: int


def dtw(a, b, radius: int = DTW_BAND_RADIUS) -> DtwResult:
    """Sakoe-Chiba banded DTW with |a_i - b_j| cost and symmetric steps.

    Every step (diagonal, vertical = advance i, horizontal = advance j)
    adds the local cost once. Ties in the backtrack prefer diagonal,
    then vertical, then horizontal.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise EmptyInputError("DTW inputs must be non-empty")
    if radius < abs(n - m):
        raise InfeasiblePathError(
            f"band radius {radius} cannot reach the corner of a {n}x{m} grid"
        )
    big = np.inf
    acc = np.full((n, m), big)
    for i in range(n):
        j_lo = max(0, i - radius)
        j_hi = min(m - 1, i + radius)
        cost = np.abs(a[i] - b[j_lo : j_hi + 1])
        if i == 0:
            acc[0, j_lo : j_hi + 1] = np.cumsum(cost)
            continue
        prev = acc[i - 1]
        for idx, j in enumerate(range(j_lo, j_hi + 1)):
            best = prev[j - 1] if j > 0 else big  # diagonal
            up = prev[j]  # vertical
            left = acc[i, j - 1] if j > 0 else big  # horizontal
            acc[i, j] = cost[idx] + min(best, up, left)
    distance = acc[n - 1, m - 1]
    # backtrack with the documented tie-break
    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        candidates = []
        if i > 0 and j > 0:
            candidates.append((acc[i - 1, j - 1], 0, (i - 1, j - 1)))
        if i > 0:
            candidates.append((acc[i - 1, j], 1, (i - 1, j)))
        if j > 0:
            candidates.append((acc[i, j - 1], 2, (i, j - 1)))
        _, _, (i, j) = min(candidates, key=lambda c: (c[0], c[1]))
        path.append((i, j))
    path.reverse()
    return DtwResult(distance=float(distance), path=tuple(path), band_radius=radius)


def dtw_align(feature, target, path) -> np.ndarray:
    """Warp a feature onto the target timeline along a DTW path.

    Each target index receives the mean of every feature sample mapped
    onto it.
    """
    feature = np.asarray(feature, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    sums = np.zeros(len(target))
    counts = np.zeros(len(target))
    for i, j in path:
        sums[j] += feature[i]
        counts[j] += 1
    if np.any(counts == 0):
        raise InfeasiblePathError("DTW path does not cover every target index")
    return sums / counts


@dataclass(frozen=True)
class XcorrCurve:
    lags_ms: np.ndarray
    values: np.ndarray
    umax_lag_ms: float
    peak_value: float


def normalized_xcorr(a, b, max_lag: int = XCORR_MAX_LAG, fs: float = 100.0) -> XcorrCurve:
    """Lagged Pearson correlation between equal-length sequences.

    At lag l, a(t) is compared against b(t - l) over their overlap, each
    side mean-removed and scaled by its overlap norm, so values lie in
    [-1, 1]. umax_lag_ms > 0 means a lags b (reactive); negative means
    a leads (anticipatory).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise EmptyInputError(f"need equal-length 1-D sequences, got {a.shape}/{b.shape}")
    if a.std() == 0.0 or b.std() == 0.0:
        raise UndefinedCorrelationError("cross-correlation undefined for constant input")
    n = len(a)
    max_lag = min(max_lag, n - 2)
    lags = np.arange(-max_lag, max_lag + 1)
    values = np.empty(len(lags))
    for k, lag in enumerate(lags):
        if lag >= 0:
            xa, xb = a[lag:], b[: n - lag]
        else:
            xa, xb = a[: n + lag], b[-lag:]
        xa = xa - xa.mean()
        xb = xb - xb.mean()
        denom = np.linalg.norm(xa) * np.linalg.norm(xb)
        values[k] = 0.0 if denom == 0.0 else float(xa @ xb / denom)
    peak = int(np.argmax(values))
    ms_per_sample = 1000.0 / fs
    return XcorrCurve(
        lags_ms=lags * ms_per_sample,
        values=values,
        umax_lag_ms=float(lags[peak] * ms_per_sample),
        peak_value=float(values[peak]),
    )


def welch_psd(x, fs: float = 100.0, seg: int = 128, overlap: int = 64, window: str = "hann"):
    """Welch averaged-periodogram PSD (one-sided, density scaling).

    Each segment is mean-detrended and Hann-windowed; overlap is in
    samples.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < seg:
        raise TooShortError(f"need >= {seg} samples for Welch PSD, got {len(x)}")
    if window != "hann":
        raise ValueError(f"unsupported window {window!r}")
    win = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(seg) / seg)  # periodic Hann
    step = seg - overlap
    n_segs = (len(x) - overlap) // step
    scale = 1.0 / (fs * (win**2).sum())
    acc = None
    for s in range(n_segs):
        chunk = x[s * step : s * step + seg]
        chunk = (chunk - chunk.mean()) * win
        spec = np.fft.rfft(chunk)
        p = scale * np.abs(spec) ** 2
        p[1:-1] *= 2.0  # one-sided: fold negative frequencies
        acc = p if acc is None else acc + p
    freqs = np.fft.rfftfreq(seg, d=1.0 / fs)
    return freqs, acc / n_segs


@dataclass(frozen=True)
class PsdSummary:
    freqs: np.ndarray
    mean_psd: np.ndarray
    min_envelope: np.ndarray
    max_envelope: np.ndarray


def psd_summary(features, fs: float = 100.0, seg: int = 128, overlap: int = 64) -> PsdSummary:
    """Pointwise mean and min-max envelope of per-window Welch PSDs."""
    features = list(features)
    if not features:
        raise EmptyInputError("psd_summary needs at least one window")
    psds = []
    freqs = None
    for feat in features:
        freqs, p = welch_psd(feat, fs=fs, seg=seg, overlap=overlap)
        psds.append(p)
    psds = np.array(psds)
    return PsdSummary(
        freqs=freqs,
        mean_psd=psds.mean(axis=0),
        min_envelope=psds.min(axis=0),
        max_envelope=psds.max(axis=0),
    )


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float
    p_value: float
    median_x: float
    median_y: float
    direction: str
    method: str


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _u_from_ranks(ranks: np.ndarray, idx_x, n: int) -> float:
    return float(ranks[list(idx_x)].sum() - n * (n + 1) / 2.0)


def mann_whitney_u(x, y, exact: bool | None = None) -> UTestResult:
    """Two-sided Mann-Whitney U test with midrank ties.

    The exact p-value is computed by enumerating all pooled-rank
    assignments when n*m <= 64 or both sample sizes are <= 10; larger
    samples use the normal approximation with tie and continuity
    corrections.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise EmptyInputError("both samples must be non-empty")
    pooled = np.concatenate([x, y])
    ranks = _midranks(pooled)
    u_obs = _u_from_ranks(ranks, range(n), n)
    mu = n * m / 2.0
    if exact is None:
        exact = (n * m <= 64) or (n <= 10 and m <= 10)
    if exact:
        total = comb(n + m, n)
        hits = 0
        dev = abs(u_obs - mu)
        for subset in combinations(range(n + m), n):
            u = _u_from_ranks(ranks, subset, n)
            if abs(u - mu) >= dev - 1e-12:
                hits += 1
        p = hits / total
        method = "exact"
    else:
        big_n = n + m
        _, counts = np.unique(pooled, return_counts=True)
        tie_term = (counts**3 - counts).sum()
        sigma2 = n * m / 12.0 * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
        if sigma2 <= 0.0:
            p = 1.0
        else:
            z = (abs(u_obs - mu) - 0.5) / sqrt(sigma2)
            z = max(z, 0.0)
            p = erfc(z / sqrt(2.0))
        method = "normal"
    med_x, med_y = float(np.median(x)), float(np.median(y))
    if med_x > med_y:
        direction = "x > y"
    elif med_x < med_y:
        direction = "x < y"
    else:
        direction = "x = y"
    return UTestResult(
        u_statistic=u_obs,
        p_value=min(1.0, float(p)),
        median_x=med_x,
        median_y=med_y,
        direction=direction,
        method=method,
    )
