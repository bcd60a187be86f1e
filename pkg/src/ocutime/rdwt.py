"""4-level redundant (undecimated, a trous) wavelet transform, Symlet-2.

All convolutions are circular (periodic extension), computed in the
Fourier domain, which makes perfect reconstruction and shift covariance
exact to rounding error for power-of-two window lengths.

Coefficient planes are stacked on the last axis in the fixed order
[A4, D4, D3, D2, D1]; at 100 Hz these map onto the delta* (0-3.125 Hz),
theta* (3.125-6.25 Hz), alpha* (6.25-12.5 Hz), beta* (12.5-25 Hz) and
gamma* (25-50 Hz) bands respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ShapeError

LEVELS = 4

BAND_ORDER = ("A4", "D4", "D3", "D2", "D1")
GAMMA_PLANE = 4  # index of D1 in BAND_ORDER

#: plane name -> (band label, low Hz, high Hz) at fs = 100
BAND_MAP = {
    "A4": ("delta*", 0.0, 3.125),
    "D4": ("theta*", 3.125, 6.25),
    "D3": ("alpha*", 6.25, 12.5),
    "D2": ("beta*", 12.5, 25.0),
    "D1": ("gamma*", 25.0, 50.0),
}


@dataclass(frozen=True)
class WaveletFilterBank:
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray


def sym2_filter_bank() -> WaveletFilterBank:
    """Orthogonal Symlet-2 (= Daubechies-2) 4-tap filter bank.

    dec_lo sums to sqrt(2) and has unit energy; dec_hi is the QMF
    mirror dec_hi[k] = (-1)^k dec_lo[3-k]; reconstruction filters are
    the time-reverses of the decomposition filters.
    """
    s3 = np.sqrt(3.0)
    dec_lo = np.array([1.0 + s3, 3.0 + s3, 3.0 - s3, 1.0 - s3]) / (4.0 * np.sqrt(2.0))
    k = np.arange(4)
    dec_hi = ((-1.0) ** k) * dec_lo[::-1]
    return WaveletFilterBank(
        dec_lo=dec_lo, dec_hi=dec_hi, rec_lo=dec_lo[::-1].copy(), rec_hi=dec_hi[::-1].copy()
    )


@lru_cache(maxsize=32)
def _level_responses(n_samples: int, levels: int):
    """rfft of the a-trous-upsampled filters at every level, length n_samples."""
    bank = sym2_filter_bank()
    los, his = [], []
    for j in range(1, levels + 1):
        step = 2 ** (j - 1)
        lo_t = np.zeros(n_samples)
        hi_t = np.zeros(n_samples)
        idx = (np.arange(4) * step) % n_samples
        np.add.at(lo_t, idx, bank.dec_lo)
        np.add.at(hi_t, idx, bank.dec_hi)
        los.append(np.fft.rfft(lo_t))
        his.append(np.fft.rfft(hi_t))
    return tuple(los), tuple(his)


def _check_length(n_samples: int, levels: int) -> None:
    if n_samples % (2**levels) != 0:
        raise ShapeError(
            f"time length {n_samples} not divisible by 2^{levels} = {2**levels}"
        )


def rdwt_forward(x: np.ndarray, levels: int = LEVELS) -> np.ndarray:
    """Forward transform of (..., W) signals to (..., W, levels + 1) planes."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    _check_length(n, levels)
    los, his = _level_responses(n, levels)
    a_hat = np.fft.rfft(x, axis=-1)
    details = []
    for j in range(levels):
        details.append(np.fft.irfft(a_hat * his[j], n=n, axis=-1))
        a_hat = a_hat * los[j]
    approx = np.fft.irfft(a_hat, n=n, axis=-1)
    # [A4, D4, D3, D2, D1] = [approx, details reversed]
    return np.stack([approx] + details[::-1], axis=-1)


def rdwt_inverse(coeffs: np.ndarray, levels: int = LEVELS) -> np.ndarray:
    """Exact inverse: average of the dual synthesis branches per level."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[-1] != levels + 1:
        raise ShapeError(
            f"expected {levels + 1} coefficient planes, got {coeffs.shape[-1]}"
        )
    n = coeffs.shape[-2]
    _check_length(n, levels)
    los, his = _level_responses(n, levels)
    a_hat = np.fft.rfft(coeffs[..., 0], axis=-1)
    for j in range(levels, 0, -1):
        d_hat = np.fft.rfft(coeffs[..., levels + 1 - j], axis=-1)
        a_hat = 0.5 * (np.conj(los[j - 1]) * a_hat + np.conj(his[j - 1]) * d_hat)
    return np.fft.irfft(a_hat, n=n, axis=-1)


def rdwt_inverse_adjoint(grad_x: np.ndarray, levels: int = LEVELS) -> np.ndarray:
    """Adjoint of rdwt_inverse; maps a signal gradient to a plane gradient."""
    grad_x = np.asarray(grad_x, dtype=np.float64)
    n = grad_x.shape[-1]
    _check_length(n, levels)
    los, his = _level_responses(n, levels)
    g_hat = np.fft.rfft(grad_x, axis=-1)
    planes = [None] * (levels + 1)
    for j in range(1, levels + 1):
        planes[levels + 1 - j] = np.fft.irfft(0.5 * his[j - 1] * g_hat, n=n, axis=-1)
        g_hat = 0.5 * los[j - 1] * g_hat
    planes[0] = np.fft.irfft(g_hat, n=n, axis=-1)
    return np.stack(planes, axis=-1)


def rdwt_forward_adjoint(grad_coeffs: np.ndarray, levels: int = LEVELS) -> np.ndarray:
    """Adjoint of rdwt_forward; maps a plane gradient to a signal gradient."""
    grad_coeffs = np.asarray(grad_coeffs, dtype=np.float64)
    n = grad_coeffs.shape[-2]
    _check_length(n, levels)
    los, his = _level_responses(n, levels)
    acc = np.fft.rfft(grad_coeffs[..., 0], axis=-1)
    for j in range(levels, 0, -1):
        d_hat = np.fft.rfft(grad_coeffs[..., levels + 1 - j], axis=-1)
        acc = np.conj(los[j - 1]) * acc + np.conj(his[j - 1]) * d_hat
    return np.fft.irfft(acc, n=n, axis=-1)


def mask_gamma(coeffs: np.ndarray) -> np.ndarray:
    """Zero the gamma* (D1) plane; all other planes are copied unchanged."""
    out = np.array(coeffs, copy=True)
    out[..., GAMMA_PLANE] = 0.0
    return out
