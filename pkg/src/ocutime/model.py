"""Trajectory-prediction model: variants M0/M1/M2, training, feature tap.

M0 is the full architecture: channel normalization, 4-level redundant
wavelet decomposition with gamma*-band masking, trainable zero-phase
wavelet-domain filtering, reconstruction, channel-wise temporal and
spatial 2-D convolutions (the feature tap), a causal conv stack, a
bidirectional + unidirectional LSTM pair, and a dense ReLU output of
256 samples. M1 drops the wavelet-domain filtering; M2 drops every
wavelet stage.
"""

from __future__ import annotations

import base64
import copy
import json
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import rdwt
from .autodiff import AdamState, Tensor, adam_step, glorot_uniform
from .errors import (
    ConfigurationError,
    InsufficientDataError,
    NumericError,
    ShapeError,
    UndefinedCorrelationError,
)
from .metrics import pearson_r
from .signal_core import check_chronological

CHECKPOINT_VERSION = 1

#: wavelet-filter kernel size per unmasked plane (delta*, theta*, alpha*, beta*)
DEFAULT_KERNEL_TABLE = {"A4": 63, "D4": 15, "D3": 7, "D2": 3}

UNMASKED_PLANES = ("A4", "D4", "D3", "D2")


@dataclass(frozen=True)
class ConvSpec:
    filters: int
    kernel: int
    dilation: int = 1


DEFAULT_CONV_STACK = (
    ConvSpec(64, 64),
    ConvSpec(32, 32),
    ConvSpec(16, 16),
    ConvSpec(8, 3, dilation=2),
)


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "M0"  # M0 | M1 | M2
    n_channels: int = 6
    window_len: int = 256
    kernel_table: dict = field(default_factory=lambda: dict(DEFAULT_KERNEL_TABLE))
    temporal_kernel: int = 63
    conv_stack: tuple = DEFAULT_CONV_STACK
    bilstm_units: int = 32
    lstm_units: int = 16
    output_len: int = 256
    seed: int = 0
    tied_wavelet_kernels: bool = True
    per_channel_kernels: bool = True
    elu_alpha: float = 1.0

    def validate(self) -> None:
        if self.variant not in ("M0", "M1", "M2"):
            raise ConfigurationError(f"unknown model variant {self.variant!r}")
        if set(self.kernel_table) != set(UNMASKED_PLANES):
            raise ConfigurationError(
                f"kernel_table keys must be exactly {UNMASKED_PLANES}"
            )
        for plane, k in self.kernel_table.items():
            if k % 2 == 0:
                raise ConfigurationError(
                    f"kernel size {k} for plane {plane} is even (center undefined)"
                )
        if self.temporal_kernel % 2 == 0:
            raise ConfigurationError("temporal kernel size must be odd")
        if self.output_len != self.window_len:
            raise ConfigurationError("output_len must equal window_len")


@dataclass
class ModelState:
    config: ModelConfig
    params: dict  # name -> Tensor
    meta: dict = field(default_factory=dict)

    def clone_params(self) -> dict:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_param_data(self, blob: dict) -> None:
        for k, v in blob.items():
            self.params[k].data = v.copy()


def _block_rng(seed: int, name: str):
    """Per-block RNG so shared blocks match across variants at equal seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


def _identity_kernel(size: int) -> np.ndarray:
    k = np.zeros(size)
    k[size // 2] = 1.0
    return k


def build_model(config: ModelConfig) -> ModelState:
    config.validate()
    params: dict = {}

    def add(name, data):
        params[name] = Tensor(data, requires_grad=True, name=name)

    c = config.n_channels
    if config.variant == "M0":
        for plane in UNMASKED_PLANES:
            size = config.kernel_table[plane]
            n_kernels = c if config.per_channel_kernels else 1
            base = np.tile(_identity_kernel(size), (n_kernels, 1, 1))
            add(f"wavelet/{plane}/kernel", base)
            if not config.tied_wavelet_kernels:
                add(f"wavelet/{plane}/kernel2", base.copy())

    tk = config.temporal_kernel
    rng = _block_rng(config.seed, "temporal")
    add("temporal/kernel", glorot_uniform(rng, (1, 1, 1, tk), tk, tk))
    add("temporal/bias", np.zeros(1))
    rng = _block_rng(config.seed, "spatial")
    add("spatial/kernel", glorot_uniform(rng, (1, 1, c, 1), c, c))
    add("spatial/bias", np.zeros(1))

    in_ch = 1
    for i, spec in enumerate(config.conv_stack):
        rng = _block_rng(config.seed, f"conv{i}")
        fan_in = in_ch * spec.kernel
        add(
            f"conv{i}/kernel",
            glorot_uniform(rng, (spec.filters, in_ch, spec.kernel), fan_in, spec.filters),
        )
        add(f"conv{i}/bias", np.zeros(spec.filters))
        in_ch = spec.filters

    h = config.bilstm_units
    for direction in ("fwd", "bwd"):
        rng = _block_rng(config.seed, f"bilstm/{direction}")
        add(f"bilstm/{direction}/wx", glorot_uniform(rng, (in_ch, 4 * h), in_ch, 4 * h))
        add(f"bilstm/{direction}/wh", glorot_uniform(rng, (h, 4 * h), h, 4 * h))
        bias = np.zeros(4 * h)
        bias[h : 2 * h] = 1.0  # forget-gate bias
        add(f"bilstm/{direction}/bias", bias)
    h2 = config.lstm_units
    rng = _block_rng(config.seed, "lstm")
    add("lstm/wx", glorot_uniform(rng, (2 * h, 4 * h2), 2 * h, 4 * h2))
    add("lstm/wh", glorot_uniform(rng, (h2, 4 * h2), h2, 4 * h2))
    bias = np.zeros(4 * h2)
    bias[h2 : 2 * h2] = 1.0
    add("lstm/bias", bias)

    rng = _block_rng(config.seed, "dense")
    add("dense/kernel", glorot_uniform(rng, (h2, config.output_len), h2, config.output_len))
    add("dense/bias", np.zeros(config.output_len))
    return ModelState(config=config, params=params)


def parameter_count(config: ModelConfig) -> int:
    return sum(p.data.size for p in build_model(config).params.values())


# -- tape ops for the fixed wavelet stages ---------------------------------

def _rdwt_forward_op(x: Tensor) -> Tensor:
    out = ad._make(rdwt.rdwt_forward(x.data), (x,), "rdwt_forward")

    def _bw():
        if x.requires_grad:
            x.grad += rdwt.rdwt_forward_adjoint(out.grad)

    out._backward = _bw if out.requires_grad else None
    return out


def _rdwt_inverse_op(coeffs: Tensor) -> Tensor:
    out = ad._make(rdwt.rdwt_inverse(coeffs.data), (coeffs,), "rdwt_inverse")

    def _bw():
        if coeffs.requires_grad:
            coeffs.grad += rdwt.rdwt_inverse_adjoint(out.grad)

    out._backward = _bw if out.requires_grad else None
    return out


def _mask_gamma_op(coeffs: Tensor) -> Tensor:
    out = ad._make(rdwt.mask_gamma(coeffs.data), (coeffs,), "mask_gamma")

    def _bw():
        if coeffs.requires_grad:
            g = out.grad.copy()
            g[..., rdwt.GAMMA_PLANE] = 0.0
            coeffs.grad += g

    out._backward = _bw if out.requires_grad else None
    return out


# -- layers ----------------------------------------------------------------

def channel_norm(x: Tensor) -> Tensor:
    """Per-channel zero mean and bounded amplitude for (B, C, W) input.

    No trainable parameters; the result lies in [-1, 1] with per-channel
    mean 0. Gradients flow through both statistics.
    """
    centered = x - x.mean(axis=-1, keepdims=True)
    scale = ad.tmax(ad.tabs(centered), axis=-1, keepdims=True) + 1e-8
    return centered / scale


def _apply_plane_filter(plane: Tensor, k1: Tensor, k2: Tensor, groups: int) -> Tensor:
    size = k1.data.shape[-1]
    pad = (size - 1) // 2
    y = ad.conv1d(plane, k1, pad_left=pad, pad_right=pad, groups=groups)
    y = ad.time_reverse(y, axis=-1)
    y = ad.conv1d(y, k2, pad_left=pad, pad_right=pad, groups=groups)
    return ad.time_reverse(y, axis=-1)


def wavelet_domain_filter(coeffs: Tensor, state: ModelState) -> Tensor:
    """Trainable zero-phase filtering of each unmasked coefficient plane.

    The two sequential convolutions share one kernel per (channel,
    plane) by default (tied weights), making the effective impulse
    response the kernel autocorrelation: exactly zero phase. The
    gamma* plane passes through as zeros.
    """
    config = state.config
    b_n, c_n, w_n, _ = coeffs.data.shape
    planes = []
    for idx, plane_name in enumerate(UNMASKED_PLANES):
        plane = coeffs[..., idx]
        k1 = state.params[f"wavelet/{plane_name}/kernel"]
        k2 = k1 if config.tied_wavelet_kernels else state.params[f"wavelet/{plane_name}/kernel2"]
        if config.per_channel_kernels:
            y = _apply_plane_filter(plane, k1, k2, groups=c_n)
        else:
            flat = plane.reshape((b_n * c_n, 1, w_n))
            y = _apply_plane_filter(flat, k1, k2, groups=1).reshape((b_n, c_n, w_n))
        planes.append(y.reshape((b_n, c_n, w_n, 1)))
    planes.append(Tensor(np.zeros((b_n, c_n, w_n, 1))))
    return ad.concat(planes, axis=3)


def forward_batch(state: ModelState, eeg: np.ndarray | Tensor):
    """Run the network on a (B, C, W) batch.

    Returns (prediction Tensor (B, output_len), feature Tensor (B, W)).
    """
    config = state.config
    x = eeg if isinstance(eeg, Tensor) else Tensor(eeg)
    if x.data.ndim != 3 or x.data.shape[1] != config.n_channels or x.data.shape[2] != config.window_len:
        raise ShapeError(
            f"expected (B, {config.n_channels}, {config.window_len}) input, got {x.data.shape}"
        )
    b_n, c_n, w_n = x.data.shape
    p = state.params

    h = channel_norm(x)
    if config.variant in ("M0", "M1"):
        coeffs = _rdwt_forward_op(h)
        coeffs = _mask_gamma_op(coeffs)
        if config.variant == "M0":
            coeffs = wavelet_domain_filter(coeffs, state)
        h = _rdwt_inverse_op(coeffs)

    img = h.reshape((b_n, 1, c_n, w_n))
    img = ad.tanh(ad.conv2d(img, p["temporal/kernel"], bias=p["temporal/bias"], padding="same"))
    feat = ad.tanh(ad.conv2d(img, p["spatial/kernel"], bias=p["spatial/bias"], padding="valid"))
    feature = feat.reshape((b_n, w_n))

    y = feature.reshape((b_n, 1, w_n))
    for i, spec in enumerate(config.conv_stack):
        pad = (spec.kernel - 1) * spec.dilation
        y = ad.elu(
            ad.conv1d(
                y, p[f"conv{i}/kernel"], bias=p[f"conv{i}/bias"],
                pad_left=pad, dilation=spec.dilation,
            ),
            alpha=config.elu_alpha,
        )
    seq = ad.transpose(y, (0, 2, 1))  # (B, T, F)
    seq = ad.bilstm(
        seq,
        (p["bilstm/fwd/wx"], p["bilstm/fwd/wh"], p["bilstm/fwd/bias"]),
        (p["bilstm/bwd/wx"], p["bilstm/bwd/wh"], p["bilstm/bwd/bias"]),
    )
    final = ad.lstm(seq, p["lstm/wx"], p["lstm/wh"], p["lstm/bias"], return_sequences=False)
    pred = ad.relu(final @ p["dense/kernel"] + p["dense/bias"])
    return pred, feature


def forward(state: ModelState, eeg: np.ndarray) -> np.ndarray:
    """Predict the 256-sample trajectory for a single (C, W) window."""
    pred, _ = forward_batch(state, np.asarray(eeg)[None])
    return pred.data[0]


def extract_feature(state: ModelState, eeg: np.ndarray) -> np.ndarray:
    """Spatial-filter tanh output for one window (the analysis feature)."""
    _, feature = forward_batch(state, np.asarray(eeg)[None])
    return feature.data[0]


def predict_batch(state: ModelState, eeg: np.ndarray):
    """Non-tape inference convenience: (predictions, features) arrays."""
    pred, feature = forward_batch(state, eeg)
    return pred.data, feature.data


# -- training --------------------------------------------------------------

def split_dataset(windows, train_fraction: float = 0.8):
    """Chronological train/validation split (no shuffling across the cut)."""
    windows = list(windows)
    if len(windows) < 5:
        raise InsufficientDataError(f"{len(windows)} windows is too few to split")
    check_chronological(windows)
    cut = int(np.floor(train_fraction * len(windows)))
    return windows[:cut], windows[cut:]


def validity_gate(pred, target, tau: float = 0.5, strict: bool = False) -> bool:
    """Pearson-correlation acceptance gate; undefined r counts as invalid."""
    try:
        r = pearson_r(pred, target)
    except UndefinedCorrelationError:
        return False
    return r > tau if strict else r >= tau


@dataclass(frozen=True)
class TrainHyper:
    epochs: int = 300
    patience: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    shuffle: bool = True


@dataclass
class TrainReport:
    history: list  # (epoch, train_mse, val_mse, val_r_mean)
    best_epoch: int
    best_val_mse: float
    stopping_reason: str
    val_r: list
    wall_clock_s: float

    def to_rows(self):
        return [(e, tr, va, r) for e, tr, va, r in self.history]


def _batch_arrays(windows):
    eeg = np.stack([w.eeg for w in windows])
    target = np.stack([w.target for w in windows])
    return eeg, target


def _val_metrics(state, val_eeg, val_target, batch_size):
    losses = []
    rs = []
    n = len(val_eeg)
    for i in range(0, n, batch_size):
        pred, _ = forward_batch(state, val_eeg[i : i + batch_size])
        diff = pred.data - val_target[i : i + batch_size]
        losses.append((diff**2).mean(axis=1))
        for j in range(len(diff)):
            p = pred.data[j]
            t = val_target[i + j]
            if p.std() == 0.0 or t.std() == 0.0:
                rs.append(np.nan)
            else:
                rs.append(float(np.corrcoef(p, t)[0, 1]))
    return float(np.concatenate(losses).mean()), rs


def train(
    state: ModelState, train_windows, val_windows, hyper: TrainHyper = TrainHyper()
) -> TrainReport:
    """Minimize window MSE with Adam, early stopping on validation MSE.

    Deterministic under a fixed config seed: batch order is drawn from a
    seeded RNG. Restores the best-epoch weights before returning.
    """
    if not train_windows or not val_windows:
        raise InsufficientDataError("train and validation splits must be non-empty")
    train_eeg, train_target = _batch_arrays(train_windows)
    val_eeg, val_target = _batch_arrays(val_windows)
    rng = np.random.default_rng(np.random.SeedSequence([state.config.seed, 0x7261]))
    opt = AdamState(lr=hyper.learning_rate)
    best_val = np.inf
    best_epoch = -1
    best_blob = state.clone_params()
    history = []
    stopping_reason = "max_epochs"
    t_start = time.perf_counter()
    n = len(train_eeg)
    check_was = ad.CHECK_FINITE
    ad.CHECK_FINITE = False  # divergence is caught via the loss value
    try:
        for epoch in range(hyper.epochs):
            order = rng.permutation(n) if hyper.shuffle else np.arange(n)
            epoch_losses = []
            for i in range(0, n, hyper.batch_size):
                idx = order[i : i + hyper.batch_size]
                pred, _ = forward_batch(state, train_eeg[idx])
                loss = ad.mse_loss(pred, Tensor(train_target[idx]))
                if not np.isfinite(loss.data):
                    raise NumericError(
                        f"training diverged at epoch {epoch}; last finite epoch "
                        f"{epoch - 1} had val_mse {history[-1][2] if history else 'n/a'}"
                    )
                loss.backward()
                adam_step(state.params, opt)
                epoch_losses.append(float(loss.data) * len(idx))
            train_mse = sum(epoch_losses) / n
            val_mse, val_r = _val_metrics(state, val_eeg, val_target, hyper.batch_size)
            r_clean = [r for r in val_r if np.isfinite(r)]
            history.append((epoch, train_mse, val_mse, float(np.mean(r_clean)) if r_clean else np.nan))
            if val_mse < best_val:
                best_val = val_mse
                best_epoch = epoch
                best_blob = state.clone_params()
            elif epoch - best_epoch >= hyper.patience:
                stopping_reason = "early_stopping"
                break
    finally:
        ad.CHECK_FINITE = check_was
    state.load_param_data(best_blob)
    _, final_r = _val_metrics(state, val_eeg, val_target, hyper.batch_size)
    return TrainReport(
        history=history,
        best_epoch=best_epoch,
        best_val_mse=best_val,
        stopping_reason=stopping_reason,
        val_r=final_r,
        wall_clock_s=time.perf_counter() - t_start,
    )


# -- checkpoints -----------------------------------------------------------

def save_checkpoint(path, state: ModelState) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "config": {
            **{
                k: getattr(state.config, k)
                for k in (
                    "variant", "n_channels", "window_len", "temporal_kernel",
                    "bilstm_units", "lstm_units", "output_len", "seed",
                    "tied_wavelet_kernels", "per_channel_kernels", "elu_alpha",
                )
            },
            "kernel_table": state.config.kernel_table,
            "conv_stack": [
                [s.filters, s.kernel, s.dilation] for s in state.config.conv_stack
            ],
        },
        "meta": state.meta,
        "params": {
            name: {
                "shape": list(p.data.shape),
                "data": base64.b64encode(np.ascontiguousarray(p.data).tobytes()).decode(),
            }
            for name, p in sorted(state.params.items())
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> ModelState:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {doc.get('version')}")
    cfg = dict(doc["config"])
    cfg["conv_stack"] = tuple(ConvSpec(*row) for row in cfg["conv_stack"])
    config = ModelConfig(**cfg)
    state = build_model(config)
    for name, blob in doc["params"].items():
        if name not in state.params:
            raise ConfigurationError(f"checkpoint has unknown parameter block {name!r}")
        arr = np.frombuffer(base64.b64decode(blob["data"]), dtype=np.float64).reshape(
            blob["shape"]
        )
        state.params[name].data = arr.copy()
    state.meta = copy.deepcopy(doc.get("meta", {}))
    return state
