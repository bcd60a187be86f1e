"""Minimal reverse-mode differentiation engine (float64, numpy-backed).

Provides exactly the primitives the trajectory-prediction model needs:
elementwise arithmetic, matmul, 1-D/2-D convolutions, a fused LSTM with
manual backpropagation through time, reductions, activations, and an
Adam optimizer. Gradients are verified against central finite
differences by ``grad_check``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, NumericError, ShapeError

# Set False to skip per-op finiteness checks (training hot path).
CHECK_FINITE = True


class Tensor:
    """A node on the tape: numpy data plus an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "name")

    def __init__(self, data, requires_grad=False, name=""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward = None
        self.op = "leaf"
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op}, requires_grad={self.requires_grad})"

    # -- graph traversal ---------------------------------------------------
    def backward(self):
        if self.data.size != 1:
            raise ShapeError("backward() requires a scalar loss")
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        for node in topo:
            if node.requires_grad:
                node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()
        # Free the tape eagerly: the closures and parent links form
        # reference cycles that would otherwise pin every intermediate
        # array until a gen-2 garbage collection.
        for node in topo:
            if node._parents:
                node._backward = None
                node._parents = ()

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, op) -> Tensor:
    if CHECK_FINITE and not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values produced by op '{op}'")
    out = Tensor(data)
    out.op = op
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
    return out


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to the original shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- elementwise arithmetic ------------------------------------------------

def add(a, b):
    a, b = _lift(a), _lift(b)
    out = _make(a.data + b.data, (a, b), "add")

    def _bw():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.data.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad, b.data.shape)

    out._backward = _bw if out.requires_grad else None
    return out


def sub(a, b):
    a, b = _lift(a), _lift(b)
    out = _make(a.data - b.data, (a, b), "sub")

    def _bw():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad, a.data.shape)
        if b.requires_grad:
            b.grad -= _unbroadcast(out.grad, b.data.shape)

    out._backward = _bw if out.requires_grad else None
    return out


def mul(a, b):
    a, b = _lift(a), _lift(b)
    out = _make(a.data * b.data, (a, b), "mul")

    def _bw():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad * b.data, a.data.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(out.grad * a.data, b.data.shape)

    out._backward = _bw if out.requires_grad else None
    return out


def div(a, b):
    a, b = _lift(a), _lift(b)
    out = _make(a.data / b.data, (a, b), "div")

    def _bw():
        if a.requires_grad:
            a.grad += _unbroadcast(out.grad / b.data, a.data.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(-out.grad * a.data / (b.data**2), b.data.shape)

    out._backward = _bw if out.requires_grad else None
    return out


def tabs(a):
    a = _lift(a)
    out = _make(np.abs(a.data), (a,), "abs")

    def _bw():
        if a.requires_grad:
            a.grad += out.grad * np.sign(a.data)

    out._backward = _bw if out.requires_grad else None
    return out


# -- matmul ----------------------------------------------------------------

def matmul(a, b):
    a, b = _lift(a), _lift(b)
    out = _make(a.data @ b.data, (a, b), "matmul")

    def _bw():
        g = out.grad
        if a.requires_grad:
            if b.data.ndim == 1:
                a.grad += _unbroadcast(np.multiply.outer(g, b.data), a.data.shape)
            else:
                a.grad += _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape)
        if b.requires_grad:
            if a.data.ndim == 1:
                b.grad += _unbroadcast(np.multiply.outer(a.data, g), b.data.shape)
            else:
                b.grad += _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape)

    out._backward = _bw if out.requires_grad else None
    return out


# -- shape ops -------------------------------------------------------------

def reshape(a, shape):
    a = _lift(a)
    out = _make(a.data.reshape(shape), (a,), "reshape")

    def _bw():
        if a.requires_grad:
            a.grad += out.grad.reshape(a.data.shape)

    out._backward = _bw if out.requires_grad else None
    return out


def getitem(a, idx):
    a = _lift(a)
    out = _make(a.data[idx], (a,), "slice")

    def _bw():
        if a.requires_grad:
            np.add.at(a.grad, idx, out.grad)

    out._backward = _bw if out.requires_grad else None
    return out


def transpose(a, axes):
    a = _lift(a)
    out = _make(np.transpose(a.data, axes), (a,), "transpose")

    def _bw():
        if a.requires_grad:
            a.grad += np.transpose(out.grad, np.argsort(axes))

    out._backward = _bw if out.requires_grad else None
    return out


def concat(tensors, axis=0):
    tensors = [_lift(t) for t in tensors]
    out = _make(np.concatenate([t.data for t in tensors], axis=axis), tensors, "concat")

    def _bw():
        sizes = [t.data.shape[axis] for t in tensors]
        splits = np.cumsum(sizes)[:-1]
        pieces = np.split(out.grad, splits, axis=axis)
        for t, piece in zip(tensors, pieces):
            if t.requires_grad:
                t.grad += piece

    out._backward = _bw if out.requires_grad else None
    return out


def time_reverse(a, axis=-1):
    a = _lift(a)
    out = _make(np.flip(a.data, axis=axis), (a,), "time_reverse")

    def _bw():
        if a.requires_grad:
            a.grad += np.flip(out.grad, axis=axis)

    out._backward = _bw if out.requires_grad else None
    return out


# -- reductions ------------------------------------------------------------

def tsum(a, axis=None, keepdims=False):
    a = _lift(a)
    out = _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum")

    def _bw():
        if a.requires_grad:
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a.grad += np.broadcast_to(g, a.data.shape)

    out._backward = _bw if out.requires_grad else None
    return out


def tmean(a, axis=None, keepdims=False):
    a = _lift(a)
    out = _make(a.data.mean(axis=axis, keepdims=keepdims), (a,), "mean")

    def _bw():
        if a.requires_grad:
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            count = a.data.size / out.data.size
            a.grad += np.broadcast_to(g, a.data.shape) / count

    out._backward = _bw if out.requires_grad else None
    return out


def tmax(a, axis=None, keepdims=False):
    """Max reduction; the gradient flows to the (first) argmax positions."""
    a = _lift(a)
    val = a.data.max(axis=axis, keepdims=True)
    out_data = val if keepdims else np.squeeze(val, axis=axis) if axis is not None else val.reshape(())
    out = _make(out_data, (a,), "max")

    def _bw():
        if a.requires_grad:
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            mask = a.data == val
            # split the gradient across ties so the op stays a subgradient
            counts = mask.sum(axis=axis, keepdims=True) if axis is not None else mask.sum()
            a.grad += mask * np.broadcast_to(g, a.data.shape) / counts

    out._backward = _bw if out.requires_grad else None
    return out


# -- activations -----------------------------------------------------------

def tanh(a):
    a = _lift(a)
    y = np.tanh(a.data)
    out = _make(y, (a,), "tanh")

    def _bw():
        if a.requires_grad:
            a.grad += out.grad * (1.0 - y**2)

    out._backward = _bw if out.requires_grad else None
    return out


def sigmoid(a):
    a = _lift(a)
    y = 1.0 / (1.0 + np.exp(-a.data))
    out = _make(y, (a,), "sigmoid")

    def _bw():
        if a.requires_grad:
            a.grad += out.grad * y * (1.0 - y)

    out._backward = _bw if out.requires_grad else None
    return out


def relu(a):
    a = _lift(a)
    out = _make(np.maximum(a.data, 0.0), (a,), "relu")

    def _bw():
        if a.requires_grad:
            # subgradient 0 at the kink (x == 0)
            a.grad += out.grad * (a.data > 0.0)

    out._backward = _bw if out.requires_grad else None
    return out


def elu(a, alpha=1.0):
    a = _lift(a)
    neg = alpha * (np.exp(np.minimum(a.data, 0.0)) - 1.0)
    y = np.where(a.data > 0.0, a.data, neg)
    out = _make(y, (a,), "elu")

    def _bw():
        if a.requires_grad:
            a.grad += out.grad * np.where(a.data > 0.0, 1.0, neg + alpha)

    out._backward = _bw if out.requires_grad else None
    return out


def mse_loss(pred, target):
    pred, target = _lift(pred), _lift(target)
    diff = pred.data - target.data
    out = _make(np.mean(diff**2), (pred, target), "mse_loss")

    def _bw():
        scale = 2.0 / diff.size
        if pred.requires_grad:
            pred.grad += out.grad * scale * diff
        if target.requires_grad:
            target.grad -= out.grad * scale * diff

    out._backward = _bw if out.requires_grad else None
    return out


# -- convolutions ----------------------------------------------------------

def conv1d(x, w, bias=None, pad_left=0, pad_right=0, dilation=1, groups=1):
    """1-D convolution (cross-correlation form).

    x: (B, C_in, T); w: (C_out, C_in/groups, K). Causal padding is
    pad_left=(K-1)*dilation; 'same' for odd K is (K-1)//2 on each side.
    Computed as a per-tap accumulation so the peak extra memory stays at
    one (B, C, T) slab (no im2col materialization).
    """
    x, w = _lift(x), _lift(w)
    b_n, c_in, _ = x.data.shape
    c_out, c_g, k = w.data.shape
    if c_in != c_g * groups or c_out % groups != 0:
        raise ShapeError(
            f"conv1d channel mismatch: x has {c_in}, w is {w.data.shape}, groups={groups}"
        )
    o_g = c_out // groups
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad_left, pad_right)))
    t_out = xp.shape[2] - (k - 1) * dilation
    # A single GEMM over a sliding-window view is fastest but copies a
    # (B, C, K, T) buffer; above this size fall back to one GEMM per tap.
    tap_bytes = c_g * k * b_n * t_out * 8
    if groups == 1 and tap_bytes <= 100_000_000:
        sw = np.lib.stride_tricks.sliding_window_view(xp, t_out, axis=2)
        sw = sw[:, :, ::dilation]  # (B, C, K, T) view, no copy
        yt = np.tensordot(w.data, sw, axes=([1, 2], [1, 2]))
        y = np.ascontiguousarray(yt.transpose(1, 0, 2))
    elif groups == 1:
        yt = np.zeros((c_out, b_n, t_out))
        for kk in range(k):
            xs = xp[:, :, kk * dilation : kk * dilation + t_out]
            yt += np.tensordot(w.data[:, :, kk], xs, axes=(1, 1))
        y = np.ascontiguousarray(yt.transpose(1, 0, 2))
    else:
        xg = xp.reshape(b_n, groups, c_g, xp.shape[2])
        wg = w.data.reshape(groups, o_g, c_g, k)
        y = np.zeros((b_n, groups, o_g, t_out))
        for kk in range(k):
            xs = xg[:, :, :, kk * dilation : kk * dilation + t_out]
            # (1, g, o, c) @ (b, g, c, t) -> (b, g, o, t), BLAS per (b, g)
            y += np.matmul(wg[None, :, :, :, kk], xs)
        y = y.reshape(b_n, c_out, t_out)
    parents = [x, w]
    if bias is not None:
        bias = _lift(bias)
        y = y + bias.data[None, :, None]
        parents.append(bias)
    out = _make(y, parents, "conv1d")

    def _bw():
        if bias is not None and bias.requires_grad:
            bias.grad += out.grad.sum(axis=(0, 2))
        if groups == 1:
            gf = out.grad
            small = tap_bytes <= 100_000_000
            if w.requires_grad:
                if small:
                    sw = np.lib.stride_tricks.sliding_window_view(xp, t_out, axis=2)
                    sw = sw[:, :, ::dilation]
                    w.grad += np.tensordot(gf, sw, axes=([0, 2], [0, 3]))
                else:
                    gw = np.empty((c_out, c_in, k))
                    for kk in range(k):
                        xs = xp[:, :, kk * dilation : kk * dilation + t_out]
                        gw[:, :, kk] = np.tensordot(gf, xs, axes=([0, 2], [0, 2]))
                    w.grad += gw
            if x.requires_grad:
                gxt = np.zeros((c_in, b_n, xp.shape[2]))
                if small:
                    s = np.tensordot(w.data, gf, axes=(0, 1))  # (C, K, B, T)
                    for kk in range(k):
                        gxt[:, :, kk * dilation : kk * dilation + t_out] += s[:, kk]
                else:
                    for kk in range(k):
                        gxt[:, :, kk * dilation : kk * dilation + t_out] += np.tensordot(
                            w.data[:, :, kk], gf, axes=(0, 1)
                        )
                t = x.data.shape[2]
                x.grad += gxt.transpose(1, 0, 2)[:, :, pad_left : pad_left + t]
            return
        g = out.grad.reshape(b_n, groups, o_g, t_out)
        xg = xp.reshape(b_n, groups, c_g, xp.shape[2])
        wg = w.data.reshape(groups, o_g, c_g, k)
        if w.requires_grad:
            gw = np.empty((groups, o_g, c_g, k))
            for kk in range(k):
                xs = xg[:, :, :, kk * dilation : kk * dilation + t_out]
                gw[:, :, :, kk] = np.matmul(g, xs.swapaxes(-1, -2)).sum(axis=0)
            w.grad += gw.reshape(c_out, c_g, k)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            gxg = gxp.reshape(b_n, groups, c_g, xp.shape[2])
            wgt = np.ascontiguousarray(wg.transpose(0, 2, 1, 3))  # (g, c, o, k)
            for kk in range(k):
                gxg[:, :, :, kk * dilation : kk * dilation + t_out] += np.matmul(
                    wgt[None, :, :, :, kk], g
                )
            t = x.data.shape[2]
            x.grad += gxp[:, :, pad_left : pad_left + t]

    out._backward = _bw if out.requires_grad else None
    return out


def conv2d(x, w, bias=None, padding="valid"):
    """2-D convolution. x: (B, C_in, H, W); w: (C_out, C_in, kh, kw)."""
    x, w = _lift(x), _lift(w)
    b_n, c_in, h, wd = x.data.shape
    c_out, c_w, kh, kw = w.data.shape
    if c_in != c_w:
        raise ShapeError(f"conv2d channel mismatch: x has {c_in}, w has {c_w}")
    if padding == "same":
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeError("'same' conv2d requires odd kernel sizes")
        ph, pw = (kh - 1) // 2, (kw - 1) // 2
    elif padding == "valid":
        ph = pw = 0
    else:
        raise ShapeError(f"unknown padding {padding!r}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    h_out, w_out = xp.shape[2] - kh + 1, xp.shape[3] - kw + 1
    # per-tap accumulation: no im2col buffer is ever materialized
    hw = h_out * w_out
    y = np.zeros((b_n, c_out, hw))
    for i in range(kh):
        for j in range(kw):
            xs = xp[:, :, i : i + h_out, j : j + w_out].reshape(b_n, c_in, hw)
            y += np.matmul(w.data[None, :, :, i, j], xs)
    y = y.reshape(b_n, c_out, h_out, w_out)
    parents = [x, w]
    if bias is not None:
        bias = _lift(bias)
        y = y + bias.data[None, :, None, None]
        parents.append(bias)
    out = _make(y, parents, "conv2d")

    def _bw():
        g = out.grad
        if bias is not None and bias.requires_grad:
            bias.grad += g.sum(axis=(0, 2, 3))
        gf = g.reshape(b_n, c_out, h_out * w_out)
        if w.requires_grad:
            gw = np.empty_like(w.data)
            for i in range(kh):
                for j in range(kw):
                    xs = xp[:, :, i : i + h_out, j : j + w_out].reshape(
                        b_n, c_in, h_out * w_out
                    )
                    gw[:, :, i, j] = np.matmul(gf, xs.swapaxes(-1, -2)).sum(axis=0)
            w.grad += gw
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gk = np.matmul(w.data[None, :, :, i, j].swapaxes(-1, -2), gf)
                    gxp[:, :, i : i + h_out, j : j + w_out] += gk.reshape(
                        b_n, c_in, h_out, w_out
                    )
            x.grad += gxp[:, :, ph : ph + h, pw : pw + wd]

    out._backward = _bw if out.requires_grad else None
    return out


# -- fused LSTM with manual BPTT ------------------------------------------

def lstm(x, wx, wh, b, return_sequences=True):
    """Single-direction LSTM over (B, T, F) input.

    Gate layout along the 4H axis is [input, forget, cell, output].
    Returns (B, T, H) when return_sequences else the final state (B, H).
    """
    x, wx, wh, b = _lift(x), _lift(wx), _lift(wh), _lift(b)
    b_n, t_n, f_n = x.data.shape
    if t_n == 0:
        raise EmptyInputError("lstm received a zero-length sequence")
    h_n = wh.data.shape[0]
    if wx.data.shape != (f_n, 4 * h_n) or wh.data.shape != (h_n, 4 * h_n) or b.data.shape != (4 * h_n,):
        raise ShapeError(
            f"lstm weight shapes {wx.data.shape}/{wh.data.shape}/{b.data.shape} "
            f"inconsistent with input feature dim {f_n}"
        )
    hs = np.zeros((t_n + 1, b_n, h_n))
    cs = np.zeros((t_n + 1, b_n, h_n))
    gi = np.zeros((t_n, b_n, h_n))
    gf = np.zeros((t_n, b_n, h_n))
    gg = np.zeros((t_n, b_n, h_n))
    go = np.zeros((t_n, b_n, h_n))
    tc = np.zeros((t_n, b_n, h_n))
    xd = x.data
    for t in range(t_n):
        z = xd[:, t, :] @ wx.data + hs[t] @ wh.data + b.data
        gi[t] = 1.0 / (1.0 + np.exp(-z[:, :h_n]))
        gf[t] = 1.0 / (1.0 + np.exp(-z[:, h_n : 2 * h_n]))
        gg[t] = np.tanh(z[:, 2 * h_n : 3 * h_n])
        go[t] = 1.0 / (1.0 + np.exp(-z[:, 3 * h_n :]))
        cs[t + 1] = gf[t] * cs[t] + gi[t] * gg[t]
        tc[t] = np.tanh(cs[t + 1])
        hs[t + 1] = go[t] * tc[t]
    y = hs[1:].transpose(1, 0, 2) if return_sequences else hs[-1]
    out = _make(y, (x, wx, wh, b), "lstm")

    def _bw():
        if return_sequences:
            gy = out.grad.transpose(1, 0, 2)
        else:
            gy = np.zeros((t_n, b_n, h_n))
            gy[-1] = out.grad
        gwx = np.zeros_like(wx.data)
        gwh = np.zeros_like(wh.data)
        gb = np.zeros_like(b.data)
        gx = np.zeros_like(xd) if x.requires_grad else None
        dh_next = np.zeros((b_n, h_n))
        dc_next = np.zeros((b_n, h_n))
        for t in range(t_n - 1, -1, -1):
            dh = gy[t] + dh_next
            dc = dc_next + dh * go[t] * (1.0 - tc[t] ** 2)
            di = dc * gg[t] * gi[t] * (1.0 - gi[t])
            df = dc * cs[t] * gf[t] * (1.0 - gf[t])
            dg = dc * gi[t] * (1.0 - gg[t] ** 2)
            do = dh * tc[t] * go[t] * (1.0 - go[t])
            dz = np.concatenate([di, df, dg, do], axis=1)
            gwx += xd[:, t, :].T @ dz
            gwh += hs[t].T @ dz
            gb += dz.sum(axis=0)
            if gx is not None:
                gx[:, t, :] = dz @ wx.data.T
            dh_next = dz @ wh.data.T
            dc_next = dc * gf[t]
        if wx.requires_grad:
            wx.grad += gwx
        if wh.requires_grad:
            wh.grad += gwh
        if b.requires_grad:
            b.grad += gb
        if x.requires_grad:
            x.grad += gx

    out._backward = _bw if out.requires_grad else None
    return out


def bilstm(x, params_fwd, params_bwd):
    """Bidirectional LSTM (sequences): concat of forward and reversed-backward runs."""
    fwd = lstm(x, *params_fwd, return_sequences=True)
    bwd = lstm(time_reverse(x, axis=1), *params_bwd, return_sequences=True)
    return concat([fwd, time_reverse(bwd, axis=1)], axis=2)


# -- optimizer -------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, state: AdamState) -> None:
    """In-place Adam update over a name -> Tensor parameter dict."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


# -- initialization --------------------------------------------------------

def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# -- verification ----------------------------------------------------------

def grad_check(f, xs, h=1e-5, sample=None, rng=None):
    """Max relative error between tape gradients and central differences.

    f maps a list of Tensors to a scalar Tensor. Coordinates where the
    function sits exactly on a kink (relu at 0) should be avoided by the
    caller. ``sample`` limits the number of coordinates checked per
    input (random subset, seeded by ``rng``).
    """
    xs = [x if isinstance(x, Tensor) else Tensor(x) for x in xs]
    for x in xs:
        x.requires_grad = True
    loss = f(xs)
    loss.backward()
    analytic = [x.grad.copy() for x in xs]
    max_err = 0.0
    if rng is None:
        rng = np.random.default_rng(0)
    for x, grad in zip(xs, analytic):
        flat = x.data.reshape(-1)
        n = flat.size
        coords = np.arange(n)
        if sample is not None and n > sample:
            coords = rng.choice(n, size=sample, replace=False)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f(xs).data)
            flat[i] = orig - h
            fm = float(f(xs).data)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * h)
            a = grad.reshape(-1)[i]
            denom = max(abs(a), abs(numeric), 1e-8)
            max_err = max(max_err, abs(a - numeric) / denom)
    return max_err
