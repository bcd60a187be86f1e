import numpy as np
import pytest

from ocutime import autodiff as ad
from ocutime.autodiff import Tensor, grad_check
from ocutime.errors import EmptyInputError, NumericError, ShapeError


def _rng(seed=0):
    return np.random.default_rng(seed)

SEEDS = list(range(20))
TOL = 1e-4


class TestElementwise:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_arithmetic_chain(self, seed):
        rng = _rng(seed)
        a = rng.normal(size=(3, 4))
        b = rng.normal(size=(3, 4)) + 3.0  # keep divisor away from 0
        err = grad_check(lambda xs: ((xs[0] * xs[1] + xs[0] - xs[1]) / xs[1]).sum(), [a, b])
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS)
    def test_broadcasting(self, seed):
        rng = _rng(seed)
        a = rng.normal(size=(4, 1, 5))
        b = rng.normal(size=(3, 5))
        err = grad_check(lambda xs: (xs[0] * xs[1]).sum(), [a, b])
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS)
    def test_abs(self, seed):
        x = _rng(seed).normal(size=10) + 0.5  # stay off the kink
        err = grad_check(lambda xs: ad.tabs(xs[0]).sum(), [x])
        assert err < TOL


class TestMatmulShapes:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_matmul(self, seed):
        rng = _rng(seed)
        a = rng.normal(size=(3, 4))
        b = rng.normal(size=(4, 2))
        err = grad_check(lambda xs: (xs[0] @ xs[1]).sum(), [a, b])
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS[:5])
    def test_batched_matmul(self, seed):
        rng = _rng(seed)
        a = rng.normal(size=(2, 3, 4))
        b = rng.normal(size=(4, 5))
        err = grad_check(lambda xs: (xs[0] @ xs[1]).sum(), [a, b])
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS[:5])
    def test_reshape_transpose_concat_reverse_slice(self, seed):
        rng = _rng(seed)
        a = rng.normal(size=(2, 3, 4))
        b = rng.normal(size=(2, 3, 4))

        def f(xs):
            x = ad.transpose(xs[0], (0, 2, 1)).reshape((2, 12))
            y = ad.time_reverse(xs[1], axis=-1).reshape((2, 12))
            z = ad.concat([x, y], axis=1)
            return (z[:, 3:20] * z[:, 3:20]).sum()

        assert grad_check(f, [a, b]) < TOL


class TestReductions:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_sum_mean_axes(self, seed):
        rng = _rng(seed)
        x = rng.normal(size=(3, 5))

        def f(xs):
            return (xs[0].sum(axis=0) * xs[0].mean(axis=1).sum()).sum()

        assert grad_check(f, [x]) < TOL

    @pytest.mark.parametrize("seed", SEEDS[:10])
    def test_max_keepdims(self, seed):
        x = _rng(seed).normal(size=(4, 6))
        err = grad_check(lambda xs: (xs[0] / ad.tmax(ad.tabs(xs[0]), axis=-1, keepdims=True)).sum(), [x])
        assert err < TOL

    def test_max_splits_ties(self):
        x = Tensor(np.array([2.0, 2.0, 1.0]), requires_grad=True)
        ad.tmax(x, axis=0).backward()
        np.testing.assert_allclose(x.grad, [0.5, 0.5, 0.0])


class TestActivations:
    @pytest.mark.parametrize("seed", SEEDS)
    @pytest.mark.parametrize("op", ["tanh", "sigmoid", "relu", "elu"])
    def test_activation_grads(self, seed, op):
        x = _rng(seed).normal(size=(3, 7)) + 0.05  # off the relu/elu kink
        fn = getattr(ad, op)
        assert grad_check(lambda xs: fn(xs[0]).sum(), [x]) < TOL

    @pytest.mark.parametrize("seed", SEEDS[:10])
    def test_mse(self, seed):
        rng = _rng(seed)
        p = rng.normal(size=(4, 6))
        t = rng.normal(size=(4, 6))
        assert grad_check(lambda xs: ad.mse_loss(xs[0], xs[1]), [p, t]) < TOL


class TestConv1d:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_causal(self, seed):
        rng = _rng(seed)
        x = rng.normal(size=(2, 3, 12))
        w = rng.normal(size=(4, 3, 5))
        b = rng.normal(size=4)
        err = grad_check(
            lambda xs: ad.conv1d(xs[0], xs[1], bias=xs[2], pad_left=4).sum(), [x, w, b]
        )
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS[:10])
    def test_dilated(self, seed):
        rng = _rng(seed)
        x = rng.normal(size=(2, 2, 16))
        w = rng.normal(size=(3, 2, 3))
        err = grad_check(
            lambda xs: ad.conv1d(xs[0], xs[1], pad_left=4, dilation=2).sum(), [x, w]
        )
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS[:10])
    def test_grouped(self, seed):
        rng = _rng(seed)
        x = rng.normal(size=(2, 4, 10))
        w = rng.normal(size=(4, 1, 3))
        err = grad_check(
            lambda xs: ad.conv1d(xs[0], xs[1], pad_left=1, pad_right=1, groups=4).sum(),
            [x, w],
        )
        assert err < TOL

    def test_causality(self):
        # output at time t must not depend on inputs after t
        rng = _rng(0)
        x = rng.normal(size=(1, 1, 20))
        w = rng.normal(size=(1, 1, 5))
        base = ad.conv1d(Tensor(x), Tensor(w), pad_left=4).data
        x2 = x.copy()
        x2[0, 0, 10:] += 100.0
        pert = ad.conv1d(Tensor(x2), Tensor(w), pad_left=4).data
        np.testing.assert_array_equal(base[0, 0, :10], pert[0, 0, :10])

    def test_matches_numpy_correlate(self):
        rng = _rng(1)
        x = rng.normal(size=16)
        w = rng.normal(size=5)
        out = ad.conv1d(Tensor(x[None, None]), Tensor(w[None, None])).data[0, 0]
        ref = np.correlate(x, w, mode="valid")
        np.testing.assert_allclose(out, ref, atol=1e-12)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            ad.conv1d(Tensor(np.zeros((1, 3, 8))), Tensor(np.zeros((2, 2, 3))))


class TestConv2d:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_valid(self, seed):
        rng = _rng(seed)
        x = rng.normal(size=(2, 2, 5, 7))
        w = rng.normal(size=(3, 2, 3, 3))
        b = rng.normal(size=3)
        err = grad_check(lambda xs: ad.conv2d(xs[0], xs[1], bias=xs[2]).sum(), [x, w, b])
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS[:10])
    def test_same(self, seed):
        rng = _rng(seed)
        x = rng.normal(size=(1, 1, 4, 9))
        w = rng.normal(size=(2, 1, 1, 5))
        err = grad_check(lambda xs: ad.conv2d(xs[0], xs[1], padding="same").sum(), [x, w])
        assert err < TOL

    def test_same_requires_odd_kernel(self):
        with pytest.raises(ShapeError):
            ad.conv2d(Tensor(np.zeros((1, 1, 4, 8))), Tensor(np.zeros((1, 1, 2, 2))), padding="same")


class TestLstm:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_sequences(self, seed):
        rng = _rng(seed)
        f, h = 3, 4
        x = rng.normal(size=(2, 5, f))
        wx = rng.normal(size=(f, 4 * h)) * 0.5
        wh = rng.normal(size=(h, 4 * h)) * 0.5
        b = rng.normal(size=4 * h) * 0.5
        err = grad_check(lambda xs: ad.lstm(xs[0], xs[1], xs[2], xs[3]).sum(), [x, wx, wh, b])
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS)
    def test_final_state(self, seed):
        rng = _rng(seed)
        f, h = 2, 3
        x = rng.normal(size=(2, 6, f))
        wx = rng.normal(size=(f, 4 * h)) * 0.5
        wh = rng.normal(size=(h, 4 * h)) * 0.5
        b = rng.normal(size=4 * h) * 0.5
        err = grad_check(
            lambda xs: ad.lstm(xs[0], xs[1], xs[2], xs[3], return_sequences=False).sum(),
            [x, wx, wh, b],
        )
        assert err < TOL

    @pytest.mark.parametrize("seed", SEEDS[:10])
    def test_bilstm(self, seed):
        rng = _rng(seed)
        f, h = 2, 3

        def mk():
            return (
                Tensor(rng.normal(size=(f, 4 * h)) * 0.5),
                Tensor(rng.normal(size=(h, 4 * h)) * 0.5),
                Tensor(rng.normal(size=4 * h) * 0.5),
            )

        pf, pb = mk(), mk()
        x = rng.normal(size=(2, 4, f))

        def f_loss(xs):
            return ad.bilstm(xs[0], pf, pb).sum()

        assert grad_check(f_loss, [x]) < TOL

    def test_empty_sequence(self):
        with pytest.raises(EmptyInputError):
            ad.lstm(
                Tensor(np.zeros((1, 0, 2))), Tensor(np.zeros((2, 12))),
                Tensor(np.zeros((3, 12))), Tensor(np.zeros(12)),
            )


class TestEngine:
    def test_backward_requires_scalar(self):
        x = Tensor(np.zeros(3), requires_grad=True)
        with pytest.raises(ShapeError):
            (x * 2.0).backward()

    def test_diamond_graph_accumulates_once(self):
        x = Tensor(np.array([2.0]), requires_grad=True)
        y = x * x + x * x  # same node reused twice
        y.sum().backward()
        np.testing.assert_allclose(x.grad, [8.0])

    def test_no_grad_leaves_untracked(self):
        x = Tensor(np.ones(3))
        y = x * 2.0
        assert not y.requires_grad
        assert y._backward is None

    def test_finite_check(self):
        assert ad.CHECK_FINITE
        x = Tensor(np.array([1.0, 0.0]))
        with pytest.raises(NumericError):
            ad.div(x, x)

    def test_adam_reduces_quadratic(self):
        p = {"w": Tensor(np.array([5.0, -3.0]), requires_grad=True)}
        opt = ad.AdamState(lr=0.1)
        for _ in range(200):
            loss = (p["w"] * p["w"]).sum()
            loss.backward()
            ad.adam_step(p, opt)
        assert np.abs(p["w"].data).max() < 1e-2
