"""Layer-level forward/backward checks, adjointness and dropout statistics."""

import numpy as np
import pytest

from seisrestore import ParameterError
from seisrestore.layers import BatchNorm2d, Conv2d, Dropout, LeakyReLU, ReLU, TConv2d


def fd_check(layer, x, n_probe=40, eps=1e-6, mode="infer", rng_seed=0):
    """Max relative error between analytic and central-difference gradients."""
    rng = np.random.default_rng(rng_seed)
    y = layer.forward(x, mode, np.random.default_rng(5))
    gy = rng.normal(size=y.shape)
    layer.zero_grads()
    gx = layer.backward(gy)

    def loss(xa):
        out = layer.forward(xa, mode, np.random.default_rng(5))
        return float(np.sum(out * gy))

    worst = 0.0
    flat = x.ravel()
    gflat = gx.ravel()
    gmax = max(np.max(np.abs(gx)), 1e-12)
    idx = rng.choice(flat.size, size=min(n_probe, flat.size), replace=False)
    for i in idx:
        orig = flat[i]
        flat[i] = orig + eps
        lp = loss(x)
        flat[i] = orig - eps
        lm = loss(x)
        flat[i] = orig
        fd = (lp - lm) / (2 * eps)
        an = gflat[i]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-6 * gmax))
    # parameter gradients
    layer.forward(x, mode, np.random.default_rng(5))
    layer.zero_grads()
    layer.backward(gy)
    for name, p in layer.params.items():
        g = layer.grads[name].ravel()
        pf = p.ravel()
        for i in rng.choice(pf.size, size=min(10, pf.size), replace=False):
            orig = pf[i]
            pf[i] = orig + eps
            lp = loss(x)
            pf[i] = orig - eps
            lm = loss(x)
            pf[i] = orig
            fd = (lp - lm) / (2 * eps)
            worst = max(worst, abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-6 * gmax))
    return worst


class TestConv2d:
    def test_zero_kernel(self):
        conv = Conv2d(2, 3, np.random.default_rng(0), dtype=np.float64)
        conv.params["kernel"][...] = 0.0
        x = np.random.default_rng(1).normal(size=(2, 2, 8, 8))
        assert not conv.forward(x).any()

    def test_one_hot_kernel_strides_input(self):
        conv = Conv2d(1, 1, np.random.default_rng(0), dtype=np.float64)
        conv.params["kernel"][...] = 0.0
        conv.params["kernel"][0, 0, 1, 1] = 1.0  # center of the padded window
        x = np.arange(16.0).reshape(1, 1, 4, 4)
        y = conv.forward(x)
        assert np.array_equal(y[0, 0], x[0, 0, ::2, ::2])

    def test_output_shape(self):
        conv = Conv2d(1, 64, np.random.default_rng(0), dtype=np.float64)
        y = conv.forward(np.zeros((1, 1, 128, 128)))
        assert y.shape == (1, 64, 64, 64)

    def test_odd_side_rejected(self):
        conv = Conv2d(1, 1, np.random.default_rng(0), dtype=np.float64)
        with pytest.raises(ParameterError):
            conv.forward(np.zeros((1, 1, 5, 5)))

    def test_channel_mismatch(self):
        conv = Conv2d(2, 1, np.random.default_rng(0), dtype=np.float64)
        with pytest.raises(ParameterError):
            conv.forward(np.zeros((1, 3, 4, 4)))

    def test_gradients(self):
        conv = Conv2d(2, 3, np.random.default_rng(0), dtype=np.float64, init_std=0.3)
        x = np.random.default_rng(1).normal(size=(2, 2, 8, 8))
        assert fd_check(conv, x) < 1e-4


class TestTConv2d:
    def test_zero_kernel(self):
        t = TConv2d(2, 3, np.random.default_rng(0), dtype=np.float64)
        t.params["kernel"][...] = 0.0
        t.params["bias"][...] = 0.0
        assert not t.forward(np.random.default_rng(1).normal(size=(1, 2, 4, 4))).any()

    def test_doubles_side(self):
        t = TConv2d(512, 512, np.random.default_rng(0), dtype=np.float64)
        y = t.forward(np.zeros((1, 512, 1, 1)))
        assert y.shape == (1, 512, 2, 2)

    def test_adjoint_of_conv(self):
        # <conv(x), y> = <x, tconv(y)> when kernels match and biases are zero
        rng = np.random.default_rng(3)
        conv = Conv2d(2, 3, rng, dtype=np.float64, init_std=0.5)
        # conv kernel (out=3, in=2, 4, 4) doubles as the tconv kernel (in=3, out=2, 4, 4)
        t = TConv2d(3, 2, np.random.default_rng(0), dtype=np.float64)
        t.params["kernel"][...] = conv.params["kernel"]
        conv.params["bias"][...] = 0.0
        t.params["bias"][...] = 0.0
        x = rng.normal(size=(2, 2, 8, 8))
        y = rng.normal(size=(2, 3, 4, 4))
        lhs = float(np.sum(conv.forward(x) * y))
        rhs = float(np.sum(x * t.forward(y)))
        assert abs(lhs - rhs) / max(abs(lhs), 1.0) < 1e-10

    def test_gradients(self):
        t = TConv2d(3, 2, np.random.default_rng(0), dtype=np.float64, init_std=0.3)
        x = np.random.default_rng(1).normal(size=(2, 3, 4, 4))
        assert fd_check(t, x) < 1e-4


class TestBatchNorm2d:
    def test_train_statistics(self):
        bn = BatchNorm2d(3, dtype=np.float64)
        x = np.random.default_rng(0).normal(2.0, 3.0, size=(4, 3, 8, 8))
        y = bn.forward(x, mode="train")
        assert np.allclose(y.mean(axis=(0, 2, 3)), 0.0, atol=1e-6)
        assert np.allclose(y.std(axis=(0, 2, 3)), 1.0, atol=1e-3)

    def test_train_infer_agree_with_matching_stats(self):
        bn = BatchNorm2d(2, dtype=np.float64)
        x = np.random.default_rng(1).normal(size=(4, 2, 8, 8))
        y_train = bn.forward(x, mode="train")
        bn.running_mean = x.mean(axis=(0, 2, 3))
        bn.running_var = x.var(axis=(0, 2, 3))
        y_infer = bn.forward(x, mode="infer")
        assert np.allclose(y_train, y_infer, atol=1e-6)

    def test_constant_channel_collapses_to_shift(self):
        bn = BatchNorm2d(1, dtype=np.float64)
        bn.params["shift"][...] = 0.7
        x = np.full((2, 1, 4, 4), 5.0)
        y = bn.forward(x, mode="train")
        assert np.allclose(y, 0.7, atol=1e-6)

    def test_running_stats_update(self):
        bn = BatchNorm2d(1, dtype=np.float64, momentum=0.5)
        x = np.full((1, 1, 2, 2), 4.0)
        bn.forward(x, mode="train")
        assert bn.running_mean[0] == pytest.approx(2.0)  # 0.5*0 + 0.5*4

    def test_gradients_train_mode(self):
        bn = BatchNorm2d(3, dtype=np.float64)
        bn.params["scale"][...] = np.array([0.7, 1.3, 2.0])
        bn.params["shift"][...] = np.array([0.1, -0.2, 0.4])
        x = np.random.default_rng(2).normal(size=(3, 3, 6, 6))
        assert fd_check(bn, x, mode="train") < 1e-4


class TestActivations:
    def test_leaky_slope(self):
        lr = LeakyReLU(0.2)
        x = np.array([[[[-1.0, 2.0]]]])
        assert np.array_equal(lr.forward(x), [[[[-0.2, 2.0]]]])

    def test_relu(self):
        r = ReLU()
        x = np.array([[[[-1.0, 2.0]]]])
        assert np.array_equal(r.forward(x), [[[[0.0, 2.0]]]])

    def test_identity_on_positive(self):
        x = np.abs(np.random.default_rng(0).normal(size=(1, 1, 4, 4)))
        assert np.array_equal(LeakyReLU(0.2).forward(x), x)

    def test_backward(self):
        lr = LeakyReLU(0.2)
        x = np.array([[[[-3.0, 5.0]]]])
        lr.forward(x)
        g = lr.backward(np.array([[[[1.0, 1.0]]]]))
        assert np.array_equal(g, [[[[0.2, 1.0]]]])


class TestDropout:
    def test_infer_identity(self):
        d = Dropout(0.5)
        x = np.random.default_rng(0).normal(size=(2, 2, 4, 4))
        assert np.array_equal(d.forward(x, mode="infer"), x)

    def test_rate_zero_identity(self):
        d = Dropout(0.0)
        x = np.random.default_rng(0).normal(size=(2, 2, 4, 4))
        out = d.forward(x, mode="train", rng=np.random.default_rng(1))
        assert np.array_equal(out, x)

    def test_zero_fraction(self):
        d = Dropout(0.5)
        x = np.ones((1, 1, 1000, 1000))
        out = d.forward(x, mode="train", rng=np.random.default_rng(7))
        frac = np.mean(out == 0)
        assert frac == pytest.approx(0.5, abs=0.005)
        # inverted scaling: survivors are doubled
        assert np.allclose(out[out != 0], 2.0)

    def test_needs_rng_in_train(self):
        with pytest.raises(ParameterError):
            Dropout(0.5).forward(np.zeros((1, 1, 2, 2)), mode="train")

    def test_invalid_rate(self):
        with pytest.raises(ParameterError):
            Dropout(1.0)

    def test_backward_matches_mask(self):
        d = Dropout(0.5)
        x = np.ones((1, 1, 32, 32))
        out = d.forward(x, mode="train", rng=np.random.default_rng(3))
        g = d.backward(np.ones_like(x))
        assert np.array_equal(g, out)
