import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from incepdehaze import autodiff as ad
from incepdehaze import nn
from incepdehaze.diagnostics import OP_TOLERANCE, op_cases
from incepdehaze.exceptions import ContractError, ShapeError


def t64(x, grad=True):
    return ad.Tensor(x, requires_grad=grad, dtype=np.float64)


def grads_of(loss_fn, *tensors):
    with ad.Tape() as tape:
        loss = loss_fn()
    ad.backward(loss, tape)
    return [t.grad for t in tensors]


class TestConvSpec:
    def test_output_size(self):
        assert nn.ConvSpec(1, 1, 3, 3, 2, 1, 1).output_size(8, 8) == (4, 4)
        assert nn.ConvSpec(1, 1, 4, 4, 2, 1, 1).output_size(256, 256) == (128, 128)

    def test_too_small(self):
        with pytest.raises(ShapeError):
            nn.ConvSpec(1, 1, 5, 5, 1, 0, 0).output_size(3, 3)

    @pytest.mark.parametrize("kh,kw,pad", [(1, 1, (0, 0)), (1, 3, (0, 1)), (3, 1, (1, 0)), (3, 3, (1, 1))])
    def test_same_padding(self, kh, kw, pad):
        spec = nn.ConvSpec.same(4, 2, kh, kw)
        assert (spec.pad_h, spec.pad_w) == pad
        assert spec.output_size(6, 7) == (6, 7)


class TestConv2d:
    def test_full_sum(self):
        x = ad.ones([1, 1, 3, 3], dtype=np.float64)
        w = ad.ones([1, 1, 3, 3], dtype=np.float64)
        out = nn.conv2d(x, w, None, nn.ConvSpec(1, 1, 3, 3, 1, 0, 0))
        assert out.shape == (1, 1, 1, 1) and out.item() == 9

    def test_identity_kernel(self, rng):
        x = t64(rng.standard_normal((2, 1, 4, 5)))
        out = nn.conv2d(x, t64(np.ones((1, 1, 1, 1))), t64(np.zeros(1)), nn.ConvSpec(1, 1, 1, 1))
        np.testing.assert_array_equal(out.data, x.data)

    def test_padded_counts(self):
        x = ad.ones([1, 1, 4, 4], dtype=np.float64)
        w = ad.ones([1, 1, 3, 3], dtype=np.float64)
        out = nn.conv2d(x, w, None, nn.ConvSpec(1, 1, 3, 3, 1, 1, 1)).data[0, 0]
        expected = np.array([[4, 6, 6, 4], [6, 9, 9, 6], [6, 9, 9, 6], [4, 6, 6, 4]])
        np.testing.assert_array_equal(out, expected)

    def test_cross_correlation_not_convolution(self):
        x = t64(np.arange(9.0).reshape(1, 1, 3, 3))
        w = t64(np.array([[[[1.0, 0.0], [0.0, 0.0]]]]))
        out = nn.conv2d(x, w, None, nn.ConvSpec(1, 1, 2, 2, 1, 0, 0))
        np.testing.assert_array_equal(out.data[0, 0], [[0, 1], [3, 4]])

    def test_matches_direct_loops(self, rng):
        x = rng.standard_normal((2, 3, 6, 7))
        w = rng.standard_normal((4, 3, 3, 2))
        b = rng.standard_normal(4)
        spec = nn.ConvSpec(3, 4, 3, 2, 2, 1, 0)
        got = nn.conv2d(t64(x), t64(w), t64(b), spec).data
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (0, 0)))
        oh, ow = spec.output_size(6, 7)
        ref = np.zeros((2, 4, oh, ow))
        for n in range(2):
            for o in range(4):
                for i in range(oh):
                    for j in range(ow):
                        ref[n, o, i, j] = np.sum(xp[n, :, 2 * i : 2 * i + 3, 2 * j : 2 * j + 2] * w[o]) + b[o]
        np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            nn.conv2d(ad.zeros([1, 2, 4, 4]), ad.zeros([1, 3, 3, 3]))


class TestConvTranspose:
    def test_tile_placement(self):
        x = t64(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
        w = t64(np.ones((1, 1, 2, 2)))
        out = nn.conv_transpose2d(x, w, None, nn.ConvSpec(1, 1, 2, 2, 2, 0, 0)).data[0, 0]
        np.testing.assert_array_equal(out, np.kron([[1, 2], [3, 4]], np.ones((2, 2))))

    def test_identity(self, rng):
        x = t64(rng.standard_normal((1, 1, 3, 3)))
        out = nn.conv_transpose2d(x, t64(np.ones((1, 1, 1, 1))), None, nn.ConvSpec(1, 1, 1, 1))
        np.testing.assert_array_equal(out.data, x.data)

    def test_output_size(self):
        spec = nn.ConvSpec(1, 1, 4, 4, 2, 1, 1)
        assert spec.transposed_output_size(5, 3) == (10, 6)

    @pytest.mark.parametrize(
        "spec", [nn.ConvSpec(3, 2, 3, 3, 1, 1, 1), nn.ConvSpec(3, 2, 4, 4, 2, 1, 1), nn.ConvSpec(3, 2, 2, 2, 2, 0, 0)]
    )
    def test_adjoint(self, rng, spec):
        x = rng.standard_normal((2, 3, 8, 8))
        w = t64(rng.standard_normal((2, 3, spec.kernel_h, spec.kernel_w)))
        y = nn.conv2d(t64(x), w, None, spec)
        z = rng.standard_normal(y.shape)
        # conv2d weight layout [Cout, Cin, kh, kw] is read as [Cin', Cout'] by the transpose
        back = nn.conv_transpose2d(t64(z), w, None, nn.ConvSpec(2, 3, spec.kernel_h, spec.kernel_w, spec.stride, spec.pad_h, spec.pad_w))
        lhs, rhs = np.sum(y.data * z), np.sum(x * back.data[:, :, :8, :8])
        assert back.shape[2:] in [(8, 8), (9, 9)]
        assert abs(lhs - rhs) <= 1e-6 * max(abs(lhs), 1.0)


class TestMaxPool:
    def test_window_max(self):
        assert nn.maxpool2d(t64([[[[1.0, 2.0], [3.0, 4.0]]]])).item() == 4

    def test_constant(self):
        out = nn.maxpool2d(t64(np.full((1, 2, 4, 4), 2.5)))
        assert out.shape == (1, 2, 2, 2) and np.all(out.data == 2.5)

    def test_argmax_routing(self):
        x = t64([[[[1.0, 2.0], [3.0, 4.0]]]])
        (g,) = grads_of(lambda: ad.reduce_sum(nn.maxpool2d(x)), x)
        np.testing.assert_array_equal(g[0, 0], [[0, 0], [0, 1]])

    def test_tie_goes_to_first(self):
        x = t64(np.ones((1, 1, 2, 2)))
        (g,) = grads_of(lambda: ad.reduce_sum(nn.maxpool2d(x)), x)
        np.testing.assert_array_equal(g[0, 0], [[1, 0], [0, 0]])

    def test_window_too_large(self):
        with pytest.raises(ShapeError):
            nn.maxpool2d(ad.zeros([1, 1, 1, 1]))


class TestBatchNorm:
    def test_train_statistics(self, rng):
        x = t64(3.0 + 2.0 * rng.standard_normal((4, 3, 5, 5)))
        state = nn.BatchNormState.create(3, dtype=np.float64)
        out = nn.batchnorm2d(x, state).data
        assert np.all(np.abs(out.mean(axis=(0, 2, 3))) < 1e-5)
        assert np.all(np.abs(out.var(axis=(0, 2, 3)) - 1) < 1e-4)

    def test_running_update(self, rng):
        x = rng.standard_normal((2, 2, 3, 3)) + 1.0
        state = nn.BatchNormState.create(2, dtype=np.float64)
        nn.batchnorm2d(t64(x), state)
        np.testing.assert_allclose(state.running_mean, 0.1 * x.mean(axis=(0, 2, 3)))
        np.testing.assert_allclose(state.running_var, 0.9 + 0.1 * x.var(axis=(0, 2, 3), ddof=1))

    def test_constant_channel(self):
        state = nn.BatchNormState.create(1, dtype=np.float64)
        state.beta.data[:] = 0.7
        out = nn.batchnorm2d(t64(np.full((2, 1, 3, 3), 4.0)), state)
        np.testing.assert_allclose(out.data, 0.7)

    def test_eval_identity(self, rng):
        x = rng.standard_normal((2, 2, 3, 3))
        state = nn.BatchNormState.create(2, dtype=np.float64, mode="eval")
        out = nn.batchnorm2d(t64(x), state)
        np.testing.assert_allclose(out.data, x / np.sqrt(1 + 1e-5), rtol=1e-12)
        np.testing.assert_array_equal(state.running_mean, 0)

    def test_single_value_train(self):
        with pytest.raises(ContractError):
            nn.batchnorm2d(ad.zeros([1, 2, 1, 1]), nn.BatchNormState.create(2))


class TestActivations:
    def test_relu(self):
        assert nn.relu(t64([-1.0, 2.0])).data.tolist() == [0, 2]
        assert nn.activation(t64([-1.0, 2.0]), "relu").data.tolist() == [0, 2]

    def test_sigmoid(self):
        assert nn.sigmoid(t64([0.0])).item() == 0.5
        big = nn.sigmoid(t64([-1000.0, 1000.0])).data
        assert np.all(np.isfinite(big)) and big[0] == 0 and big[1] == 1

    def test_leaky(self):
        np.testing.assert_allclose(nn.leaky_relu(t64([-2.0, 3.0]), 0.2).data, [-0.4, 3.0])

    @pytest.mark.parametrize("slope", [0.0, 1.0, -0.1])
    def test_bad_slope(self, slope):
        with pytest.raises(ValueError):
            nn.leaky_relu(t64([1.0]), slope)

    def test_relu_kink_subgradient(self):
        x = t64([0.0, 1.0])
        (g,) = grads_of(lambda: ad.reduce_sum(nn.relu(x)), x)
        assert g.tolist() == [0.0, 1.0]


class TestConcat:
    def test_order(self):
        a = t64(np.full((1, 1, 2, 2), 1.0))
        b = t64(np.stack([np.full((2, 2), 2.0), np.full((2, 2), 3.0)])[None])
        out = nn.concat_channels([a, b]).data
        assert out.shape == (1, 3, 2, 2)
        assert out[0, :, 0, 0].tolist() == [1, 2, 3]

    def test_single(self, rng):
        a = t64(rng.standard_normal((2, 3, 2, 2)))
        np.testing.assert_array_equal(nn.concat_channels([a]).data, a.data)

    def test_backward_split(self, rng):
        a, b = t64(rng.standard_normal((1, 1, 2, 2))), t64(rng.standard_normal((1, 2, 2, 2)))
        ga, gb = grads_of(lambda: ad.reduce_sum(nn.concat_channels([a, b])), a, b)
        assert np.all(ga == 1) and np.all(gb == 1)

    def test_spatial_mismatch(self):
        with pytest.raises(ShapeError):
            nn.concat_channels([ad.zeros([1, 1, 2, 2]), ad.zeros([1, 1, 3, 2])])


class TestLosses:
    def test_l1(self):
        p = t64([2.0, 1.0])
        assert nn.l1_loss(p, t64([2.0, 1.0])).item() == 0
        target = t64([1.0, 3.0], grad=False)
        assert nn.l1_loss(p, target).item() == 1.5
        (g,) = grads_of(lambda: nn.l1_loss(p, target), p)
        assert g.tolist() == [0.5, -0.5]

    def test_l1_equality_subgradient(self):
        p = t64([1.0, 2.0])
        (g,) = grads_of(lambda: nn.l1_loss(p, t64([1.0, 0.0], False)), p)
        assert g.tolist() == [0.0, 0.5]

    def test_l1_shape(self):
        with pytest.raises(ShapeError):
            nn.l1_loss(t64([1.0]), t64([1.0, 2.0]))

    def test_bce_values(self):
        assert abs(nn.bce_with_logits(t64([0.0]), np.ones(1)).item() - math.log(2)) < 1e-12
        assert nn.bce_with_logits(t64([30.0]), np.ones(1)).item() < 1e-12
        assert abs(nn.bce_with_logits(t64([0.0, 0.0]), np.array([1.0, 0.0])).item() - math.log(2)) < 1e-12

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.data())
    def test_bce_matches_naive(self, logits, data):
        y = np.array(data.draw(st.lists(st.sampled_from([0.0, 1.0]), min_size=len(logits), max_size=len(logits))))
        z = np.array(logits)
        s = 1 / (1 + np.exp(-z))
        naive = -np.mean(y * np.log(s) + (1 - y) * np.log(1 - s))
        assert abs(nn.bce_with_logits(t64(z), y).item() - naive) < 1e-6

    def test_bce_extreme_logits(self):
        z = t64([1000.0, -1000.0, 1000.0, -1000.0])
        y = np.array([1.0, 0.0, 0.0, 1.0])
        loss = nn.bce_with_logits(z, y)
        (g,) = grads_of(lambda: nn.bce_with_logits(z, y), z)
        assert np.isfinite(loss.item()) and abs(loss.item() - 500.0) < 1e-9
        assert np.all(np.isfinite(g))

    def test_bce_shape(self):
        with pytest.raises(ShapeError):
            nn.bce_with_logits(t64([0.0, 1.0]), np.ones(3))


CASES = list(op_cases(np.random.default_rng(2024)))


@pytest.mark.parametrize("name,f,inputs", CASES, ids=[c[0] for c in CASES])
def test_gradcheck(name, f, inputs):
    with ad.precision(np.float64):
        assert ad.finite_diff_check(f, inputs) < OP_TOLERANCE
