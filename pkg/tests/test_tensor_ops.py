"""Forward-value checks of the tensor ops against independent oracles."""

import numpy as np
import pytest

from eegtgat.errors import NumericError, ParameterError, ShapeError, StatsError
from eegtgat.numerics import Tensor, ops


def rand(rng, *shape):
    return Tensor(rng.standard_normal(shape))


class TestMatmul:
    def test_identity(self):
        rng = np.random.default_rng(0)
        a = rand(rng, 2, 2)
        out = ops.matmul(a, Tensor(np.eye(2)))
        np.testing.assert_allclose(out.data, a.data)

    def test_zero(self):
        rng = np.random.default_rng(1)
        a = rand(rng, 3, 3)
        out = ops.matmul(a, Tensor(np.zeros((3, 3))))
        assert (out.data == 0).all()

    def test_against_triple_loop(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
        expected = np.zeros((3, 2))
        for i in range(3):
            for j in range(2):
                for l in range(4):
                    expected[i, j] += a[i, l] * b[l, j]
        out = ops.matmul(Tensor(a), Tensor(b))
        np.testing.assert_allclose(out.data, expected, atol=1e-12)

    def test_shape_mismatch_names_both(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestSoftmax:
    def test_constant_rows(self):
        out = ops.softmax(Tensor([3.0, 3.0, 3.0]), axis=0)
        np.testing.assert_allclose(out.data, [1 / 3] * 3, atol=1e-15)

    def test_forced_values(self):
        out = ops.softmax(Tensor([0.0, np.log(2.0)]), axis=0)
        np.testing.assert_allclose(out.data, [1 / 3, 2 / 3], atol=1e-15)

    def test_against_direct_formula(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(7)
        expected = np.exp(x) / np.exp(x).sum()
        out = ops.softmax(Tensor(x), axis=0)
        np.testing.assert_allclose(out.data, expected, atol=1e-12)

    def test_sums_to_one_and_shift_invariant(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((5, 9)) * 10
        y = ops.softmax(Tensor(x), axis=1).data
        np.testing.assert_allclose(y.sum(axis=1), np.ones(5), atol=1e-12)
        y2 = ops.softmax(Tensor(x + 123.456), axis=1).data
        np.testing.assert_allclose(y, y2, atol=1e-12)

    def test_nan_raises(self):
        with pytest.raises(NumericError):
            ops.softmax(Tensor([1.0, np.nan]), axis=0)


class TestActivations:
    def test_prelu_forced(self):
        out = ops.prelu(Tensor([[-2.0]]), Tensor([0.25]), channel_axis=1)
        assert out.data[0, 0] == -0.5

    def test_elu_zero(self):
        assert ops.elu(Tensor([0.0]), alpha=1.0).data[0] == 0.0

    def test_leaky_relu_pointwise(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(64)
        expected = np.array([v if v > 0 else 0.2 * v for v in x])
        out = ops.leaky_relu(Tensor(x), slope=0.2)
        np.testing.assert_allclose(out.data, expected, atol=1e-15)

    def test_elu_pointwise(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(64)
        expected = np.array([v if v > 0 else 0.5 * (np.exp(v) - 1) for v in x])
        out = ops.elu(Tensor(x), alpha=0.5)
        np.testing.assert_allclose(out.data, expected, atol=1e-15)


class TestLayerNorm:
    def test_constant_row_zeroed(self):
        x = Tensor(np.full((2, 6), 3.7))
        out = ops.layer_norm(x, Tensor(np.ones(6)), Tensor(np.zeros(6)), eps=1e-5)
        np.testing.assert_allclose(out.data, 0.0, atol=1e-12)

    def test_mean_zero_var_one(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((4, 32)) * 5 + 2
        out = ops.layer_norm(Tensor(x), Tensor(np.ones(32)), Tensor(np.zeros(32)), eps=1e-12)
        np.testing.assert_allclose(out.data.mean(axis=1), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.data.var(axis=1), 1.0, atol=1e-9)

    def test_against_two_pass_oracle(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((3, 10))
        gamma, beta = rng.standard_normal(10), rng.standard_normal(10)
        eps = 1e-5
        expected = np.empty_like(x)
        for i in range(3):
            mu = sum(x[i]) / 10
            var = sum((v - mu) ** 2 for v in x[i]) / 10
            expected[i] = (x[i] - mu) / np.sqrt(var + eps) * gamma + beta
        out = ops.layer_norm(Tensor(x), Tensor(gamma), Tensor(beta), eps=eps)
        np.testing.assert_allclose(out.data, expected, atol=1e-12)


class TestBatchNorm:
    def test_eval_identity_with_unit_stats(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((4, 3, 5))
        state = ops.BatchNormState.create(3)
        out = ops.batch_norm(Tensor(x), Tensor(np.ones(3)), Tensor(np.zeros(3)), state, "eval", eps=0.0)
        np.testing.assert_allclose(out.data, x, atol=1e-12)

    def test_train_normalizes(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((8, 3, 16)) * 4 + 1
        state = ops.BatchNormState.create(3)
        out = ops.batch_norm(Tensor(x), Tensor(np.ones(3)), Tensor(np.zeros(3)), state, "train", eps=1e-12)
        np.testing.assert_allclose(out.data.mean(axis=(0, 2)), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.data.var(axis=(0, 2)), 1.0, atol=1e-9)

    def test_running_state_momentum_formula(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((6, 2, 4))
        state = ops.BatchNormState.create(2, momentum=0.1)
        ops.batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)), state, "train")
        mu = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        np.testing.assert_allclose(state.mean, 0.9 * 0.0 + 0.1 * mu, atol=1e-12)
        np.testing.assert_allclose(state.var, 0.9 * 1.0 + 0.1 * var, atol=1e-12)

    def test_batch_of_one_rejected(self):
        state = ops.BatchNormState.create(2)
        with pytest.raises(StatsError):
            ops.batch_norm(Tensor(np.ones((1, 2, 4))), Tensor(np.ones(2)), Tensor(np.zeros(2)), state, "train")


def naive_conv_same(x, w):
    """Nested-loop cross-correlation oracle with asymmetric same padding."""
    n, f_in, t = x.shape
    f_out, _, k = w.shape
    pl = (k - 1) // 2
    y = np.zeros((n, f_out, t))
    for b in range(n):
        for o in range(f_out):
            for i in range(f_in):
                for tt in range(t):
                    for d in range(k):
                        src = tt + d - pl
                        if 0 <= src < t:
                            y[b, o, tt] += w[o, i, d] * x[b, i, src]
    return y


class TestConvTemporal:
    def test_delta_kernel_identity(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((2, 1, 20))
        w = np.zeros((1, 1, 5))
        w[0, 0, 2] = 1.0
        out = ops.conv_temporal(Tensor(x), Tensor(w))
        np.testing.assert_allclose(out.data, x, atol=1e-12)

    def test_ones_kernel_edges(self):
        x = np.ones((1, 1, 8))
        w = np.ones((1, 1, 3))
        out = ops.conv_temporal(Tensor(x), Tensor(w)).data[0, 0]
        np.testing.assert_allclose(out[1:-1], 3.0, atol=1e-12)
        np.testing.assert_allclose(out[[0, -1]], 2.0, atol=1e-12)

    @pytest.mark.parametrize("k", [3, 4, 7, 16])
    def test_against_nested_loop_oracle(self, k):
        rng = np.random.default_rng(int(k))
        x = rng.standard_normal((2, 3, 19))
        w = rng.standard_normal((4, 3, k))
        out = ops.conv_temporal(Tensor(x), Tensor(w))
        np.testing.assert_allclose(out.data, naive_conv_same(x, w), atol=1e-12)

    def test_same_padding_preserves_time(self):
        rng = np.random.default_rng(13)
        for t, k in [(256, 128), (10, 3), (5, 9)]:
            x = rand(rng, 1, 2, t)
            w = rand(rng, 3, 2, k)
            assert ops.conv_temporal(x, w).shape == (1, 3, t)

    def test_feature_mismatch(self):
        with pytest.raises(ShapeError):
            ops.conv_temporal(Tensor(np.ones((1, 2, 8))), Tensor(np.ones((1, 3, 3))))


def naive_depthwise_spatial(x, w):
    b, c, f, t = x.shape
    ln = w.shape[1]
    pad = (ln - 1) // 2
    y = np.zeros_like(x)
    for bb in range(b):
        for cc in range(c):
            for ff in range(f):
                for d in range(ln):
                    src = cc + d - pad
                    if 0 <= src < c:
                        y[bb, cc, ff] += w[ff, d] * x[bb, src, ff]
    return y


class TestDepthwiseSpatial:
    def test_delta_identity(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal((2, 5, 3, 7))
        w = np.zeros((3, 3))
        w[:, 1] = 1.0
        out = ops.depthwise_conv_spatial(Tensor(x), Tensor(w))
        np.testing.assert_allclose(out.data, x, atol=1e-15)

    def test_constant_kernel_moving_sum(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal((1, 6, 1, 4))
        w = np.full((1, 3), 0.5)
        out = ops.depthwise_conv_spatial(Tensor(x), Tensor(w))
        np.testing.assert_allclose(out.data, naive_depthwise_spatial(x, w), atol=1e-13)

    def test_zero_kernel(self):
        x = Tensor(np.ones((1, 4, 2, 3)))
        out = ops.depthwise_conv_spatial(x, Tensor(np.zeros((2, 3))))
        assert (out.data == 0).all()

    def test_count_mismatch(self):
        with pytest.raises(ShapeError):
            ops.depthwise_conv_spatial(Tensor(np.ones((1, 4, 2, 3))), Tensor(np.ones((3, 3))))

    def test_even_kernel_rejected(self):
        with pytest.raises(ParameterError):
            ops.depthwise_conv_spatial(Tensor(np.ones((1, 4, 2, 3))), Tensor(np.ones((2, 4))))


class TestDropout:
    def test_p_zero_train_identity(self):
        rng = np.random.default_rng(16)
        x = Tensor(rng.standard_normal((10, 10)))
        out = ops.dropout(x, 0.0, "element", "train", np.random.default_rng(0))
        np.testing.assert_array_equal(out.data, x.data)

    def test_eval_identity_bitwise(self):
        rng = np.random.default_rng(17)
        x = Tensor(rng.standard_normal((10, 10)))
        out = ops.dropout(x, 0.7, "element", "eval", np.random.default_rng(0))
        assert out is x

    def test_statistics(self):
        x = Tensor(np.ones(100_000))
        out = ops.dropout(x, 0.3, "element", "train", np.random.default_rng(42))
        masked = (out.data == 0).mean()
        assert abs(masked - 0.3) < 0.01
        survivors = out.data[out.data != 0]
        np.testing.assert_allclose(survivors, 1 / 0.7, atol=1e-12)
        assert abs(out.data.mean() - 1.0) < 0.02

    def test_channel_granularity_masks_whole_maps(self):
        x = Tensor(np.ones((8, 16, 32)))
        out = ops.dropout(x, 0.5, "channel", "train", np.random.default_rng(3))
        per_map = out.data.reshape(8 * 16, 32)
        for row in per_map:
            assert (row == 0).all() or (row == 2.0).all()

    def test_invalid_p(self):
        with pytest.raises(ParameterError):
            ops.dropout(Tensor(np.ones(3)), 1.0, "element", "train", np.random.default_rng(0))


class TestMeanPool:
    def test_single_element_axis(self):
        rng = np.random.default_rng(18)
        x = rng.standard_normal((3, 1, 4))
        out = ops.mean_pool(Tensor(x), axis=1)
        np.testing.assert_allclose(out.data, x[:, 0, :])

    def test_constant(self):
        out = ops.mean_pool(Tensor(np.full((2, 5), 1.25)), axis=1)
        np.testing.assert_allclose(out.data, 1.25)

    def test_against_sum_oracle(self):
        rng = np.random.default_rng(19)
        x = rng.standard_normal((4, 7))
        out = ops.mean_pool(Tensor(x), axis=0)
        np.testing.assert_allclose(out.data, x.sum(axis=0) / 4, atol=1e-14)


class TestSegmentOps:
    def test_segment_sum(self):
        x = Tensor(np.array([[1.0], [2.0], [4.0], [8.0]]))
        out = ops.segment_sum(x, np.array([0, 1, 0, 1]), 2)
        np.testing.assert_array_equal(out.data, [[5.0], [10.0]])

    def test_segment_softmax_matches_per_group(self):
        rng = np.random.default_rng(20)
        x = rng.standard_normal(9)
        seg = np.array([0, 0, 0, 1, 1, 2, 2, 2, 2])
        out = ops.segment_softmax(Tensor(x), seg, 3).data
        for s in range(3):
            grp = x[seg == s]
            expected = np.exp(grp - grp.max())
            expected /= expected.sum()
            np.testing.assert_allclose(out[seg == s], expected, atol=1e-12)

    def test_gather_rows(self):
        x = Tensor(np.arange(12.0).reshape(4, 3))
        out = ops.gather_rows(x, np.array([2, 0, 2]))
        np.testing.assert_array_equal(out.data, x.data[[2, 0, 2]])

    def test_gather_out_of_range(self):
        with pytest.raises(ShapeError):
            ops.gather_rows(Tensor(np.ones((2, 2))), np.array([3]))
