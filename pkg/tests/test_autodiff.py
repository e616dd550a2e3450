"""Backward-pass checks: tape semantics plus finite-difference verification."""

import numpy as np
import pytest

from eegtgat.errors import ContractError
from eegtgat.numerics import Tape, Tensor, grad_check, ops


class TestTapeBasics:
    def test_sum_gradient_is_ones(self):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        with Tape() as tape:
            loss = ops.reduce_sum(x)
            tape.backward(loss)
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_linear_gradient(self):
        rng = np.random.default_rng(0)
        w = Tensor(rng.standard_normal((1, 4)), requires_grad=True)
        x = Tensor(rng.standard_normal((4, 1)))
        with Tape() as tape:
            loss = ops.reduce_sum(ops.matmul(w, x))
            tape.backward(loss)
        np.testing.assert_allclose(w.grad, x.data.T, atol=1e-15)

    def test_non_scalar_loss_rejected(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            y = ops.mul(x, 2.0)
            with pytest.raises(ContractError):
                tape.backward(y)

    def test_fanout_accumulates(self):
        rng = np.random.default_rng(1)
        xv = rng.standard_normal(5)

        def single(path):
            x = Tensor(xv, requires_grad=True)
            with Tape() as tape:
                a = ops.mul(x, 3.0)
                b = ops.elu(x)
                loss = ops.reduce_sum(a if path == 0 else b)
                tape.backward(loss)
            return x.grad

        x = Tensor(xv, requires_grad=True)
        with Tape() as tape:
            both = ops.add(ops.mul(x, 3.0), ops.elu(x))
            tape.backward(ops.reduce_sum(both))
        np.testing.assert_allclose(x.grad, single(0) + single(1), atol=1e-12)

    def test_tape_freed_after_backward(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            loss = ops.reduce_sum(ops.mul(x, x))
            assert len(tape) > 0
            tape.backward(loss)
        assert len(tape) == 0

    def test_no_recording_without_tape(self):
        x = Tensor(np.ones(3), requires_grad=True)
        y = ops.mul(x, 2.0)
        assert y.requires_grad  # flag still propagates
        with Tape() as tape:
            pass
        assert len(tape) == 0


class TestGradCheckToolSanity:
    def test_quadratic_is_sharp(self):
        rng = np.random.default_rng(2)
        x = Tensor(rng.standard_normal(6), requires_grad=True)
        err = grad_check(lambda t: ops.mul(ops.reduce_sum(ops.mul(t, t)), 0.5), [x])
        assert err < 1e-8

    def test_detects_corrupted_backward(self, monkeypatch):
        from eegtgat.numerics import ops as ops_mod

        good = ops_mod._leaky_relu_grad
        monkeypatch.setattr(ops_mod, "_leaky_relu_grad",
                            lambda xd, s: good(xd, s) * 1.05)
        rng = np.random.default_rng(3)
        x = Tensor(rng.standard_normal(8), requires_grad=True)
        err = grad_check(lambda t: ops.reduce_sum(ops.leaky_relu(t)), [x])
        assert err > 1e-2


def check(fn, tensors, tol=1e-4, step=1e-5):
    err = grad_check(fn, tensors, step=step)
    assert err < tol, f"max relative error {err:.3e}"


class TestOpGradients:
    """Every differentiable op vs central differences, 10 draws each."""

    @pytest.mark.parametrize("draw", range(10))
    def test_matmul(self, draw):
        rng = np.random.default_rng(100 + draw)
        a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        b = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
        check(lambda a, b: ops.reduce_sum(ops.elu(ops.matmul(a, b))), [a, b])

    @pytest.mark.parametrize("draw", range(10))
    def test_softmax(self, draw):
        rng = np.random.default_rng(200 + draw)
        x = Tensor(rng.standard_normal((3, 5)), requires_grad=True)
        w = Tensor(rng.standard_normal((3, 5)))
        check(lambda x: ops.reduce_sum(ops.mul(ops.softmax(x, axis=1), w)), [x])

    @pytest.mark.parametrize("draw", range(10))
    def test_activations(self, draw):
        rng = np.random.default_rng(300 + draw)
        x = Tensor(rng.standard_normal((2, 3, 4)) + 0.3, requires_grad=True)
        a = Tensor(np.abs(rng.standard_normal(3)) + 0.1, requires_grad=True)
        check(lambda x, a: ops.reduce_sum(ops.prelu(x, a, channel_axis=1)), [x, a])
        check(lambda x: ops.reduce_sum(ops.elu(x, alpha=0.7)), [x])
        check(lambda x: ops.reduce_sum(ops.leaky_relu(x, 0.2)), [x])

    @pytest.mark.parametrize("draw", range(10))
    def test_layer_norm(self, draw):
        rng = np.random.default_rng(400 + draw)
        x = Tensor(rng.standard_normal((4, 6)), requires_grad=True)
        g = Tensor(rng.standard_normal(6), requires_grad=True)
        b = Tensor(rng.standard_normal(6), requires_grad=True)
        w = Tensor(rng.standard_normal((4, 6)))
        check(lambda x, g, b: ops.reduce_sum(ops.mul(ops.layer_norm(x, g, b), w)), [x, g, b])

    @pytest.mark.parametrize("draw", range(10))
    def test_batch_norm_train(self, draw):
        rng = np.random.default_rng(500 + draw)
        x = Tensor(rng.standard_normal((5, 3, 4)), requires_grad=True)
        g = Tensor(rng.standard_normal(3), requires_grad=True)
        b = Tensor(rng.standard_normal(3), requires_grad=True)
        w = Tensor(rng.standard_normal((5, 3, 4)))

        def fn(x, g, b):
            state = ops.BatchNormState.create(3)
            return ops.reduce_sum(ops.mul(ops.batch_norm(x, g, b, state, "train"), w))

        check(fn, [x, g, b])

    @pytest.mark.parametrize("draw", range(10))
    def test_batch_norm_eval(self, draw):
        rng = np.random.default_rng(550 + draw)
        x = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
        g = Tensor(rng.standard_normal(3), requires_grad=True)
        b = Tensor(rng.standard_normal(3), requires_grad=True)
        state = ops.BatchNormState.create(3)
        state.mean = rng.standard_normal(3)
        state.var = np.abs(rng.standard_normal(3)) + 0.5
        check(lambda x, g, b: ops.reduce_sum(ops.elu(ops.batch_norm(x, g, b, state, "eval"))), [x, g, b])

    @pytest.mark.parametrize("draw", range(10))
    def test_conv_temporal(self, draw):
        rng = np.random.default_rng(600 + draw)
        x = Tensor(rng.standard_normal((2, 3, 11)), requires_grad=True)
        w = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
        m = Tensor(rng.standard_normal((2, 2, 11)))
        check(lambda x, w: ops.reduce_sum(ops.mul(ops.conv_temporal(x, w), m)), [x, w])

    @pytest.mark.parametrize("draw", range(10))
    def test_depthwise_spatial(self, draw):
        rng = np.random.default_rng(700 + draw)
        x = Tensor(rng.standard_normal((2, 5, 2, 3)), requires_grad=True)
        w = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
        m = Tensor(rng.standard_normal((2, 5, 2, 3)))
        check(lambda x, w: ops.reduce_sum(ops.mul(ops.depthwise_conv_spatial(x, w), m)), [x, w])

    @pytest.mark.parametrize("draw", range(10))
    def test_dropout_fixed_mask(self, draw):
        rng = np.random.default_rng(800 + draw)
        x = Tensor(rng.standard_normal((4, 6)), requires_grad=True)
        check(lambda x: ops.reduce_sum(
            ops.elu(ops.dropout(x, 0.4, "element", "train", np.random.default_rng(draw)))), [x])

    @pytest.mark.parametrize("draw", range(10))
    def test_pool_and_reductions(self, draw):
        rng = np.random.default_rng(900 + draw)
        x = Tensor(rng.standard_normal((3, 4, 5)), requires_grad=True)
        w = Tensor(rng.standard_normal((3, 5)))
        check(lambda x: ops.reduce_sum(ops.mul(ops.mean_pool(x, axis=1), w)), [x])
        check(lambda x: ops.reduce_sum(ops.elu(ops.reduce_sum(x, axis=2))), [x])

    @pytest.mark.parametrize("draw", range(10))
    def test_segment_ops(self, draw):
        rng = np.random.default_rng(1000 + draw)
        seg = np.array([0, 0, 1, 1, 1, 2])
        x = Tensor(rng.standard_normal((6, 3)), requires_grad=True)
        s = Tensor(rng.standard_normal(6), requires_grad=True)
        w = Tensor(rng.standard_normal((3, 3)))
        m = Tensor(rng.standard_normal(6))
        check(lambda x: ops.reduce_sum(ops.mul(ops.segment_sum(x, seg, 3), w)), [x])
        check(lambda s: ops.reduce_sum(ops.mul(ops.segment_softmax(s, seg, 3), m)), [s])
        check(lambda x: ops.reduce_sum(ops.elu(ops.gather_rows(x, np.array([1, 4, 4, 0])))), [x])

    @pytest.mark.parametrize("draw", range(10))
    def test_shape_ops(self, draw):
        rng = np.random.default_rng(1100 + draw)
        x = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
        y = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
        w = Tensor(rng.standard_normal((4, 3, 2)))
        check(lambda x: ops.reduce_sum(ops.mul(ops.transpose(x, (2, 1, 0)), w)), [x])
        check(lambda x: ops.reduce_sum(ops.elu(ops.reshape(x, (6, 4)))), [x])
        check(lambda x, y: ops.reduce_sum(ops.elu(ops.concat([x, y], axis=1))), [x, y])

    @pytest.mark.parametrize("draw", range(10))
    def test_broadcast_add_mul(self, draw):
        rng = np.random.default_rng(1200 + draw)
        x = Tensor(rng.standard_normal((3, 4, 5)), requires_grad=True)
        b = Tensor(rng.standard_normal((1, 4, 1)), requires_grad=True)
        check(lambda x, b: ops.reduce_sum(ops.elu(ops.add(x, b))), [x, b])
        check(lambda x, b: ops.reduce_sum(ops.mul(x, b)), [x, b])


class TestCompositeGraph:
    def test_conv_attention_softmax_ce_chain(self):
        """A stitched conv -> attention -> softmax chain vs finite differences."""
        rng = np.random.default_rng(42)
        x = Tensor(rng.standard_normal((2, 2, 12)), requires_grad=True)
        w = Tensor(rng.standard_normal((3, 2, 5)) * 0.5, requires_grad=True)
        q = Tensor(rng.standard_normal(3) * 0.5, requires_grad=True)
        head = Tensor(rng.standard_normal((3, 2)) * 0.5, requires_grad=True)
        target = np.array([0, 1])

        def fn(x, w, q, head):
            feat = ops.conv_temporal(x, w)                      # (2, 3, 12)
            seq = ops.transpose(feat, (0, 2, 1))                # (2, 12, 3)
            scores = ops.reshape(ops.matmul(ops.reshape(seq, (24, 3)),
                                            ops.reshape(q, (3, 1))), (2, 12))
            beta = ops.softmax(scores, axis=1)
            pooled = ops.reduce_sum(ops.mul(seq, ops.reshape(beta, (2, 12, 1))), axis=1)
            logits = ops.matmul(pooled, head)
            logp = ops.softmax(logits, axis=1)
            picked = ops.mul(logp, Tensor(np.eye(2)[target]))
            return ops.neg(ops.reduce_sum(picked))

        err = grad_check(fn, [x, w, q, head])
        assert err < 1e-4
