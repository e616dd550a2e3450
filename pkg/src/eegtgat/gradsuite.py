"""Finite-difference audit of every differentiable op and the full network.

Used by the ``gradcheck`` CLI command and the acceptance suite. Each entry
draws random inputs, compares tape gradients against central differences,
and reports the worst relative error. ``inject_fault`` deliberately
corrupts one backward rule to prove the checker would catch a regression.
"""

from dataclasses import dataclass

import numpy as np

from . import graphs, model
from .dsp.pipeline import Segment
from .numerics import Tensor, grad_check, ops
from .numerics.rng import stream
from .train.losses import label_smoothed_ce

TOLERANCE = 1e-4
STEP = 1e-5


@dataclass
class CheckResult:
    name: str
    max_error: float

    @property
    def passed(self) -> bool:
        return self.max_error < TOLERANCE


def _t(rng, *shape, grad=True):
    return Tensor(rng.standard_normal(shape), requires_grad=grad)


def _op_checks(rng):
    yield "matmul", lambda: grad_check(
        lambda a, b: ops.reduce_sum(ops.elu(ops.matmul(a, b))),
        [_t(rng, 3, 4), _t(rng, 4, 2)], STEP)
    w_sm = Tensor(rng.standard_normal((3, 5)))
    yield "softmax", lambda: grad_check(
        lambda x: ops.reduce_sum(ops.mul(ops.softmax(x, axis=1), w_sm)),
        [_t(rng, 3, 5)], STEP)
    yield "prelu", lambda: grad_check(
        lambda x, a: ops.reduce_sum(ops.prelu(x, a, channel_axis=1)),
        [_t(rng, 2, 3, 4), Tensor(np.abs(rng.standard_normal(3)) + 0.1, requires_grad=True)],
        STEP)
    yield "elu", lambda: grad_check(
        lambda x: ops.reduce_sum(ops.elu(x, alpha=0.7)), [_t(rng, 4, 5)], STEP)
    yield "leaky_relu", lambda: grad_check(
        lambda x: ops.reduce_sum(ops.leaky_relu(x, 0.2)), [_t(rng, 4, 5)], STEP)
    w_ln = Tensor(rng.standard_normal((4, 6)))
    yield "layer_norm", lambda: grad_check(
        lambda x, g, b: ops.reduce_sum(ops.mul(ops.layer_norm(x, g, b), w_ln)),
        [_t(rng, 4, 6), _t(rng, 6), _t(rng, 6)], STEP)

    w_bn = Tensor(rng.standard_normal((5, 3, 4)))

    def bn_fn(x, g, b):
        state = ops.BatchNormState.create(3)
        return ops.reduce_sum(ops.mul(ops.batch_norm(x, g, b, state, "train"), w_bn))

    yield "batch_norm", lambda: grad_check(bn_fn, [_t(rng, 5, 3, 4), _t(rng, 3), _t(rng, 3)], STEP)

    w_ct = Tensor(rng.standard_normal((2, 2, 11)))
    yield "conv_temporal", lambda: grad_check(
        lambda x, w: ops.reduce_sum(ops.mul(ops.conv_temporal(x, w), w_ct)),
        [_t(rng, 2, 3, 11), _t(rng, 2, 3, 4)], STEP)
    w_dw = Tensor(rng.standard_normal((2, 5, 2, 3)))
    yield "depthwise_conv_spatial", lambda: grad_check(
        lambda x, w: ops.reduce_sum(ops.mul(ops.depthwise_conv_spatial(x, w), w_dw)),
        [_t(rng, 2, 5, 2, 3), _t(rng, 2, 3)], STEP)
    yield "dropout", lambda: grad_check(
        lambda x: ops.reduce_sum(ops.elu(
            ops.dropout(x, 0.4, "element", "train", np.random.default_rng(5)))),
        [_t(rng, 4, 6)], STEP)
    w_mp = Tensor(rng.standard_normal((3, 5)))
    yield "mean_pool", lambda: grad_check(
        lambda x: ops.reduce_sum(ops.mul(ops.mean_pool(x, axis=1), w_mp)),
        [_t(rng, 3, 4, 5)], STEP)
    seg = np.array([0, 0, 1, 1, 1, 2])
    w_ss = Tensor(rng.standard_normal((3, 3)))
    yield "segment_sum", lambda: grad_check(
        lambda x: ops.reduce_sum(ops.mul(ops.segment_sum(x, seg, 3), w_ss)),
        [_t(rng, 6, 3)], STEP)
    m_sx = Tensor(rng.standard_normal(6))
    yield "segment_softmax", lambda: grad_check(
        lambda s: ops.reduce_sum(ops.mul(ops.segment_softmax(s, seg, 3), m_sx)),
        [_t(rng, 6)], STEP)
    yield "gather_rows", lambda: grad_check(
        lambda x: ops.reduce_sum(ops.elu(ops.gather_rows(x, np.array([1, 4, 4, 0])))),
        [_t(rng, 6, 3)], STEP)
    yield "label_smoothed_ce", lambda: grad_check(
        lambda t: label_smoothed_ce(t, np.array([0, 2, 1]), 0.1)[0],
        [_t(rng, 3, 3)], STEP)


def _end_to_end_check():
    """Loss gradient wrt every parameter group on a C=4, B=2 synthetic batch."""
    cfg = model.ModelConfig(conv_channels=(2, 2, 2), gat1_heads=2, gat1_head_dim=2,
                            gat2_dim=3, classifier_hidden=4, spatial_dropout_p=0.0,
                            classifier_dropout_p=0.0, enable_temporal_dropout=False)
    params = model.init_params(cfg, stream(42, 3))
    rng = np.random.default_rng(1234)
    segs = [Segment(rng.standard_normal((4, 256)), i % 2, i, "synthetic", 0)
            for i in range(2)]
    batch = graphs.batch_graphs([graphs.build_graph(s) for s in segs])
    targets = np.array([0, 1])
    tensors = [t for _, t in params.named_parameters()]

    def fn(*_):
        logits = model.model_forward(batch, params, "train", rng=np.random.default_rng(7))
        return label_smoothed_ce(logits, targets, 0.1)[0]

    return grad_check(fn, tensors, STEP)


def run_suite(inject_fault: bool = False, seed: int = 0):
    """All checks -> list of CheckResult. ``inject_fault`` corrupts one
    backward rule so the suite must fail (checker sensitivity fixture)."""
    results = []
    original = ops._leaky_relu_grad
    if inject_fault:
        ops._leaky_relu_grad = lambda xd, s, _orig=original: _orig(xd, s) * 1.05
    try:
        rng = np.random.default_rng(seed)
        for name, runner in _op_checks(rng):
            results.append(CheckResult(name, float(runner())))
        results.append(CheckResult("model_end_to_end", float(_end_to_end_check())))
    finally:
        ops._leaky_relu_grad = original
    return results
