"""Forward computation of the temporally-augmented graph attention network.

Per segment graph: a three-stage multi-scale temporal conv encoder with a
depthwise spatial filter produces a short feature sequence per channel node;
temporal dropout (train only) masks whole time chunks; a learned query pools
the sequence with softmax weights (or a uniform mean when disabled); two
GATv2 layers model inter-channel structure; mean readout over nodes feeds a
small classifier head.
"""

import numpy as np

from ..errors import ContractError, ParameterError, ShapeError
from ..graphs import GraphBatch
from ..numerics import Tensor
from ..numerics import ops
from .config import SEGMENT_LEN, ModelConfig
from .params import GATLayerParams, ModelParams

GAT_SCORE_SLOPE = 0.2  # LeakyReLU slope inside the attention score


def temporal_encoder(x: Tensor, params: ModelParams, mode: str,
                     rng, nodes_per_graph: int) -> Tensor:
    """(N, 1, 256) node signals -> (N, time_chunks, F3) feature sequences."""
    if x.ndim != 3 or x.shape[2] != SEGMENT_LEN:
        raise ShapeError(f"encoder expects (N, 1, {SEGMENT_LEN}) input, got {x.shape}")
    cfg = params.config
    h = x
    for stage in params.stages:
        h = ops.conv_temporal(h, stage.kernel)
        h = ops.batch_norm(h, stage.bn_gamma, stage.bn_beta, stage.bn_state, mode)
        h = ops.prelu(h, stage.prelu_slope, channel_axis=1)
        h = ops.dropout(h, cfg.spatial_dropout_p, "channel", mode, rng)

    n, f3, t = h.shape
    if n % nodes_per_graph != 0:
        raise ShapeError(f"{n} nodes do not split into graphs of {nodes_per_graph}")
    b = n // nodes_per_graph
    h = ops.reshape(h, (b, nodes_per_graph, f3, t))
    h = ops.depthwise_conv_spatial(h, params.spatial_kernel)
    h = ops.reshape(h, (n, f3, t))

    chunk = t // cfg.time_chunks
    h = ops.mean_pool(ops.reshape(h, (n, f3, cfg.time_chunks, chunk)), axis=3)
    return ops.transpose(h, (0, 2, 1))          # (N, time_chunks, F3)


def temporal_dropout(z: Tensor, p: float, mode: str, rescale: bool, rng) -> Tensor:
    """Zero whole (node, chunk) feature vectors with probability p in training.

    Survivors are left unscaled unless ``rescale`` is set; eval is identity.
    """
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"temporal dropout probability must be in [0, 1), got {p}")
    if mode == ops.EVAL:
        return z
    n, t, _ = z.shape
    keep = (rng.random((n, t, 1)) >= p).astype(np.float64)
    if rescale:
        keep = keep / (1.0 - p)
    return ops.mul(z, Tensor(keep))


def temporal_attention(z: Tensor, query=None):
    """Softmax-weighted pooling over time chunks.

    Returns (weights (N, T), pooled (N, F)). With no query the weights are
    uniform, i.e. a plain mean over time; both paths share the pooling code.
    """
    n, t, f = z.shape
    if query is None:
        weights = Tensor(np.full((n, t), 1.0 / t))
    else:
        flat = ops.reshape(z, (n * t, f))
        scores = ops.reshape(ops.matmul(flat, ops.reshape(query, (f, 1))), (n, t))
        weights = ops.softmax(scores, axis=1)
    pooled = ops.reduce_sum(ops.mul(z, ops.reshape(weights, (n, t, 1))), axis=1)
    return weights, pooled


def gatv2_layer(h: Tensor, edge_src: np.ndarray, edge_dst: np.ndarray,
                layer: GATLayerParams) -> Tensor:
    """One graph attention layer: score, softmax over in-neighbors, aggregate.

    Per head: e_ij = a . LeakyReLU(W_l h_i + W_r h_j) for edge j -> i,
    alpha = softmax_j(e_ij), out_i = sum_j alpha_ij (W_r h_j). Heads are
    concatenated (or passed through for a single head), then layer norm and
    a learned PReLU.
    """
    n = h.shape[0]
    n_edges = edge_src.shape[0]
    head_outs = []
    for w_l, w_r, a in zip(layer.w_left, layer.w_right, layer.attn):
        head_dim = w_l.shape[1]
        p_l = ops.matmul(h, w_l)
        p_r = ops.matmul(h, w_r)
        to_dst = ops.gather_rows(p_l, edge_dst)
        from_src = ops.gather_rows(p_r, edge_src)
        pre = ops.leaky_relu(ops.add(to_dst, from_src), GAT_SCORE_SLOPE)
        scores = ops.reshape(ops.matmul(pre, ops.reshape(a, (head_dim, 1))), (n_edges,))
        alpha = ops.segment_softmax(scores, edge_dst, n)
        msg = ops.mul(from_src, ops.reshape(alpha, (n_edges, 1)))
        head_outs.append(ops.segment_sum(msg, edge_dst, n))
    if layer.concat and len(head_outs) > 1:
        out = ops.concat(head_outs, axis=1)
    elif len(head_outs) == 1:
        out = head_outs[0]
    else:
        acc = head_outs[0]
        for extra in head_outs[1:]:
            acc = ops.add(acc, extra)
        out = ops.mul(acc, 1.0 / len(head_outs))
    out = ops.layer_norm(out, layer.ln_gamma, layer.ln_beta)
    return ops.prelu(out, layer.prelu_slope, channel_axis=1)


def readout_classify(h: Tensor, batch: GraphBatch, params: ModelParams,
                     mode: str, rng) -> Tensor:
    """Mean over each graph's nodes -> linear -> ELU -> dropout -> logits."""
    c = batch.nodes_per_graph
    b = batch.n_graphs
    if c < 1 or b * c != h.shape[0]:
        raise ContractError(
            f"readout expects {b} graphs x {c} nodes, got {h.shape[0]} node rows")
    cfg = params.config
    g = ops.mean_pool(ops.reshape(h, (b, c, h.shape[1])), axis=1)
    z = ops.add(ops.matmul(g, params.head_w1), ops.reshape(params.head_b1, (1, -1)))
    z = ops.elu(z)
    z = ops.dropout(z, cfg.classifier_dropout_p, "element", mode, rng)
    return ops.add(ops.matmul(z, params.head_w2), ops.reshape(params.head_b2, (1, -1)))


def model_forward(batch: GraphBatch, params: ModelParams, mode: str,
                  rng=None) -> Tensor:
    """Full network: encoder -> temporal dropout -> pooling -> GATv2 x2 -> head."""
    ops._check_mode(mode)
    if mode == ops.TRAIN and rng is None:
        raise ParameterError("train-mode forward requires an explicit rng")
    cfg = params.config
    x = Tensor(batch.node_features[:, None, :])
    z = temporal_encoder(x, params, mode, rng, batch.nodes_per_graph)
    if cfg.enable_temporal_dropout:
        z = temporal_dropout(z, cfg.temporal_dropout_p, mode,
                             cfg.rescale_temporal_dropout, rng)
    query = params.time_query if cfg.enable_temporal_attention else None
    _, pooled = temporal_attention(z, query)
    h = gatv2_layer(pooled, batch.edge_src, batch.edge_dst, params.gat1)
    h = gatv2_layer(h, batch.edge_src, batch.edge_dst, params.gat2)
    return readout_classify(h, batch, params, mode, rng)
