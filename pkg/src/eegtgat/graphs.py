"""Channel graphs over segments, and block-diagonal batching.

Each one-second segment becomes a fully connected directed graph with one
node per channel: both arcs for every unordered pair plus a self-loop per
node, C^2 arcs total. Self-loops let a node keep its own features under
attention aggregation; the two directions carry independently learned
attention coefficients.
"""

from dataclasses import dataclass

import numpy as np

from .dsp.pipeline import Segment
from .errors import ShapeError


@dataclass
class EEGGraph:
    node_features: np.ndarray     # (C, T) one row per channel
    edge_src: np.ndarray          # (C*C,) source node per arc
    edge_dst: np.ndarray          # (C*C,) destination node per arc
    label: int
    trial_id: int
    subject_id: str

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_src.shape[0]


@dataclass
class GraphBatch:
    node_features: np.ndarray     # (sum C_g, T)
    edge_src: np.ndarray
    edge_dst: np.ndarray
    node_graph: np.ndarray        # graph membership per node, non-decreasing
    labels: np.ndarray            # (B,)
    trial_ids: np.ndarray
    subject_ids: list
    nodes_per_graph: int

    @property
    def n_graphs(self) -> int:
        return self.labels.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]


def full_edge_set(n_nodes: int):
    """All ordered pairs including self-loops, destination-major order."""
    dst, src = np.meshgrid(np.arange(n_nodes), np.arange(n_nodes), indexing="ij")
    return src.reshape(-1).astype(np.intp), dst.reshape(-1).astype(np.intp)


def build_graph(segment: Segment) -> EEGGraph:
    src, dst = full_edge_set(segment.samples.shape[0])
    return EEGGraph(segment.samples.copy(), src, dst, segment.label,
                    segment.trial_id, segment.subject_id)


def batch_graphs(graphs) -> GraphBatch:
    """Stack graphs block-diagonally; edges are offset so they never cross."""
    graphs = list(graphs)
    if not graphs:
        raise ShapeError("cannot batch zero graphs")
    c = graphs[0].n_nodes
    t = graphs[0].node_features.shape[1]
    for g in graphs:
        if g.n_nodes != c or g.node_features.shape[1] != t:
            raise ShapeError(
                f"heterogeneous graphs: {(g.n_nodes, g.node_features.shape[1])} vs {(c, t)}")
    feats = np.concatenate([g.node_features for g in graphs], axis=0)
    src = np.concatenate([g.edge_src + i * c for i, g in enumerate(graphs)])
    dst = np.concatenate([g.edge_dst + i * c for i, g in enumerate(graphs)])
    membership = np.repeat(np.arange(len(graphs)), c)
    return GraphBatch(
        node_features=feats,
        edge_src=src.astype(np.intp),
        edge_dst=dst.astype(np.intp),
        node_graph=membership,
        labels=np.array([g.label for g in graphs], dtype=np.intp),
        trial_ids=np.array([g.trial_id for g in graphs], dtype=np.intp),
        subject_ids=[g.subject_id for g in graphs],
        nodes_per_graph=c,
    )


def unbatch(batch: GraphBatch):
    """Inverse of batch_graphs; recovers each graph bit-exactly."""
    c = batch.nodes_per_graph
    out = []
    for i in range(batch.n_graphs):
        nodes = slice(i * c, (i + 1) * c)
        mask = (batch.edge_src >= i * c) & (batch.edge_src < (i + 1) * c)
        out.append(EEGGraph(
            batch.node_features[nodes].copy(),
            batch.edge_src[mask] - i * c,
            batch.edge_dst[mask] - i * c,
            int(batch.labels[i]),
            int(batch.trial_ids[i]),
            batch.subject_ids[i],
        ))
    return out
