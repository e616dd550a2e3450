"""Learnable parameters, initialization, snapshots, and checkpoint files.

A checkpoint is a single file: one JSON manifest line (shapes, names, model
config, seed, metadata) followed by the raw little-endian float64 blobs in
manifest order. Loading validates every shape against the manifest.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import DataError, ShapeError
from ..numerics import Tensor
from ..numerics.ops import BatchNormState
from .config import CONV_KERNELS, ModelConfig

CHECKPOINT_FORMAT = "tgat-checkpoint"
CHECKPOINT_VERSION = 1


def _uniform(rng, shape, fan_in):
    bound = float(np.sqrt(1.0 / fan_in))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _zeros(shape):
    return Tensor(np.zeros(shape), requires_grad=True)


def _full(shape, value):
    return Tensor(np.full(shape, float(value)), requires_grad=True)


@dataclass
class ConvStage:
    kernel: Tensor                # (F_out, F_in, k); no bias, batch norm absorbs it
    bn_gamma: Tensor
    bn_beta: Tensor
    bn_state: BatchNormState
    prelu_slope: Tensor           # (F_out,)


@dataclass
class GATLayerParams:
    w_left: list                  # per head (F_in, F_head)
    w_right: list
    attn: list                    # per head (F_head,)
    ln_gamma: Tensor              # (out_dim,)
    ln_beta: Tensor
    prelu_slope: Tensor           # (out_dim,)
    concat: bool

    @property
    def n_heads(self) -> int:
        return len(self.w_left)


@dataclass
class ModelParams:
    config: ModelConfig
    stages: list                  # 3 ConvStage
    spatial_kernel: Tensor        # (F3, L)
    time_query: Optional[Tensor]  # (F3,) only when temporal attention is on
    gat1: GATLayerParams
    gat2: GATLayerParams
    head_w1: Tensor
    head_b1: Tensor
    head_w2: Tensor
    head_b2: Tensor

    def named_parameters(self):
        """Deterministically ordered (name, Tensor) pairs of trainables."""
        out = []
        for i, st in enumerate(self.stages, start=1):
            out += [(f"enc{i}.kernel", st.kernel),
                    (f"enc{i}.bn_gamma", st.bn_gamma), (f"enc{i}.bn_beta", st.bn_beta),
                    (f"enc{i}.prelu", st.prelu_slope)]
        out.append(("spatial.kernel", self.spatial_kernel))
        if self.time_query is not None:
            out.append(("attention.query", self.time_query))
        for tag, layer in (("gat1", self.gat1), ("gat2", self.gat2)):
            for h in range(layer.n_heads):
                out += [(f"{tag}.h{h}.w_left", layer.w_left[h]),
                        (f"{tag}.h{h}.w_right", layer.w_right[h]),
                        (f"{tag}.h{h}.attn", layer.attn[h])]
            out += [(f"{tag}.ln_gamma", layer.ln_gamma), (f"{tag}.ln_beta", layer.ln_beta),
                    (f"{tag}.prelu", layer.prelu_slope)]
        out += [("head.w1", self.head_w1), ("head.b1", self.head_b1),
                ("head.w2", self.head_w2), ("head.b2", self.head_b2)]
        return out

    def named_buffers(self):
        """Non-trainable state that a checkpoint must still carry."""
        out = []
        for i, st in enumerate(self.stages, start=1):
            out += [(f"enc{i}.bn_mean", st.bn_state.mean), (f"enc{i}.bn_var", st.bn_state.var)]
        return out

    def n_parameters(self) -> int:
        return sum(t.size for _, t in self.named_parameters())

    def state_dict(self) -> dict:
        state = {name: t.data.copy() for name, t in self.named_parameters()}
        state.update({name: arr.copy() for name, arr in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict):
        for name, t in self.named_parameters():
            if name not in state:
                raise ShapeError(f"state is missing parameter {name!r}")
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ShapeError(
                    f"parameter {name!r}: state shape {arr.shape} != expected {t.data.shape}")
            t.data = arr.copy()
        for i, st in enumerate(self.stages, start=1):
            for attr, key in (("mean", f"enc{i}.bn_mean"), ("var", f"enc{i}.bn_var")):
                if key not in state:
                    raise ShapeError(f"state is missing buffer {key!r}")
                arr = np.asarray(state[key], dtype=np.float64)
                if arr.shape != getattr(st.bn_state, attr).shape:
                    raise ShapeError(f"buffer {key!r}: state shape {arr.shape} invalid")
                setattr(st.bn_state, attr, arr.copy())

    def zero_grads(self):
        for _, t in self.named_parameters():
            t.zero_grad()


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    """Fan-in uniform init; biases zero; PReLU slopes 0.25; query small uniform."""
    f1, f2, f3 = config.conv_channels
    stages = []
    f_in = 1
    for f_out, k in zip((f1, f2, f3), CONV_KERNELS):
        stages.append(ConvStage(
            kernel=_uniform(rng, (f_out, f_in, k), fan_in=f_in * k),
            bn_gamma=_full(f_out, 1.0),
            bn_beta=_zeros(f_out),
            bn_state=BatchNormState.create(f_out),
            prelu_slope=_full(f_out, 0.25),
        ))
        f_in = f_out

    spatial = np.zeros((f3, config.spatial_kernel_len))
    spatial[:, (config.spatial_kernel_len - 1) // 2] = 1.0  # start as identity
    spatial_kernel = Tensor(spatial, requires_grad=True)

    query = None
    if config.enable_temporal_attention:
        query = Tensor(rng.uniform(-0.1, 0.1, size=f3), requires_grad=True)

    def gat_layer(f_in, head_dim, heads, concat):
        out_dim = head_dim * heads if concat else head_dim
        return GATLayerParams(
            w_left=[_uniform(rng, (f_in, head_dim), fan_in=f_in) for _ in range(heads)],
            w_right=[_uniform(rng, (f_in, head_dim), fan_in=f_in) for _ in range(heads)],
            attn=[_uniform(rng, (head_dim,), fan_in=head_dim) for _ in range(heads)],
            ln_gamma=_full(out_dim, 1.0),
            ln_beta=_zeros(out_dim),
            prelu_slope=_full(out_dim, 0.25),
            concat=concat,
        )

    gat1 = gat_layer(f3, config.gat1_head_dim, config.gat1_heads, concat=True)
    gat2 = gat_layer(config.gat1_head_dim * config.gat1_heads, config.gat2_dim, 1, concat=False)

    return ModelParams(
        config=config,
        stages=stages,
        spatial_kernel=spatial_kernel,
        time_query=query,
        gat1=gat1,
        gat2=gat2,
        head_w1=_uniform(rng, (config.gat2_dim, config.classifier_hidden), fan_in=config.gat2_dim),
        head_b1=_zeros(config.classifier_hidden),
        head_w2=_uniform(rng, (config.classifier_hidden, config.n_classes),
                         fan_in=config.classifier_hidden),
        head_b2=_zeros(config.n_classes),
    )


def save_checkpoint(path, params: ModelParams, seed: int, meta: Optional[dict] = None):
    """One JSON manifest line followed by raw float64 blobs."""
    state = params.state_dict()
    names = sorted(state)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": params.config.to_dict(),
        "seed": int(seed),
        "meta": meta or {},
        "params": [{"name": n, "shape": list(state[n].shape)} for n in names],
    }
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, sort_keys=True).encode() + b"\n")
        for n in names:
            fh.write(np.ascontiguousarray(state[n], dtype="<f8").tobytes())
    return path


def load_checkpoint(path):
    """Returns (state_dict, ModelConfig, seed, meta); validates every shape."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            manifest = json.loads(fh.readline().decode())
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise DataError(f"{path}: invalid checkpoint manifest: {exc}") from exc
        if manifest.get("format") != CHECKPOINT_FORMAT:
            raise DataError(f"{path}: not a {CHECKPOINT_FORMAT} file")
        state = {}
        for entry in manifest["params"]:
            shape = tuple(int(s) for s in entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            blob = fh.read(count * 8)
            if len(blob) != count * 8:
                raise DataError(f"{path}: truncated blob for parameter {entry['name']!r}")
            state[entry["name"]] = np.frombuffer(blob, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes after declared blobs")
    config = ModelConfig.from_dict(manifest["config"])
    return state, config, int(manifest["seed"]), manifest.get("meta", {})
