"""AdamW with decoupled weight decay."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import OptimizerError


@dataclass
class AdamWState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(named_params, grads: dict, state: AdamWState,
               lr: float, weight_decay: float) -> AdamWState:
    """One update step in place over (name, Tensor) pairs.

    w <- w - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * w.
    Missing gradients count as zero; NaN gradients are an error naming the
    parameter.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for name, tensor in named_params:
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(tensor.data)
        elif np.isnan(g).any():
            raise OptimizerError(f"NaN gradient for parameter {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        tensor.data = tensor.data - update - lr * weight_decay * tensor.data
    return state
