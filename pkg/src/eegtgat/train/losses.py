"""Classification objective: cross-entropy with label smoothing.

The op returns both the scalar loss and its analytic gradient with respect
to the logits, and registers the same gradient on the active tape so the
network's backward pass flows through it.
"""

import numpy as np

from ..errors import ParameterError, ShapeError
from ..numerics import Tensor
from ..numerics.ops import _make


def label_smoothed_ce(logits: Tensor, targets, epsilon: float = 0.1):
    """Mean smoothed cross-entropy over the batch -> (loss, dlogits).

    Targets y' = (1 - eps) * onehot + eps / K; the gradient is
    (softmax(logits) - y') / B.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ParameterError(f"label smoothing must be in [0, 1), got {epsilon}")
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (B, K), got {logits.shape}")
    b, k = logits.shape
    targets = np.asarray(targets, dtype=np.intp)
    if targets.shape != (b,):
        raise ShapeError(f"targets shape {targets.shape} does not match batch {b}")
    if targets.size and (targets.min() < 0 or targets.max() >= k):
        raise ShapeError(f"targets must lie in [0, {k})")

    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    logsumexp = zmax + np.log(np.exp(z - zmax).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    smoothed = np.full((b, k), epsilon / k)
    smoothed[np.arange(b), targets] += 1.0 - epsilon
    loss_value = -(smoothed * logp).sum() / b
    dlogits = (np.exp(logp) - smoothed) / b

    def backward(g):
        return (g * dlogits,)

    loss = _make(np.float64(loss_value), (logits,), backward)
    return loss, dlogits.copy()
