"""Finite-difference verification of recorded gradients.

``grad_check`` compares the tape's analytic gradients against central
differences coordinate by coordinate. It is the independent oracle for every
differentiable op and for the assembled network, so it must never share code
with the backward rules it checks.
"""

import numpy as np

from .tensor import Tape, Tensor


def grad_check(fn, inputs, step: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients of ``fn``.

    fn maps the given tensors to a scalar Tensor and must be deterministic
    (re-seed any randomness internally). Relative error per coordinate uses
    max(|analytic|, |numeric|, 1e-8) as the denominator.
    """
    inputs = list(inputs)
    for t in inputs:
        t.zero_grad()
    with Tape() as tape:
        loss = fn(*inputs)
        tape.backward(loss)
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]

    worst = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = fn(*inputs).data.item()
            flat[i] = orig - step
            down = fn(*inputs).data.item()
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            an = a.reshape(-1)[i]
            err = abs(an - numeric) / max(abs(an), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
