"""Dense double-precision tensors and the recording tape for reverse-mode AD.

A ``Tensor`` wraps a contiguous float64 ndarray. Operations (see ``ops``)
record themselves onto the innermost active ``Tape``; ``Tape.backward``
replays the records in reverse, accumulating gradients into the ``grad``
field of every leaf tensor that requires them.
"""

import threading

import numpy as np

from ..errors import ContractError

_local = threading.local()


def _tape_stack():
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape():
    """The innermost active tape, or None outside any ``with Tape():`` block."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """A dense real-valued array participating in recorded computations."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Ordered record of ops from one forward pass.

    Records are appended in execution order, so the list is topologically
    sorted by construction and a single reverse sweep suffices. A tape is
    meant to live for one forward/backward cycle; ``backward`` clears it.
    """

    def __init__(self):
        self._records = []  # (output, inputs, backward_fn)

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _tape_stack().pop()
        return False

    def __len__(self):
        return len(self._records)

    def record(self, output: Tensor, inputs, backward_fn):
        self._records.append((output, tuple(inputs), backward_fn))

    def backward(self, loss: Tensor):
        """Accumulate d(loss)/d(leaf) into ``grad`` of every requiring leaf.

        The loss must be scalar (a single element). The tape is cleared
        afterwards; intermediate gradients are freed as soon as their
        producing record has been processed.
        """
        if loss.size != 1:
            raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")
        produced = {id(out) for out, _, _ in self._records}
        grads = {id(loss): np.ones_like(loss.data)}
        holders = {id(loss): loss}
        for out, inputs, backward_fn in reversed(self._records):
            g = grads.pop(id(out), None)
            if g is None:
                continue  # not on the path from loss
            for t, gi in zip(inputs, backward_fn(g)):
                if gi is None or not isinstance(t, Tensor) or not t.requires_grad:
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi
                    holders[key] = t
        for key, g in grads.items():
            t = holders[key]
            if key not in produced and t.requires_grad:
                t.grad = np.reshape(g, t.data.shape)
        self._records.clear()
