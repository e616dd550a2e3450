"""Differentiable operations over ``Tensor`` values.

Every op computes its forward result with numpy, then registers a backward
closure on the active tape when any input requires gradients. Temporal
convolutions run in the frequency domain (circular correlation with enough
zero padding to make it linear), which is the only op here where the naive
time-domain formula would dominate training cost.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from ..errors import NumericError, ParameterError, ShapeError, StatsError
from .tensor import Tensor, active_tape

TRAIN = "train"
EVAL = "eval"


def _check_mode(mode):
    if mode not in (TRAIN, EVAL):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")


def _make(data, inputs, backward_fn):
    requires = any(isinstance(t, Tensor) and t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires)
    tape = active_tape()
    if tape is not None and requires:
        tape.record(out, inputs, backward_fn)
    return out


def _unbroadcast(g, shape):
    """Sum gradient over axes that were broadcast in the forward pass."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise algebra


def add(a: Tensor, b):
    if not isinstance(b, Tensor):
        bv = float(b)

        def backward(g):
            return (g,)

        return _make(a.data + bv, (a,), backward)
    ash, bsh = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, ash), _unbroadcast(g, bsh)

    return _make(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b):
    if not isinstance(b, Tensor):
        bv = float(b)

        def backward(g):
            return (g * bv,)

        return _make(a.data * bv, (a,), backward)
    ad, bd = a.data, b.data

    def backward(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _make(ad * bd, (a, b), backward)


def neg(a: Tensor):
    def backward(g):
        return (-g,)

    return _make(-a.data, (a,), backward)


def sub(a: Tensor, b: Tensor):
    ash, bsh = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, ash), _unbroadcast(-g, bsh)

    return _make(a.data - b.data, (a, b), backward)


def matmul(a: Tensor, b: Tensor):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul requires (m,k) x (k,n), got {a.shape} x {b.shape}")
    ad, bd = a.data, b.data

    def backward(g):
        return g @ bd.T, ad.T @ g

    return _make(ad @ bd, (a, b), backward)


# ---------------------------------------------------------------------------
# shape manipulation


def reshape(x: Tensor, shape):
    old = x.shape

    def backward(g):
        return (g.reshape(old),)

    return _make(x.data.reshape(shape), (x,), backward)


def transpose(x: Tensor, axes):
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        return (np.ascontiguousarray(g.transpose(inverse)),)

    return _make(np.ascontiguousarray(x.data.transpose(axes)), (x,), backward)


def concat(tensors, axis: int):
    tensors = list(tensors)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward)


# ---------------------------------------------------------------------------
# reductions


def reduce_sum(x: Tensor, axis=None):
    if axis is None:
        shape = x.shape

        def backward(g):
            return (np.broadcast_to(g, shape).copy(),)

        return _make(x.data.sum(), (x,), backward)
    n = x.shape[axis]

    def backward(g):
        return (np.repeat(np.expand_dims(g, axis), n, axis=axis),)

    return _make(x.data.sum(axis=axis), (x,), backward)


def mean_pool(x: Tensor, axis: int):
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"mean_pool axis {axis} invalid for shape {x.shape}")
    axis = axis % x.ndim
    n = x.shape[axis]

    def backward(g):
        return (np.repeat(np.expand_dims(g / n, axis), n, axis=axis),)

    return _make(x.data.mean(axis=axis), (x,), backward)


# ---------------------------------------------------------------------------
# nonlinearities


def softmax(x: Tensor, axis: int):
    if np.isnan(x.data).any():
        raise NumericError("softmax received NaN input")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return (y * (g - dot),)

    return _make(y, (x,), backward)


def _leaky_relu_grad(xd, slope):
    return np.where(xd > 0, 1.0, slope)


def leaky_relu(x: Tensor, slope: float = 0.2):
    xd = x.data

    def backward(g):
        return (g * _leaky_relu_grad(xd, slope),)

    return _make(np.where(xd > 0, xd, slope * xd), (x,), backward)


def elu(x: Tensor, alpha: float = 1.0):
    xd = x.data
    y = np.where(xd > 0, xd, alpha * np.expm1(xd))

    def backward(g):
        return (g * np.where(xd > 0, 1.0, y + alpha),)

    return _make(y, (x,), backward)


def prelu(x: Tensor, slopes: Tensor, channel_axis: int = 1):
    if slopes.ndim != 1 or slopes.shape[0] != x.shape[channel_axis]:
        raise ShapeError(
            f"prelu slopes shape {slopes.shape} does not match axis {channel_axis} of {x.shape}"
        )
    xd = x.data
    bshape = [1] * x.ndim
    bshape[channel_axis] = slopes.shape[0]
    a_b = slopes.data.reshape(bshape)
    pos = xd > 0

    def backward(g):
        dx = g * np.where(pos, 1.0, a_b)
        da = _unbroadcast(g * np.where(pos, 0.0, xd), tuple(bshape)).reshape(slopes.shape)
        return dx, da

    return _make(np.where(pos, xd, a_b * xd), (x, slopes), backward)


# ---------------------------------------------------------------------------
# normalization


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5):
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(f"layer_norm affine params must have shape ({d},)")
    if eps <= 0:
        raise ParameterError("layer_norm eps must be positive")
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    var = ((xd - mu) ** 2).mean(axis=-1, keepdims=True)
    ivar = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * ivar
    gd = gamma.data

    def backward(g):
        dxhat = g * gd
        dx = ivar * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        axes = tuple(range(x.ndim - 1))
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return _make(xhat * gd + beta.data, (x, gamma, beta), backward)


@dataclass
class BatchNormState:
    """Running statistics for one batch-norm layer (channel axis 1)."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def create(cls, num_features: int, momentum: float = 0.1) -> "BatchNormState":
        return cls(np.zeros(num_features), np.ones(num_features), momentum)

    def copy(self) -> "BatchNormState":
        return BatchNormState(self.mean.copy(), self.var.copy(), self.momentum)


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState,
               mode: str, eps: float = 1e-5):
    """Normalize per channel over the batch (and trailing) axes.

    Train mode uses batch statistics and folds them into the running state;
    eval mode applies the running statistics, so it is a fixed affine map.
    """
    _check_mode(mode)
    nf = x.shape[1]
    if gamma.shape != (nf,) or beta.shape != (nf,):
        raise ShapeError(f"batch_norm affine params must have shape ({nf},)")
    xd = x.data
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, nf) + (1,) * (x.ndim - 2)
    gd = gamma.data.reshape(bshape)

    if mode == TRAIN:
        if x.shape[0] < 2:
            raise StatsError("batch_norm train mode requires batch size >= 2")
        mu = xd.mean(axis=axes, keepdims=True)
        var = ((xd - mu) ** 2).mean(axis=axes, keepdims=True)
        m = state.momentum
        state.mean = (1 - m) * state.mean + m * mu.reshape(nf)
        state.var = (1 - m) * state.var + m * var.reshape(nf)
        ivar = 1.0 / np.sqrt(var + eps)
        xhat = (xd - mu) * ivar
        count = xd.size // nf

        def backward(g):
            dxhat = g * gd
            dvar = (dxhat * (xd - mu)).sum(axis=axes, keepdims=True) * (-0.5) * ivar**3
            dmu = (-dxhat * ivar).sum(axis=axes, keepdims=True) \
                + dvar * (-2.0 * (xd - mu)).sum(axis=axes, keepdims=True) / count
            dx = dxhat * ivar + dvar * 2.0 * (xd - mu) / count + dmu / count
            dgamma = (g * xhat).sum(axis=axes).reshape(nf)
            dbeta = g.sum(axis=axes).reshape(nf)
            return dx, dgamma, dbeta

        return _make(xhat * gd + beta.data.reshape(bshape), (x, gamma, beta), backward)

    ivar = (1.0 / np.sqrt(state.var + eps)).reshape(bshape)
    xhat = (xd - state.mean.reshape(bshape)) * ivar

    def backward(g):
        dgamma = (g * xhat).sum(axis=axes).reshape(nf)
        dbeta = g.sum(axis=axes).reshape(nf)
        return g * gd * ivar, dgamma, dbeta

    return _make(xhat * gd + beta.data.reshape(bshape), (x, gamma, beta), backward)


# ---------------------------------------------------------------------------
# convolutions


def conv_temporal(x: Tensor, kernel: Tensor):
    """1-D cross-correlation along the last axis with "same" zero padding.

    x: (N, F_in, T), kernel: (F_out, F_in, k) -> (N, F_out, T). Stride 1.
    For even k the padding is (k-1)//2 on the left and k//2 on the right.
    """
    if x.ndim != 3 or kernel.ndim != 3:
        raise ShapeError(f"conv_temporal expects 3-D operands, got {x.shape} and {kernel.shape}")
    n, f_in, t = x.shape
    f_out, f_in2, k = kernel.shape
    if f_in != f_in2:
        raise ShapeError(f"conv_temporal feature mismatch: input {x.shape} vs kernel {kernel.shape}")
    if k < 1 or t < 1:
        raise ShapeError(f"conv_temporal needs k >= 1 and T >= 1, got k={k}, T={t}")
    pl = (k - 1) // 2
    length = next_fast_len(t + k - 1, real=True)
    xp = np.zeros((n, f_in, length))
    xp[:, :, pl:pl + t] = x.data
    xf = np.ascontiguousarray(np.fft.rfft(xp, axis=-1).transpose(2, 0, 1))      # (B, N, Fi)
    wf = np.ascontiguousarray(
        np.fft.rfft(kernel.data, n=length, axis=-1).transpose(2, 0, 1))         # (B, Fo, Fi)
    yf = xf @ np.conj(wf).transpose(0, 2, 1)                                     # (B, N, Fo)
    y = np.fft.irfft(yf.transpose(1, 2, 0), n=length, axis=-1)[:, :, :t]

    def backward(g):
        gf = np.ascontiguousarray(np.fft.rfft(g, n=length, axis=-1).transpose(2, 0, 1))
        dxp = np.fft.irfft((gf @ wf).transpose(1, 2, 0), n=length, axis=-1)
        dwf = np.conj(gf).transpose(0, 2, 1) @ xf                                # (B, Fo, Fi)
        dw = np.fft.irfft(dwf.transpose(1, 2, 0), n=length, axis=-1)[:, :, :k]
        return dxp[:, :, pl:pl + t], dw

    return _make(y, (x, kernel), backward)


def depthwise_conv_spatial(x: Tensor, kernel: Tensor):
    """Per-feature-map cross-correlation across the channel axis.

    x: (B, C, F, T), kernel: (F, L) with L odd; each feature map f is
    correlated with its own kernel along the C axis, zero padded to keep C.
    No mixing across feature maps.
    """
    if x.ndim != 4 or kernel.ndim != 2:
        raise ShapeError(f"depthwise_conv_spatial expects (B,C,F,T) and (F,L), got {x.shape}, {kernel.shape}")
    b, c, f, t = x.shape
    if kernel.shape[0] != f:
        raise ShapeError(f"kernel count {kernel.shape[0]} != feature maps {f}")
    ln = kernel.shape[1]
    if ln % 2 == 0 or ln < 1:
        raise ParameterError(f"spatial kernel length must be odd and positive, got {ln}")
    pad = (ln - 1) // 2
    xd, wd = x.data, kernel.data
    xp = np.zeros((b, c + ln - 1, f, t))
    xp[:, pad:pad + c] = xd
    y = np.zeros((b, c, f, t))
    for d in range(ln):
        y += xp[:, d:d + c] * wd[None, None, :, d, None]

    def backward(g):
        dxp = np.zeros_like(xp)
        dw = np.zeros_like(wd)
        for d in range(ln):
            dxp[:, d:d + c] += g * wd[None, None, :, d, None]
            dw[:, d] = np.einsum("bcft,bcft->f", g, xp[:, d:d + c])
        return dxp[:, pad:pad + c], dw

    return _make(y, (x, kernel), backward)


# ---------------------------------------------------------------------------
# regularization


def dropout(x: Tensor, p: float, granularity: str, mode: str, rng: np.random.Generator):
    """Inverted dropout; identity in eval mode (same object, bit-exact).

    granularity 'element' masks single entries, 'channel' masks whole
    trailing slices per (sample, channel) pair.
    """
    _check_mode(mode)
    if not 0.0 <= p < 1.0:
        raise ParameterError(f"dropout probability must be in [0, 1), got {p}")
    if granularity not in ("element", "channel"):
        raise ParameterError(f"unknown dropout granularity {granularity!r}")
    if mode == EVAL:
        return x
    if granularity == "channel":
        if x.ndim < 2:
            raise ShapeError("channel dropout requires at least 2-D input")
        mshape = x.shape[:2] + (1,) * (x.ndim - 2)
    else:
        mshape = x.shape
    keep = rng.random(mshape) >= p
    scale = keep / (1.0 - p)

    def backward(g):
        return (g * scale,)

    return _make(x.data * scale, (x,), backward)


# ---------------------------------------------------------------------------
# gather / segment ops (graph message passing)


def gather_rows(x: Tensor, index: np.ndarray):
    index = np.asarray(index, dtype=np.intp)
    if index.size and (index.min() < 0 or index.max() >= x.shape[0]):
        raise ShapeError(f"gather index out of range for {x.shape[0]} rows")
    nrows = x.shape[0]

    def backward(g):
        dx = np.zeros((nrows,) + g.shape[1:])
        np.add.at(dx, index, g)
        return (dx,)

    return _make(x.data[index], (x,), backward)


def segment_sum(x: Tensor, segments: np.ndarray, num_segments: int):
    segments = np.asarray(segments, dtype=np.intp)
    if segments.shape[0] != x.shape[0]:
        raise ShapeError("segment ids must match the leading axis")
    if segments.size and (segments.min() < 0 or segments.max() >= num_segments):
        raise ShapeError(f"segment id out of range for {num_segments} segments")
    y = np.zeros((num_segments,) + x.shape[1:])
    np.add.at(y, segments, x.data)

    def backward(g):
        return (g[segments],)

    return _make(y, (x,), backward)


def segment_softmax(x: Tensor, segments: np.ndarray, num_segments: int):
    """Softmax over groups of leading-axis entries sharing a segment id."""
    segments = np.asarray(segments, dtype=np.intp)
    if segments.shape[0] != x.shape[0]:
        raise ShapeError("segment ids must match the leading axis")
    xd = x.data
    rest = xd.shape[1:]
    m = np.full((num_segments,) + rest, -np.inf)
    np.maximum.at(m, segments, xd)
    e = np.exp(xd - m[segments])
    denom = np.zeros((num_segments,) + rest)
    np.add.at(denom, segments, e)
    y = e / denom[segments]

    def backward(g):
        dot = np.zeros((num_segments,) + rest)
        np.add.at(dot, segments, g * y)
        return (y * (g - dot[segments]),)

    return _make(y, (x,), backward)
