"""IIR filter design and zero-phase application, plus rational resampling.

Filters are second-order-section cascades designed with scipy and applied
forward-backward so epoch timing is never skewed by group delay. Resampling
is polyphase windowed-sinc with per-branch DC normalization, so constant
signals survive exactly.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np
import scipy.signal

from ..errors import ParameterError, ShapeError


@dataclass
class BiquadCascade:
    """A chain of biquad sections in (b0, b1, b2, a0, a1, a2) rows, a0 == 1."""

    sections: np.ndarray

    def __post_init__(self):
        self.sections = np.atleast_2d(np.asarray(self.sections, dtype=np.float64))
        if self.sections.shape[1] != 6:
            raise ShapeError(f"sections must be (n, 6), got {self.sections.shape}")

    @property
    def n_sections(self) -> int:
        return self.sections.shape[0]

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(sec[3:]) for sec in self.sections])

    def is_stable(self) -> bool:
        return bool((np.abs(self.poles()) < 1.0).all())

    def response(self, freqs_hz, fs: float) -> np.ndarray:
        """Complex frequency response at the given frequencies."""
        w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / fs
        z1 = np.exp(-1j * w)
        z2 = z1 * z1
        h = np.ones_like(z1, dtype=np.complex128)
        for b0, b1, b2, _, a1, a2 in self.sections:
            h *= (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2)
        return h

    def gain_db(self, freqs_hz, fs: float) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(np.abs(self.response(freqs_hz, fs)), 1e-300))


def design_notch(f0: float, fs: float, q: float = 30.0) -> BiquadCascade:
    """Single-biquad notch: unity gain at DC and Nyquist, null at f0."""
    if not 0.0 < f0 < fs / 2.0:
        raise ParameterError(f"notch frequency {f0} Hz must lie in (0, {fs / 2}) Hz")
    if q <= 0:
        raise ParameterError(f"notch Q must be positive, got {q}")
    b, a = scipy.signal.iirnotch(f0, q, fs=fs)
    return BiquadCascade(np.concatenate([b, a])[None, :])


def design_bandpass(low: float, high: float, fs: float, order: int = 4) -> BiquadCascade:
    """Butterworth band-pass with ``order`` poles as order/2 biquad sections."""
    if not 0.0 < low < high < fs / 2.0:
        raise ParameterError(f"band ({low}, {high}) Hz invalid for fs={fs} Hz")
    if order < 2 or order % 2 != 0:
        raise ParameterError(f"band-pass order must be a positive even integer, got {order}")
    sos = scipy.signal.butter(order // 2, [low, high], btype="bandpass", fs=fs, output="sos")
    return BiquadCascade(sos)


def filtfilt(cascade: BiquadCascade, x: np.ndarray) -> np.ndarray:
    """Forward-backward filtering along the last axis (zero phase).

    Edges are reflect-padded by 30 samples per section; the signal must be
    longer than the pad.
    """
    x = np.asarray(x, dtype=np.float64)
    padlen = 30 * cascade.n_sections
    if x.shape[-1] <= padlen:
        raise ShapeError(
            f"signal length {x.shape[-1]} is too short for edge padding {padlen}")
    pad = [(0, 0)] * (x.ndim - 1) + [(padlen, padlen)]
    xp = np.pad(x, pad, mode="reflect")
    sos = cascade.sections
    y = scipy.signal.sosfilt(sos, xp, axis=-1)
    y = scipy.signal.sosfilt(sos, y[..., ::-1], axis=-1)[..., ::-1]
    return np.ascontiguousarray(y[..., padlen:-padlen])


def _rational_ratio(fs: float, target: float):
    frac = Fraction(target / fs).limit_denominator(10_000)
    if abs(float(frac) - target / fs) > 1e-9:
        raise ParameterError(f"rate ratio {target}/{fs} is not a small rational")
    g = gcd(frac.numerator, frac.denominator)
    return frac.numerator // g, frac.denominator // g


def resample(x: np.ndarray, fs: float, target: float) -> np.ndarray:
    """Polyphase windowed-sinc resampling along the last axis.

    Output length is round(N * target / fs), halves up. Each polyphase branch is
    normalized to unit sum, so DC is preserved exactly; edges use constant
    extension.
    """
    if target <= 0:
        raise ParameterError(f"target rate must be positive, got {target}")
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    n = x.shape[-1]
    up, down = _rational_ratio(fs, target)
    out_len = int(np.floor(n * up / down + 0.5))
    if up == down:
        out = x.copy()
    else:
        half = 16 * max(up, down)          # zero crossings on each side
        taps = 2 * half + 1
        idx = np.arange(taps) - half
        fc = 0.5 / max(up, down)           # cutoff in cycles/sample at the upsampled rate
        h = 2.0 * fc * np.sinc(2.0 * fc * idx) * np.kaiser(taps, 8.6)
        for r in range(up):                # per-branch DC normalization
            branch = h[r::up]
            h[r::up] = branch / branch.sum()
        n_pad = half // up + 1
        xe = np.pad(x, [(0, 0)] * (x.ndim - 1) + [(n_pad, n_pad)], mode="edge")
        stuffed = np.zeros(xe.shape[:-1] + (xe.shape[-1] * up,))
        stuffed[..., ::up] = xe
        full = scipy.signal.fftconvolve(stuffed, h[None, :], mode="full", axes=-1)
        offsets = np.arange(out_len) * down + n_pad * up + half
        out = full[..., offsets]
    return out[0] if squeeze else out
