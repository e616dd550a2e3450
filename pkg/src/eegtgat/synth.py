"""Synthetic multichannel recordings with controllable class structure.

Background is 1/f^gamma colored noise per channel, plus mains interference
at 50 Hz (random phase per channel, so referencing does not cancel it) and
a slow drift, both of which the preprocessing chain must remove. Each trial
injects a class-dependent Hann-windowed tone into a subset of channels
inside the 9-15 s post-onset window: spanning the whole window in
``uniform`` mode, or exactly one one-second segment (class-specific index)
in ``localized`` mode, where only time-aware pooling can exploit it.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dsp.pipeline import Event, Recording
from .dsp.tgr import write_recording
from .errors import ParameterError
from .numerics.rng import SYNTH, stream

EPOCH_WINDOW_S = (9.0, 15.0)
N_EPOCH_SEGMENTS = 6


@dataclass
class SynthConfig:
    n_subjects: int = 1
    trials_per_class: int = 40
    channels: int = 8
    sample_rate: float = 256.0
    inter_trial_gap_s: float = 1.0
    lead_in_s: float = 1.0
    noise_exponent: float = 1.0
    line_freq: float = 50.0
    line_amplitude: float = 0.5
    drift_freq: float = 0.05
    drift_amplitude: float = 1.0
    signal_band: tuple = (8.0, 13.0)
    signal_amplitude: float = 2.0
    signal_channels: tuple = None        # default: first half of the channels
    timing_mode: str = "uniform"         # "uniform" | "localized"
    localized_segments: tuple = (1, 4)   # per-class epoch segment index
    markers: tuple = ("task_a", "task_b")
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 1 or self.trials_per_class < 1:
            raise ParameterError("need at least one subject and one trial per class")
        if self.channels < 2:
            raise ParameterError("need at least two channels")
        if self.inter_trial_gap_s < 0:
            raise ParameterError("trials would overlap: inter_trial_gap_s must be >= 0")
        for name in ("line_amplitude", "drift_amplitude", "signal_amplitude"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        lo, hi = self.signal_band
        if not 0.0 < lo < hi < self.sample_rate / 2.0:
            raise ParameterError(f"signal band {self.signal_band} invalid for "
                                 f"fs={self.sample_rate}")
        if self.timing_mode not in ("uniform", "localized"):
            raise ParameterError(f"unknown timing mode {self.timing_mode!r}")
        for idx in self.localized_segments:
            if not 0 <= idx < N_EPOCH_SEGMENTS:
                raise ParameterError(f"localized segment index {idx} outside "
                                     f"[0, {N_EPOCH_SEGMENTS})")
        if self.signal_channels is None:
            self.signal_channels = tuple(range(self.channels // 2))
        self.signal_channels = tuple(int(c) for c in self.signal_channels)
        for c in self.signal_channels:
            if not 0 <= c < self.channels:
                raise ParameterError(f"signal channel {c} outside [0, {self.channels})")
        self.signal_band = tuple(float(b) for b in self.signal_band)
        self.localized_segments = tuple(int(i) for i in self.localized_segments)
        self.markers = tuple(self.markers)

    def marker_label_map(self) -> dict:
        return {self.markers[0]: 0, self.markers[1]: 1}

    def class_frequencies(self) -> tuple:
        lo, hi = self.signal_band
        return (lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo))

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("signal_band", "signal_channels", "localized_segments", "markers"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**d)


def preset(name: str, **overrides) -> SynthConfig:
    """Difficulty presets: 'separable' for learnability, 'temporal' for the
    attention-vs-mean-pooling comparison."""
    if name == "separable":
        base = dict(signal_amplitude=2.0, timing_mode="uniform")
    elif name == "temporal":
        base = dict(signal_amplitude=1.0, timing_mode="localized")
    else:
        raise ParameterError(f"unknown preset {name!r}")
    base.update(overrides)
    return SynthConfig(**base)


def colored_noise(n: int, exponent: float, rng) -> np.ndarray:
    """Unit-variance noise with a 1/f^exponent power spectrum."""
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n)
    scale = np.zeros_like(freqs)
    scale[1:] = freqs[1:] ** (-exponent / 2.0)
    shaped = np.fft.irfft(spec * scale, n=n)
    shaped -= shaped.mean()
    return shaped / shaped.std()


def _hann_burst(n: int, freq: float, fs: float, amplitude: float, phase: float):
    t = np.arange(n) / fs
    envelope = 0.5 * (1.0 - np.cos(2.0 * np.pi * (np.arange(n) + 0.5) / n))
    return amplitude * envelope * np.sin(2.0 * np.pi * freq * t + phase)


def generate_recording(cfg: SynthConfig, subject: int, rng=None) -> Recording:
    """One subject's continuous recording with balanced, annotated trials."""
    if rng is None:
        rng = stream(cfg.seed, SYNTH, subject)
    fs = cfg.sample_rate
    n_trials = 2 * cfg.trials_per_class
    trial_len_s = EPOCH_WINDOW_S[1] + cfg.inter_trial_gap_s
    total_s = cfg.lead_in_s + n_trials * trial_len_s + 1.0
    n = int(round(total_s * fs))
    t = np.arange(n) / fs

    data = np.empty((cfg.channels, n))
    for c in range(cfg.channels):
        data[c] = colored_noise(n, cfg.noise_exponent, rng)
        data[c] += cfg.line_amplitude * np.sin(
            2.0 * np.pi * cfg.line_freq * t + rng.uniform(0, 2 * np.pi))
        data[c] += cfg.drift_amplitude * np.sin(
            2.0 * np.pi * cfg.drift_freq * t + rng.uniform(0, 2 * np.pi))

    labels = np.array([0] * cfg.trials_per_class + [1] * cfg.trials_per_class)
    rng.shuffle(labels)
    freqs = cfg.class_frequencies()

    events = []
    for k, label in enumerate(labels):
        onset_s = cfg.lead_in_s + k * trial_len_s
        onset = int(round(onset_s * fs))
        if cfg.timing_mode == "uniform":
            start_s = onset_s + EPOCH_WINDOW_S[0]
            dur_s = EPOCH_WINDOW_S[1] - EPOCH_WINDOW_S[0]
        else:
            start_s = onset_s + EPOCH_WINDOW_S[0] + cfg.localized_segments[label]
            dur_s = 1.0
        lo = int(round(start_s * fs))
        burst = _hann_burst(int(round(dur_s * fs)), freqs[label], fs,
                            cfg.signal_amplitude, rng.uniform(0, 2 * np.pi))
        for c in cfg.signal_channels:
            data[c, lo:lo + burst.size] += burst
        events.append(Event(onset, cfg.markers[label], subject * n_trials + k))

    labels_list = [f"ch{i:02d}" for i in range(cfg.channels)]
    return Recording(labels_list, fs, data, events, subject_id=f"sub{subject:02d}")


def generate_dataset(cfg: SynthConfig, out_dir) -> Path:
    """Write one TGR pair per subject plus manifest.json; returns manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for subject in range(cfg.n_subjects):
        rec = generate_recording(cfg, subject)
        json_path, _ = write_recording(out_dir / f"sub{subject:02d}", rec)
        files.append(json_path.name)
    manifest = {
        "format": "tgat-synth-manifest",
        "files": files,
        "marker_label_map": cfg.marker_label_map(),
        "seed": cfg.seed,
        "config": cfg.to_dict(),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return path
