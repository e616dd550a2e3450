"""From raw multichannel recordings to normalized one-second segments.

Fixed stage order: notch -> band-pass -> common average reference ->
resample to 256 Hz (when needed) -> epoch extraction -> per-channel
z-scoring -> non-overlapping one-second windows. Every stage is pure, so
reprocessing identical input is bit-identical.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, ParameterError, ShapeError
from . import filters

EPOCH_RATE = 256.0
SEGMENT_SAMPLES = 256


@dataclass
class Event:
    onset_sample: int
    marker: str
    trial_id: int


@dataclass
class Recording:
    """A continuous multichannel signal with event annotations."""

    channel_labels: list
    sample_rate: float
    samples: np.ndarray            # (C, N)
    events: list                   # of Event
    subject_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise ShapeError(f"samples must be (channels, time), got {self.samples.shape}")
        if len(self.channel_labels) != self.samples.shape[0]:
            raise ShapeError(
                f"{len(self.channel_labels)} labels for {self.samples.shape[0]} channels")
        if len(set(self.channel_labels)) != len(self.channel_labels):
            raise ShapeError("channel labels must be unique")
        n = self.samples.shape[1]
        for ev in self.events:
            if not 0 <= ev.onset_sample < n:
                raise ShapeError(f"event onset {ev.onset_sample} outside [0, {n})")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass
class Epoch:
    samples: np.ndarray            # (C, 1536) at 256 Hz
    label: int
    trial_id: int
    subject_id: str


@dataclass
class Segment:
    samples: np.ndarray            # (C, 256)
    label: int
    trial_id: int
    subject_id: str
    segment_index: int


@dataclass
class PreprocessConfig:
    notch_freq: float = 50.0
    notch_q: float = 30.0
    band_low: float = 0.1
    band_high: float = 40.0
    bandpass_order: int = 4
    target_rate: float = EPOCH_RATE
    exclude_channels: list = field(default_factory=list)
    marker_label_map: dict = field(default_factory=dict)
    epoch_start_s: float = 9.0
    epoch_end_s: float = 15.0


def common_average_reference(rec: Recording, exclude=()) -> Recording:
    """Subtract the per-sample mean of included channels from each of them.

    Channels named in ``exclude`` pass through untouched.
    """
    exclude = set(exclude)
    unknown = exclude - set(rec.channel_labels)
    if unknown:
        raise ParameterError(f"excluded channels not present: {sorted(unknown)}")
    included = [i for i, lbl in enumerate(rec.channel_labels) if lbl not in exclude]
    if len(included) < 2:
        raise ParameterError("common average reference needs at least 2 included channels")
    out = rec.samples.copy()
    mean = out[included].mean(axis=0)
    out[included] -= mean
    return replace(rec, samples=out)


def resample_recording(rec: Recording, target: float = EPOCH_RATE) -> Recording:
    """Resample all channels and rescale event onsets to the new rate."""
    if rec.sample_rate == target:
        return replace(rec, samples=rec.samples.copy())
    data = filters.resample(rec.samples, rec.sample_rate, target)
    scale = target / rec.sample_rate
    events = [replace(ev, onset_sample=int(round(ev.onset_sample * scale)))
              for ev in rec.events]
    events = [ev for ev in events if ev.onset_sample < data.shape[1]]
    return Recording(rec.channel_labels, target, data, events, rec.subject_id)


def extract_epochs(rec: Recording, marker_map: dict, accepted=None,
                   t_start: float = 9.0, t_end: float = 15.0):
    """Slice one epoch per accepted event; windows past the end are skipped.

    Returns (epochs, n_skipped). The label of each epoch comes from
    marker_map; every accepted marker must have an entry.
    """
    if accepted is None:
        accepted = set(marker_map)
    missing = set(accepted) - set(marker_map)
    if missing:
        raise ConfigError(f"accepted markers without a label mapping: {sorted(missing)}")
    fs = rec.sample_rate
    start_off = int(round(t_start * fs))
    stop_off = int(round(t_end * fs))
    epochs, skipped = [], 0
    for ev in rec.events:
        if ev.marker not in accepted:
            continue
        lo, hi = ev.onset_sample + start_off, ev.onset_sample + stop_off
        if lo < 0 or hi > rec.n_samples:
            skipped += 1
            continue
        epochs.append(Epoch(rec.samples[:, lo:hi].copy(), marker_map[ev.marker],
                            ev.trial_id, rec.subject_id))
    return epochs, skipped


def zscore(epoch: Epoch) -> Epoch:
    """Per-channel standardization with population std; flat channels zero out."""
    x = epoch.samples
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, keepdims=True)
    out = np.where(std < 1e-8, 0.0, (x - mean) / np.where(std < 1e-8, 1.0, std))
    return replace(epoch, samples=out)


def segment_windows(epoch: Epoch, window: int = SEGMENT_SAMPLES):
    """Split into contiguous non-overlapping windows, metadata inherited."""
    n = epoch.samples.shape[1]
    if n % window != 0:
        raise ShapeError(f"epoch length {n} not divisible by window {window}")
    return [Segment(epoch.samples[:, i * window:(i + 1) * window].copy(),
                    epoch.label, epoch.trial_id, epoch.subject_id, i)
            for i in range(n // window)]


@dataclass
class PipelineStats:
    n_epochs: int = 0
    n_skipped: int = 0
    n_segments: int = 0


def run_pipeline(rec: Recording, cfg: PreprocessConfig):
    """Full preprocessing chain for one recording -> (segments, stats)."""
    notch = filters.design_notch(cfg.notch_freq, rec.sample_rate, cfg.notch_q)
    band = filters.design_bandpass(cfg.band_low, cfg.band_high, rec.sample_rate,
                                   cfg.bandpass_order)
    filtered = filters.filtfilt(notch, rec.samples)
    filtered = filters.filtfilt(band, filtered)
    rec = replace(rec, samples=filtered)
    rec = common_average_reference(rec, cfg.exclude_channels)
    rec = resample_recording(rec, cfg.target_rate)
    epochs, skipped = extract_epochs(rec, cfg.marker_label_map,
                                     t_start=cfg.epoch_start_s, t_end=cfg.epoch_end_s)
    segments = []
    for ep in epochs:
        segments.extend(segment_windows(zscore(ep)))
    return segments, PipelineStats(len(epochs), skipped, len(segments))
