"""Segment archives: one manifest plus one binary blob for a whole dataset.

``segments.json`` describes shape, channel labels, class names, and one
record per segment (label, trial, subject, window index, element offset);
``segments.f64`` holds little-endian float64 samples, segment-major. A
single blob avoids scattering thousands of small files.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp.pipeline import SEGMENT_SAMPLES, Segment
from .errors import DataError

MANIFEST_NAME = "segments.json"
BLOB_NAME = "segments.f64"
FORMAT_NAME = "tgat-segments"
FORMAT_VERSION = 1


@dataclass
class SegmentDataset:
    """In-memory view of a segment archive."""

    features: np.ndarray          # (n, C, T)
    labels: np.ndarray            # (n,)
    trial_ids: np.ndarray         # (n,)
    subject_ids: list             # of str
    segment_indices: np.ndarray   # (n,)
    channel_labels: list
    class_names: list             # label index -> display name

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_channels(self):
        return self.features.shape[1]

    @classmethod
    def from_segments(cls, segments, channel_labels, class_names) -> "SegmentDataset":
        if not segments:
            raise DataError("no segments to archive")
        feats = np.stack([s.samples for s in segments])
        return cls(
            features=feats,
            labels=np.array([s.label for s in segments], dtype=np.intp),
            trial_ids=np.array([s.trial_id for s in segments], dtype=np.intp),
            subject_ids=[s.subject_id for s in segments],
            segment_indices=np.array([s.segment_index for s in segments], dtype=np.intp),
            channel_labels=list(channel_labels),
            class_names=list(class_names),
        )

    def subset(self, idx) -> "SegmentDataset":
        idx = np.asarray(idx, dtype=np.intp)
        return SegmentDataset(
            self.features[idx], self.labels[idx], self.trial_ids[idx],
            [self.subject_ids[i] for i in idx], self.segment_indices[idx],
            self.channel_labels, self.class_names)


def write_archive(out_dir, dataset: SegmentDataset):
    """Write segments.json + segments.f64 into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n, c, t = dataset.features.shape
    records = []
    for i in range(n):
        records.append({
            "label": int(dataset.labels[i]),
            "trial_id": int(dataset.trial_ids[i]),
            "subject_id": dataset.subject_ids[i],
            "segment_index": int(dataset.segment_indices[i]),
            "offset": i * c * t,
        })
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n_segments": n,
        "n_channels": c,
        "samples_per_segment": t,
        "channel_labels": dataset.channel_labels,
        "class_names": dataset.class_names,
        "records": records,
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    blob = np.ascontiguousarray(dataset.features, dtype="<f8")
    (out_dir / BLOB_NAME).write_bytes(blob.tobytes())
    return out_dir / MANIFEST_NAME


def read_archive(path) -> SegmentDataset:
    """Load an archive from its directory or its segments.json path."""
    path = Path(path)
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    if not manifest_path.exists():
        raise FileNotFoundError(f"{manifest_path}: archive manifest not found")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid manifest JSON: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME:
        raise DataError(f"{manifest_path}: not a {FORMAT_NAME} manifest")
    n = int(manifest["n_segments"])
    c = int(manifest["n_channels"])
    t = int(manifest["samples_per_segment"])
    blob_path = manifest_path.parent / BLOB_NAME
    if not blob_path.exists():
        raise FileNotFoundError(f"{blob_path}: missing segment blob")
    raw = np.frombuffer(blob_path.read_bytes(), dtype="<f8")
    if raw.size != n * c * t:
        raise DataError(f"{blob_path}: {raw.size} values, manifest declares {n * c * t}")
    records = manifest["records"]
    if len(records) != n:
        raise DataError(f"{manifest_path}: {len(records)} records for {n} segments")
    for i, r in enumerate(records):
        if int(r["offset"]) != i * c * t:
            raise DataError(f"{manifest_path}: record {i} offset mismatch")
    return SegmentDataset(
        features=raw.reshape(n, c, t).copy(),
        labels=np.array([r["label"] for r in records], dtype=np.intp),
        trial_ids=np.array([r["trial_id"] for r in records], dtype=np.intp),
        subject_ids=[str(r["subject_id"]) for r in records],
        segment_indices=np.array([r["segment_index"] for r in records], dtype=np.intp),
        channel_labels=list(manifest["channel_labels"]),
        class_names=list(manifest["class_names"]),
    )
