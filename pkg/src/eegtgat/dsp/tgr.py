"""TGR v1 recording files: a JSON header plus a sibling float64 blob.

``<stem>.json`` holds sample rate, channel labels, subject id, expected
sample count, and trial annotations. ``<stem>.f64`` holds little-endian
64-bit floats, channel-major (all of channel 0, then channel 1, ...).
Readers reject blobs whose size disagrees with the header.
"""

import json
from pathlib import Path

import numpy as np

from ..errors import DataError
from .pipeline import Event, Recording

FORMAT_NAME = "TGR"
FORMAT_VERSION = 1


def write_recording(stem, rec: Recording) -> tuple:
    """Write ``<stem>.json`` + ``<stem>.f64``; returns both paths."""
    stem = Path(stem)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "sample_rate": rec.sample_rate,
        "channel_labels": list(rec.channel_labels),
        "subject_id": rec.subject_id,
        "n_samples": rec.n_samples,
        "annotations": [
            {"onset_sample": ev.onset_sample, "marker": ev.marker, "trial_id": ev.trial_id}
            for ev in rec.events
        ],
    }
    json_path = stem.with_suffix(".json")
    bin_path = stem.with_suffix(".f64")
    json_path.write_text(json.dumps(header, sort_keys=True, indent=1) + "\n")
    data = np.ascontiguousarray(rec.samples, dtype="<f8")
    bin_path.write_bytes(data.tobytes())
    return json_path, bin_path


def read_recording(json_path) -> Recording:
    """Load a TGR v1 pair, validating format and sample counts."""
    json_path = Path(json_path)
    try:
        header = json.loads(json_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{json_path}: invalid header JSON: {exc}") from exc
    if header.get("format") != FORMAT_NAME or header.get("version") != FORMAT_VERSION:
        raise DataError(f"{json_path}: not a {FORMAT_NAME} v{FORMAT_VERSION} header")
    for key in ("sample_rate", "channel_labels", "n_samples", "annotations"):
        if key not in header:
            raise DataError(f"{json_path}: header missing field {key!r}")
    bin_path = json_path.with_suffix(".f64")
    if not bin_path.exists():
        raise FileNotFoundError(f"{bin_path}: missing sample blob")
    raw = np.frombuffer(bin_path.read_bytes(), dtype="<f8")
    n_ch = len(header["channel_labels"])
    n_samp = int(header["n_samples"])
    if raw.size != n_ch * n_samp:
        raise DataError(
            f"{bin_path}: {raw.size} values but header declares {n_ch} x {n_samp}")
    events = [Event(int(a["onset_sample"]), str(a["marker"]), int(a["trial_id"]))
              for a in header["annotations"]]
    return Recording(list(header["channel_labels"]), float(header["sample_rate"]),
                     raw.reshape(n_ch, n_samp).copy(), events,
                     str(header.get("subject_id", "")))
