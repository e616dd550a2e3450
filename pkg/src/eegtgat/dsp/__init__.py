from .filters import BiquadCascade, design_bandpass, design_notch, filtfilt, resample
from .pipeline import (
    EPOCH_RATE,
    SEGMENT_SAMPLES,
    Epoch,
    Event,
    PipelineStats,
    PreprocessConfig,
    Recording,
    Segment,
    common_average_reference,
    extract_epochs,
    resample_recording,
    run_pipeline,
    segment_windows,
    zscore,
)
from .tgr import read_recording, write_recording

__all__ = [
    "BiquadCascade", "design_bandpass", "design_notch", "filtfilt", "resample",
    "EPOCH_RATE", "SEGMENT_SAMPLES", "Epoch", "Event", "PipelineStats",
    "PreprocessConfig", "Recording", "Segment", "common_average_reference",
    "extract_epochs", "resample_recording", "run_pipeline", "segment_windows",
    "zscore", "read_recording", "write_recording",
]
