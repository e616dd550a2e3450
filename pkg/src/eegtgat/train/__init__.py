from .loop import (
    FoldResult,
    TrainConfig,
    cross_validate,
    dataset_batch,
    evaluate_split,
    summarize,
    train_fold,
    write_results,
)
from .losses import label_smoothed_ce
from .metrics import Metrics, compute_metrics, confusion_matrix
from .optim import AdamWState, adamw_step
from .schedule import EarlyStopper, PlateauScheduler
from .splits import grouped_holdout, grouped_kfold

__all__ = [
    "FoldResult", "TrainConfig", "cross_validate", "dataset_batch", "evaluate_split",
    "summarize", "train_fold", "write_results", "label_smoothed_ce", "Metrics",
    "compute_metrics", "confusion_matrix", "AdamWState", "adamw_step",
    "EarlyStopper", "PlateauScheduler", "grouped_holdout", "grouped_kfold",
]
