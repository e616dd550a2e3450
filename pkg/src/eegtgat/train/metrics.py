"""Confusion-matrix metrics: accuracy, macro PRF, Cohen's kappa."""

from dataclasses import dataclass

import numpy as np

from ..errors import DataError


@dataclass
class Metrics:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    kappa: float
    confusion: np.ndarray          # (K, K), rows = truth, cols = prediction

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "kappa": self.kappa,
            "confusion": self.confusion.astype(int).tolist(),
        }


def confusion_matrix(truths, predictions, n_classes: int) -> np.ndarray:
    truths = np.asarray(truths, dtype=np.intp)
    predictions = np.asarray(predictions, dtype=np.intp)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (truths, predictions), 1)
    return cm


def compute_metrics(confusion) -> Metrics:
    """Metrics from a K x K count matrix; zero denominators map to zero."""
    cm = np.asarray(confusion, dtype=np.float64)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise DataError(f"confusion matrix must be square, got {cm.shape}")
    if (cm < 0).any():
        raise DataError("confusion matrix counts must be non-negative")
    total = cm.sum()
    if total <= 0:
        raise DataError("confusion matrix is empty")

    accuracy = np.trace(cm) / total
    col = cm.sum(axis=0)            # predicted counts per class
    row = cm.sum(axis=1)            # true counts per class
    diag = np.diag(cm)
    precision = np.where(col > 0, diag / np.where(col > 0, col, 1.0), 0.0)
    recall = np.where(row > 0, diag / np.where(row > 0, row, 1.0), 0.0)
    pr = precision + recall
    f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)

    p_o = accuracy
    p_e = float((row * col).sum()) / (total * total)
    kappa = 0.0 if p_e >= 1.0 else (p_o - p_e) / (1.0 - p_e)

    return Metrics(float(accuracy), float(precision.mean()), float(recall.mean()),
                   float(f1.mean()), float(kappa), np.asarray(confusion, dtype=np.int64))
