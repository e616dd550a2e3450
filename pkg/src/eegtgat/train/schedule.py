"""Validation-loss driven learning-rate reduction and early stopping."""

from dataclasses import dataclass

MIN_LR = 1e-6


@dataclass
class PlateauScheduler:
    """Multiply lr by ``factor`` after ``patience`` epochs without improvement.

    Improvement means dropping below the best loss by more than min_delta.
    The counter resets on improvement and after each reduction; lr never
    drops below MIN_LR.
    """

    lr: float
    factor: float = 0.5
    patience: int = 5
    min_delta: float = 1e-4
    best: float = None
    bad_epochs: int = 0

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"factor must lie in (0, 1), got {self.factor}")

    def update(self, val_loss: float) -> float:
        if self.best is None or val_loss < self.best - self.min_delta:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr = max(self.lr * self.factor, MIN_LR)
                self.bad_epochs = 0
        return self.lr


@dataclass
class EarlyStopper:
    """Stop after ``patience`` epochs without min_delta improvement.

    ``update`` returns (stop, is_best); the caller is responsible for
    snapshotting parameters on best epochs and restoring them afterwards.
    """

    patience: int = 15
    min_delta: float = 1e-4
    best: float = None
    bad_epochs: int = 0

    def update(self, val_loss: float):
        if self.best is None or val_loss < self.best - self.min_delta:
            self.best = val_loss
            self.bad_epochs = 0
            return False, True
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience, False
