"""Fold training and grouped cross-validation.

Each fold holds out a trial-grouped validation split from its training
trials, drives the plateau scheduler and early stopping from validation
loss, restores the best checkpoint, and evaluates once on the fold's test
trials. Everything is seeded through counter-based streams, so a rerun
with the same config reproduces identical bytes.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..archive import SegmentDataset
from ..errors import NumericError, ParameterError, SplitError
from ..graphs import batch_graphs, build_graph
from ..dsp.pipeline import Segment
from ..model import ModelConfig, init_params, model_forward, save_checkpoint
from ..numerics import Tape
from ..numerics.rng import FORWARD, INIT, KFOLD, SHUFFLE, VAL_SPLIT, stream
from .losses import label_smoothed_ce
from .metrics import Metrics, compute_metrics, confusion_matrix
from .optim import AdamWState, adamw_step
from .schedule import EarlyStopper, PlateauScheduler
from .splits import grouped_holdout, grouped_kfold

EVAL_CHUNK = 256


@dataclass
class TrainConfig:
    learning_rate: float = 3e-4
    weight_decay: float = 1e-3
    label_smoothing: float = 0.1
    batch_size: int = 32
    max_epochs: int = 150
    early_stop_patience: int = 15
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    min_delta: float = 1e-4
    seed: int = 0
    k_folds: int = 5
    validation_fraction: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ParameterError(f"label_smoothing must be in [0, 1), got {self.label_smoothing}")
        if not 0.0 < self.scheduler_factor < 1.0:
            raise ParameterError(f"scheduler_factor must be in (0, 1), got {self.scheduler_factor}")
        if self.k_folds < 2:
            raise ParameterError(f"k_folds must be >= 2, got {self.k_folds}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ParameterError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}")
        if self.batch_size < 2 or self.max_epochs < 1 or self.early_stop_patience < 1:
            raise ParameterError("batch_size >= 2, max_epochs >= 1, patience >= 1 required")

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class FoldResult:
    fold: int                      # 1-based
    metrics: Metrics
    best_epoch: int
    epochs_run: int
    history: list = field(default_factory=list)   # dicts: epoch, train_loss, val_loss, lr
    test_trial_ids: list = field(default_factory=list)


def dataset_batch(ds: SegmentDataset, idx):
    segs = [Segment(ds.features[i], int(ds.labels[i]), int(ds.trial_ids[i]),
                    ds.subject_ids[i], int(ds.segment_indices[i])) for i in idx]
    return batch_graphs([build_graph(s) for s in segs])


def evaluate_split(params, ds: SegmentDataset, idx, smoothing: float):
    """Eval-mode loss, predictions, confusion over the given segment indices."""
    n_classes = params.config.n_classes
    losses, preds = [], []
    idx = np.asarray(idx, dtype=np.intp)
    for lo in range(0, idx.size, EVAL_CHUNK):
        chunk = idx[lo:lo + EVAL_CHUNK]
        batch = dataset_batch(ds, chunk)
        logits = model_forward(batch, params, "eval")
        loss, _ = label_smoothed_ce(logits, ds.labels[chunk], smoothing)
        losses.append(loss.data.item() * chunk.size)
        preds.append(np.argmax(logits.data, axis=1))
    preds = np.concatenate(preds)
    loss = float(np.sum(losses) / idx.size)
    return loss, preds, confusion_matrix(ds.labels[idx], preds, n_classes)


def train_fold(ds: SegmentDataset, train_idx, test_idx, model_cfg: ModelConfig,
               cfg: TrainConfig, fold: int):
    """Train on one fold -> (FoldResult, best ModelParams)."""
    train_idx = np.asarray(train_idx, dtype=np.intp)
    test_idx = np.asarray(test_idx, dtype=np.intp)
    if train_idx.size == 0 or test_idx.size == 0:
        raise SplitError(f"fold {fold}: empty train or test split")

    inner_rng = stream(cfg.seed, VAL_SPLIT, fold)
    fit_pos, val_pos = grouped_holdout(ds.trial_ids[train_idx],
                                       cfg.validation_fraction, inner_rng)
    fit_idx, val_idx = train_idx[fit_pos], train_idx[val_pos]

    params = init_params(model_cfg, stream(cfg.seed, INIT, fold))
    named = params.named_parameters()
    state = AdamWState(beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps_adam)
    scheduler = PlateauScheduler(lr=cfg.learning_rate, factor=cfg.scheduler_factor,
                                 patience=cfg.scheduler_patience, min_delta=cfg.min_delta)
    stopper = EarlyStopper(patience=cfg.early_stop_patience, min_delta=cfg.min_delta)

    history = []
    best_state, best_epoch = None, 0
    epochs_run = 0
    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        lr_in_effect = scheduler.lr
        order = stream(cfg.seed, SHUFFLE, fold, epoch).permutation(fit_idx)
        total_loss = 0.0
        for bi in range(0, order.size, cfg.batch_size):
            chunk = order[bi:bi + cfg.batch_size]
            batch = dataset_batch(ds, chunk)
            fw_rng = stream(cfg.seed, FORWARD, fold, epoch, bi)
            with Tape() as tape:
                logits = model_forward(batch, params, "train", fw_rng)
                loss, _ = label_smoothed_ce(logits, ds.labels[chunk], cfg.label_smoothing)
                tape.backward(loss)
            loss_val = loss.data.item()
            if not np.isfinite(loss_val):
                raise NumericError(f"non-finite loss at fold {fold}, epoch {epoch}")
            grads = {name: t.grad for name, t in named if t.grad is not None}
            adamw_step(named, grads, state, lr=lr_in_effect, weight_decay=cfg.weight_decay)
            params.zero_grads()
            total_loss += loss_val * chunk.size
        train_loss = total_loss / order.size

        val_loss, _, _ = evaluate_split(params, ds, val_idx, cfg.label_smoothing)
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at fold {fold}, epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": train_loss,
                        "val_loss": val_loss, "lr": lr_in_effect})
        scheduler.update(val_loss)
        stop, is_best = stopper.update(val_loss)
        if is_best:
            best_state = params.state_dict()
            best_epoch = epoch
        if stop:
            break

    params.load_state_dict(best_state)
    _, _, confusion = evaluate_split(params, ds, test_idx, cfg.label_smoothing)
    result = FoldResult(
        fold=fold,
        metrics=compute_metrics(confusion),
        best_epoch=best_epoch,
        epochs_run=epochs_run,
        history=history,
        test_trial_ids=sorted(int(t) for t in np.unique(ds.trial_ids[test_idx])),
    )
    return result, params


def cross_validate(ds: SegmentDataset, model_cfg: ModelConfig, cfg: TrainConfig,
                   threads: int = 1):
    """Grouped k-fold training -> (fold results, best params per fold, summary)."""
    folds = grouped_kfold(ds.trial_ids, cfg.k_folds, stream(cfg.seed, KFOLD))
    for train_idx, test_idx in folds:
        overlap = set(ds.trial_ids[train_idx]) & set(ds.trial_ids[test_idx])
        if overlap:
            raise SplitError(f"trial leakage across folds: {sorted(overlap)}")

    def run(i):
        train_idx, test_idx = folds[i]
        return train_fold(ds, train_idx, test_idx, model_cfg, cfg, fold=i + 1)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, range(len(folds))))
    else:
        outcomes = [run(i) for i in range(len(folds))]
    results = [r for r, _ in outcomes]
    fold_params = [p for _, p in outcomes]
    return results, fold_params, summarize(results, model_cfg, cfg)


def summarize(results, model_cfg: ModelConfig, cfg: TrainConfig) -> dict:
    """Per-fold metrics plus population mean/std aggregates."""
    metric_names = ("accuracy", "precision_macro", "recall_macro", "f1_macro", "kappa")
    folds = []
    for r in results:
        entry = {"fold": r.fold, "best_epoch": r.best_epoch, "epochs_run": r.epochs_run,
                 "test_trial_ids": r.test_trial_ids}
        entry.update(r.metrics.to_dict())
        folds.append(entry)
    aggregate = {}
    for name in metric_names:
        values = np.array([getattr(r.metrics, name) for r in results])
        aggregate[name] = {"mean": float(values.mean()), "std": float(values.std())}
    return {
        "seed": cfg.seed,
        "model_config": model_cfg.to_dict(),
        "train_config": cfg.to_dict(),
        "folds": folds,
        "aggregate": aggregate,
    }


def write_results(out_dir, results, fold_params, summary, class_names):
    """Emit summary.json, per-fold confusion/history CSVs, accuracies, checkpoints."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    for r, params in zip(results, fold_params):
        header = ",".join(class_names)
        rows = [",".join(str(int(v)) for v in row) for row in r.metrics.confusion]
        (out_dir / f"fold{r.fold}_confusion.csv").write_text(
            header + "\n" + "\n".join(rows) + "\n")
        hist_rows = ["epoch,train_loss,val_loss,lr"]
        hist_rows += [f"{h['epoch']},{h['train_loss']!r},{h['val_loss']!r},{h['lr']!r}"
                      for h in r.history]
        (out_dir / f"fold{r.fold}_history.csv").write_text("\n".join(hist_rows) + "\n")
        save_checkpoint(out_dir / f"fold{r.fold}_best.ckpt", params, summary["seed"],
                        meta={"fold": r.fold, "test_trial_ids": r.test_trial_ids,
                              "best_epoch": r.best_epoch})
    (out_dir / "fold_accuracies.csv").write_text(
        "\n".join(repr(float(r.metrics.accuracy)) for r in results) + "\n")
    return out_dir / "summary.json"
