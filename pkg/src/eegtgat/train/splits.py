"""Trial-grouped splits: every segment of a trial stays on one side.

Segments cut from the same trial are strongly correlated, so folds and the
validation holdout both partition whole trials, never individual segments.
"""

import numpy as np

from ..errors import SplitError


def grouped_kfold(trial_ids, k: int = 5, rng=None):
    """Partition trials into k folds -> list of (train_idx, test_idx).

    Indices refer to positions in ``trial_ids`` (i.e. segments). Fold trial
    counts differ by at most one; shuffling is deterministic given the rng.
    """
    trial_ids = np.asarray(trial_ids)
    if k < 2:
        raise SplitError(f"k must be >= 2, got {k}")
    unique = np.unique(trial_ids)
    if unique.size < k:
        raise SplitError(f"need at least {k} distinct trials, got {unique.size}")
    order = unique.copy()
    if rng is not None:
        rng.shuffle(order)
    folds = np.array_split(order, k)
    out = []
    for fold_trials in folds:
        test_mask = np.isin(trial_ids, fold_trials)
        out.append((np.flatnonzero(~test_mask), np.flatnonzero(test_mask)))
    return out


def grouped_holdout(trial_ids, fraction: float, rng):
    """Split segment indices into (train_idx, held_idx) by whole trials.

    At least one trial lands on each side; raises if that is impossible.
    """
    trial_ids = np.asarray(trial_ids)
    unique = np.unique(trial_ids)
    if unique.size < 2:
        raise SplitError("grouped holdout needs at least 2 distinct trials")
    if not 0.0 < fraction < 1.0:
        raise SplitError(f"holdout fraction must be in (0, 1), got {fraction}")
    order = unique.copy()
    rng.shuffle(order)
    n_held = min(max(1, int(round(unique.size * fraction))), unique.size - 1)
    held_trials = order[:n_held]
    held_mask = np.isin(trial_ids, held_trials)
    return np.flatnonzero(~held_mask), np.flatnonzero(held_mask)
