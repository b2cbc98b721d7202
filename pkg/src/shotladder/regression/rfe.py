"""Recursive feature elimination driven by forest impurity importances."""
from __future__ import annotations

import numpy as np

from shotladder.errors import NothingToEliminate
from shotladder.regression.forest import ForestParams, train_extra_trees


def rfe_select(x, y, target_count: int = 9, params: ForestParams = ForestParams(), seed: int = 0) -> list[int]:
    """Indices (ascending) of the ``target_count`` columns that survive elimination.

    Each round retrains on the surviving columns and drops the one with the
    smallest total impurity decrease; ties drop the later column.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] <= target_count:
        raise NothingToEliminate(f"{x.shape[1]} features, target {target_count}: nothing to eliminate")
    keep = list(range(x.shape[1]))
    while len(keep) > target_count:
        model = train_extra_trees(x[:, keep], y, params, seed)
        imp = model.importances
        worst = len(imp) - 1 - int(np.argmin(imp[::-1]))
        del keep[worst]
    return keep
