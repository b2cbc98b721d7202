"""Moment pooling used for the spatial (F1) and temporal (F2) reductions."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from shotladder.errors import EmptyPool

STAT_ORDER = ("mean", "std", "skew", "kurtosis")

F_MS = ("mean", "std")
F_ALL = STAT_ORDER
F_MEAN = ("mean",)


def pool(values, stats: Sequence[str] = F_ALL) -> np.ndarray:
    """Population moments of ``values`` in canonical order.

    ``std`` divides by N; ``kurtosis`` is excess kurtosis; both standardized
    moments are 0 for zero-variance input.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyPool("cannot pool an empty array")
    unknown = set(stats) - set(STAT_ORDER)
    if unknown:
        raise ValueError(f"unknown statistics {sorted(unknown)}")
    mean = x.mean()
    out = {"mean": mean}
    need_higher = "skew" in stats or "kurtosis" in stats
    if "std" in stats or need_higher:
        d = x - mean
        var = np.mean(d * d)
        # tiny relative variance is rounding noise from a constant input
        flat = var <= (8 * np.finfo(float).eps * abs(mean)) ** 2
        std = 0.0 if flat else np.sqrt(var)
        out["std"] = std
        if need_higher:
            if flat:
                out["skew"] = 0.0
                out["kurtosis"] = 0.0
            else:
                z = d / std
                out["skew"] = np.mean(z**3)
                out["kurtosis"] = np.mean(z**4) - 3.0
    return np.array([out[s] for s in STAT_ORDER if s in stats], dtype=np.float64)


def pool_rows(matrix: np.ndarray, stats: Sequence[str]) -> np.ndarray:
    """Apply :func:`pool` along the last axis of a 2-D array."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    return np.stack([pool(row, stats) for row in m])


def two_level(per_frame: list[np.ndarray] | np.ndarray, f1: Sequence[str], f2: Sequence[str]) -> np.ndarray:
    """F2 over frames of F1 within each frame; output ordered (F1 stat, F2 stat)."""
    spatial = np.stack([pool(v, f1) for v in per_frame])  # (T, |f1|)
    return np.concatenate([pool(spatial[:, i], f2) for i in range(spatial.shape[1])])


def stat_names(prefix: str, f1: Sequence[str] | None, f2: Sequence[str]) -> list[str]:
    if f1 is None:
        return [f"{prefix}_{b}" for b in f2]
    return [f"{prefix}_{a}_{b}" for a in f1 for b in f2]
