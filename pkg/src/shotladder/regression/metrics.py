from __future__ import annotations

import numpy as np

from shotladder.errors import DegenerateInput


def plcc(a, b) -> float:
    """Pearson linear correlation coefficient."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape or a.size < 2:
        raise DegenerateInput("plcc needs two equally long series of at least 2 values")
    da, db = a - a.mean(), b - b.mean()
    na, nb = np.sqrt((da * da).sum()), np.sqrt((db * db).sum())
    if na == 0 or nb == 0:
        raise DegenerateInput("plcc is undefined for a zero-variance series")
    return float(np.clip((da * db).sum() / (na * nb), -1.0, 1.0))
