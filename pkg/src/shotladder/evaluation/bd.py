"""Bjøntegaard-delta rate and quality.

Default fits follow the usual calculator: for BD-rate, log10(rate) is a
polynomial in quality integrated over the shared quality range; for
BD-quality, quality is a polynomial in log10(rate) integrated over the
shared log-rate range. ``fit="inverse"`` fits the other variable instead and
inverts the fitted curve numerically, for comparison between conventions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import trapezoid

from shotladder.errors import NoOverlap
from shotladder.ladder import RQCurve

MAX_DEGREE = 3
CurveLike = Union[RQCurve, tuple[Sequence[float], Sequence[float]]]
FitMode = Literal["direct", "inverse"]


@dataclass(frozen=True)
class CenteredFit:
    """``y = poly(x - center)`` with coefficients lowest order first."""

    coef: np.ndarray
    center: float

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    def __call__(self, x):
        return P.polyval(np.asarray(x, dtype=np.float64) - self.center, self.coef)

    def integral(self, lo: float, hi: float) -> float:
        anti = P.polyint(self.coef)
        return float(P.polyval(hi - self.center, anti) - P.polyval(lo - self.center, anti))


def _arrays(curve: CurveLike) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(curve, RQCurve):
        return curve.bitrates, curve.qualities
    r, q = curve
    return np.asarray(r, dtype=np.float64), np.asarray(q, dtype=np.float64)


def fit_degree(n_distinct: int) -> int:
    return max(0, min(MAX_DEGREE, n_distinct - 1))


def polyfit_centered(x, y, degree: int | None = None) -> CenteredFit:
    """Least-squares fit on mean-shifted abscissae."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if degree is None:
        degree = fit_degree(len(np.unique(x)))
    c = float(x.mean())
    vander = np.vander(x - c, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(vander, y, rcond=None)
    return CenteredFit(coef, c)


def _overlap(a: np.ndarray, b: np.ndarray, what: str) -> tuple[float, float]:
    lo = max(a.min(), b.min())
    hi = min(a.max(), b.max())
    if not hi > lo:
        raise NoOverlap(f"{what} ranges do not overlap")
    return float(lo), float(hi)


def _inverse_mean(fit: CenteredFit, x_range: tuple[float, float], y_lo: float, y_hi: float, n: int = 4001) -> float:
    """Mean over y in [y_lo, y_hi] of x such that fit(x) = y, by dense inversion."""
    xs = np.linspace(x_range[0], x_range[1], n)
    ys = np.maximum.accumulate(fit(xs))
    grid = np.linspace(y_lo, y_hi, n)
    return float(trapezoid(np.interp(grid, ys, xs), grid) / (y_hi - y_lo))


def degree_used(reference: CurveLike, test: CurveLike) -> int:
    """Lowest polynomial degree used by either fit (below 3 means the row is flagged)."""
    return min(fit_degree(len(np.unique(_arrays(c)[1]))) for c in (reference, test))


def bd_rate(reference: CurveLike, test: CurveLike, fit: FitMode = "direct") -> float:
    """Average bitrate difference of ``test`` against ``reference`` in percent (negative = savings)."""
    r1, q1 = _arrays(reference)
    r2, q2 = _arrays(test)
    l1, l2 = np.log10(r1), np.log10(r2)
    lo, hi = _overlap(q1, q2, "quality")
    if fit == "direct":
        f1, f2 = polyfit_centered(q1, l1), polyfit_centered(q2, l2)
        avg = (f2.integral(lo, hi) - f1.integral(lo, hi)) / (hi - lo)
    else:
        g1, g2 = polyfit_centered(l1, q1), polyfit_centered(l2, q2)
        avg = _inverse_mean(g2, (l2.min(), l2.max()), lo, hi) - _inverse_mean(g1, (l1.min(), l1.max()), lo, hi)
    return (10.0**avg - 1.0) * 100.0


def bd_quality(reference: CurveLike, test: CurveLike, fit: FitMode = "direct") -> float:
    """Average quality difference of ``test`` against ``reference`` (positive = gain)."""
    r1, q1 = _arrays(reference)
    r2, q2 = _arrays(test)
    l1, l2 = np.log10(r1), np.log10(r2)
    lo, hi = _overlap(l1, l2, "bitrate")
    if fit == "direct":
        f1, f2 = polyfit_centered(l1, q1), polyfit_centered(l2, q2)
        return (f2.integral(lo, hi) - f1.integral(lo, hi)) / (hi - lo)
    g1, g2 = polyfit_centered(q1, l1), polyfit_centered(q2, l2)
    return _inverse_mean(g2, (q2.min(), q2.max()), lo, hi) - _inverse_mean(g1, (q1.min(), q1.max()), lo, hi)
