"""Rate-quality hulls and bitrate ladders.

A ladder assigns one resolution to each bitrate step. Every ladder built
here can be passed through :func:`top_bottom_correction`, which makes the
resolution non-decreasing in bitrate.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

from shotladder.errors import EmptyHull, EmptyTable, InsufficientPredictions
from shotladder.media.jobs import Resolution, RQPoint

LADDER_STEPS = (
    100, 200, 400, 600, 800, 1000, 1500, 2000, 2400, 3000, 3500,
    4000, 4500, 5000, 6000, 7000, 8100, 9000, 10000, 11600, 13000, 15000,
)
QUALITY_WINDOW = (20.0, 99.9)
LADDER_COLUMNS = ["video_id", "method", "step_kbps", "width", "height"]


def pixels(res: Resolution) -> tuple[int, int]:
    """Sort key ordering resolutions by pixel count (height breaks ties)."""
    return (res[0] * res[1], res[1])


@dataclass
class RQCurve:
    """Points sorted by bitrate, strictly increasing."""

    points: list[RQPoint]

    @property
    def bitrates(self) -> np.ndarray:
        return np.array([p.bitrate for p in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class BitrateLadder:
    steps: tuple[float, ...]
    resolutions: tuple[Resolution, ...]

    def __post_init__(self):
        if len(self.steps) != len(self.resolutions):
            raise ValueError("one resolution per step is required")

    def is_monotone(self) -> bool:
        keys = [pixels(r) for r in self.resolutions]
        return all(a <= b for a, b in zip(keys, keys[1:]))

    def at(self, bitrate: float) -> Resolution:
        i = int(np.searchsorted(self.steps, bitrate, side="right")) - 1
        return self.resolutions[max(i, 0)]

    def rows(self, video_id: str, method: str) -> list[list]:
        return [[video_id, method, s, w, h] for s, (w, h) in zip(self.steps, self.resolutions)]


# convex hull --------------------------------------------------------------

def in_window(points: Iterable[RQPoint], window: tuple[float, float] = QUALITY_WINDOW) -> list[RQPoint]:
    lo, hi = window
    return [p for p in points if lo <= p.quality <= hi]


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[RQPoint], window: tuple[float, float] = QUALITY_WINDOW) -> RQCurve:
    """Upper concave envelope of the Pareto front in (log bitrate, quality).

    Points on a straight segment between two hull vertices are dropped, so
    both coordinates increase strictly along the result.
    """
    pts = in_window(points, window)
    if not pts:
        raise EmptyHull("no rate-quality point inside the quality window")
    # best quality per bitrate, then the Pareto front
    pts.sort(key=lambda p: (p.bitrate, -p.quality))
    front: list[RQPoint] = []
    for p in pts:
        if front and p.bitrate == front[-1].bitrate:
            continue
        if not front or p.quality > front[-1].quality:
            front.append(p)
    hull: list[RQPoint] = []
    for p in front:
        q = (np.log(p.bitrate), p.quality)
        while len(hull) >= 2:
            a = (np.log(hull[-2].bitrate), hull[-2].quality)
            b = (np.log(hull[-1].bitrate), hull[-1].quality)
            if _cross(a, b, q) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return RQCurve(hull)


def hull_ladder(hull: RQCurve, steps: Sequence[float] = LADDER_STEPS) -> BitrateLadder:
    """Resolution of the hull vertex nearest each step in log-rate (uncorrected)."""
    if not len(hull):
        raise EmptyHull("hull has no points")
    lr = np.log(hull.bitrates)
    res = []
    for s in steps:
        d = np.abs(lr - np.log(s))
        res.append(hull.points[int(np.argmin(d))].resolution)
    return BitrateLadder(tuple(steps), tuple(res))


# ladders from predicted curves ----------------------------------------------

def _monotone_curve(bitrates, qualities) -> tuple[np.ndarray, np.ndarray]:
    b = np.asarray(bitrates, dtype=np.float64)
    q = np.asarray(qualities, dtype=np.float64)
    order = np.lexsort((q, b))
    b, q = b[order], q[order]
    keep = np.r_[b[1:] != b[:-1], True]  # highest quality at a repeated rate
    b, q = b[keep], np.maximum.accumulate(q[keep])
    return np.log(b), q


def ladder_from_predictions(
    curves: Mapping[Resolution, tuple[Sequence[float], Sequence[float]]],
    steps: Sequence[float] = LADDER_STEPS,
    correct: bool = False,
) -> BitrateLadder:
    """Pick, at each step, the resolution with the best interpolated quality.

    ``curves`` maps a resolution to (bitrates, qualities). Interpolation is
    linear in log-rate over each resolution's own span, after forcing the
    quality to be non-decreasing in rate. Ties go to the lower resolution;
    a step outside every span goes to the nearest span end. A resolution
    with a single point acts as a zero-width span.
    """
    usable = {tuple(r): _monotone_curve(*c) for r, c in curves.items() if len(c[0]) >= 1}
    if not any(len(c[0]) >= 2 for c in usable.values()):
        raise InsufficientPredictions("no resolution has two or more predicted points")
    order = sorted(usable, key=pixels)
    chosen = []
    for s in steps:
        ls = np.log(s)
        best, best_q = None, -np.inf
        for r in order:
            lr, q = usable[r]
            if lr[0] <= ls <= lr[-1]:
                val = float(np.interp(ls, lr, q))
                if val > best_q:
                    best, best_q = r, val
        if best is None:
            dist = [min(abs(ls - usable[r][0][0]), abs(ls - usable[r][0][-1])) for r in order]
            best = order[int(np.argmin(dist))]
        chosen.append(best)
    ladder = BitrateLadder(tuple(steps), tuple(chosen))
    return top_bottom_correction(ladder) if correct else ladder


def curves_by_resolution(points: Iterable[RQPoint], quality=None) -> dict[Resolution, tuple[list[float], list[float]]]:
    """Group points into per-resolution (bitrates, qualities); ``quality`` overrides the measured score."""
    out: dict[Resolution, tuple[list[float], list[float]]] = {}
    for k, p in enumerate(points):
        b, q = out.setdefault(p.resolution, ([], []))
        b.append(p.bitrate)
        q.append(p.quality if quality is None else float(quality[k]))
    return out


# correction ---------------------------------------------------------------

def top_bottom_correction(ladder: BitrateLadder) -> BitrateLadder:
    """Top pass clips each rung to the one above; bottom pass lifts it to the one below."""
    res = list(ladder.resolutions)
    for i in range(len(res) - 2, -1, -1):
        if pixels(res[i]) > pixels(res[i + 1]):
            res[i] = res[i + 1]
    for i in range(1, len(res)):
        if pixels(res[i]) < pixels(res[i - 1]):
            res[i] = res[i - 1]
    return BitrateLadder(ladder.steps, tuple(res))


# reference ladders ----------------------------------------------------------

@dataclass(frozen=True)
class FixedTable:
    """Rungs as (minimum bitrate, resolution), ascending; ``floor`` serves steps below the first rung."""

    rungs: tuple[tuple[float, Resolution], ...]
    floor: Resolution = (960, 540)


def load_fixed_table(path: str | Path | None = None) -> FixedTable:
    if path is None:
        text = resources.files("shotladder.data").joinpath("fixed_ladder.yaml").read_text()
    else:
        text = Path(path).read_text()
    doc = yaml.safe_load(text) or {}
    rungs = tuple(
        sorted((float(r["kbps"]), (int(r["width"]), int(r["height"]))) for r in doc.get("rungs", []))
    )
    floor = tuple(doc.get("floor", (960, 540)))
    return FixedTable(rungs, (int(floor[0]), int(floor[1])))


def fixed_ladder(table: FixedTable, steps: Sequence[float] = LADDER_STEPS) -> BitrateLadder:
    """Table resolution per step; a step equal to a rung's bitrate takes that rung."""
    if not table.rungs:
        raise EmptyTable("fixed ladder table has no rungs")
    rates = [r for r, _ in table.rungs]
    res = []
    for s in steps:
        i = int(np.searchsorted(rates, s, side="right")) - 1
        res.append(table.floor if i < 0 else table.rungs[i][1])
    return BitrateLadder(tuple(steps), tuple(res))


def two_step_ladder(fast_hull: RQCurve, steps: Sequence[float] = LADDER_STEPS) -> BitrateLadder:
    return top_bottom_correction(hull_ladder(fast_hull, steps))


# cross-over bitrates ----------------------------------------------------------

def crossover_bitrates(
    curves: Mapping[Resolution, tuple[Sequence[float], Sequence[float]]],
    resolutions: Sequence[Resolution],
    grid_points: int = 400,
) -> list[float]:
    """Bitrate where each higher resolution overtakes the next lower one.

    For every adjacent pair (ascending), both interpolated curves are
    compared on a log-rate grid over their common span; the cross-over is
    the first grid rate from which the higher resolution stays at least as
    good. No overlap, or the higher resolution never winning, places the
    cross-over at the upper end of the lower resolution's span.
    """
    res = sorted((tuple(r) for r in resolutions), key=pixels)
    mono = {tuple(r): _monotone_curve(*c) for r, c in curves.items() if len(c[0]) >= 2}
    out = []
    for lo_r, hi_r in zip(res, res[1:]):
        if lo_r not in mono or hi_r not in mono:
            raise InsufficientPredictions(f"need curves for {lo_r} and {hi_r}")
        la, qa = mono[lo_r]
        lb, qb = mono[hi_r]
        start, stop = max(la[0], lb[0]), min(la[-1], lb[-1])
        if stop <= start:
            out.append(float(np.exp(la[-1] if lb[0] >= la[-1] else lb[0])))
            continue
        grid = np.linspace(start, stop, grid_points)
        better = np.interp(grid, lb, qb) >= np.interp(grid, la, qa)
        if better.all():
            out.append(float(np.exp(start)))
        elif not better[-1]:
            out.append(float(np.exp(la[-1])))
        else:
            last_bad = int(np.flatnonzero(~better)[-1])
            out.append(float(np.exp(grid[last_bad + 1])))
    return out


def crossover_ladder(
    crossovers: Sequence[float],
    resolutions: Sequence[Resolution],
    steps: Sequence[float] = LADDER_STEPS,
) -> BitrateLadder:
    """Highest resolution whose cross-over is at or below the step.

    ``crossovers[k]`` separates the k-th and (k+1)-th resolution in
    ascending order; they are clipped to be non-decreasing first.
    """
    res = sorted((tuple(r) for r in resolutions), key=pixels)
    if len(crossovers) != len(res) - 1:
        raise ValueError(f"{len(res)} resolutions need {len(res) - 1} cross-overs, got {len(crossovers)}")
    clipped = np.maximum.accumulate(np.asarray(crossovers, dtype=np.float64))
    chosen = []
    for s in steps:
        k = int(np.searchsorted(clipped, s, side="right"))
        chosen.append(res[k])
    return BitrateLadder(tuple(steps), tuple(chosen))


# persistence --------------------------------------------------------------

def write_ladders(path: str | Path, rows: Iterable[list]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LADDER_COLUMNS)
        w.writerows(rows)


def read_ladders(path: str | Path) -> dict[tuple[str, str], BitrateLadder]:
    grouped: dict[tuple[str, str], list[tuple[float, Resolution]]] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["video_id"], row["method"])
            grouped.setdefault(key, []).append((float(row["step_kbps"]), (int(row["width"]), int(row["height"]))))
    out = {}
    for key, items in grouped.items():
        items.sort()
        out[key] = BitrateLadder(tuple(s for s, _ in items), tuple(r for _, r in items))
    return out
