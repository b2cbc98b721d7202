"""Per-video comparisons and the aggregated method report."""
from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from shotladder.errors import DegenerateInput, EmptyCurve, NoOverlap, ShotLadderError
from shotladder.evaluation.bd import FitMode, bd_quality, bd_rate, degree_used
from shotladder.evaluation.protocol import BDPair, f75, rq_curve_from_ladder
from shotladder.ladder import LADDER_STEPS, BitrateLadder, RQCurve, convex_hull, hull_ladder
from shotladder.media.jobs import RQPoint
from shotladder.regression.metrics import plcc

log = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "method", "codec", "preset",
    "mean_bd_rate_vs_hull", "mean_bd_vmaf_vs_hull", "mean_bd_rate_vs_fixed",
    "f75", "n_videos", "n_no_overlap",
]


@dataclass(frozen=True)
class BDReport:
    reference: str
    test: str
    bd_rate: float | None
    bd_quality: float | None
    overlap_ok: bool
    low_degree: bool = False

    @property
    def pair(self) -> BDPair | None:
        return BDPair(self.bd_rate, self.bd_quality) if self.overlap_ok else None


def compare(reference: RQCurve, test: RQCurve, reference_id: str = "reference", test_id: str = "test",
            fit: FitMode = "direct") -> BDReport:
    """BD-rate and BD-quality of ``test`` against ``reference``; no overlap yields an empty, flagged report."""
    try:
        rate = bd_rate(reference, test, fit)
        quality = bd_quality(reference, test, fit)
    except NoOverlap:
        return BDReport(reference_id, test_id, None, None, False)
    return BDReport(reference_id, test_id, rate, quality, True, degree_used(reference, test) < 3)


@dataclass
class VideoResult:
    video_id: str
    vs_hull: BDReport
    vs_fixed: BDReport
    hull_vs_fixed: BDReport
    error: str | None = None


def reference_hull_curve(points: Sequence[RQPoint], steps: Sequence[float] = LADDER_STEPS) -> RQCurve:
    """The exhaustive hull as a ladder, rebuilt into a curve the same way as any method's ladder.

    Sampling every ladder through one reconstruction keeps the cubic fits
    comparable; raw hull vertices are sparser than a ladder's buckets and
    bias the fit by several percent on their own.
    """
    return rq_curve_from_ladder(hull_ladder(convex_hull(points), steps), points)


def evaluate_video(
    video_id: str,
    ladder: BitrateLadder | RQCurve,
    fixed: BitrateLadder,
    points: Sequence[RQPoint],
    fit: FitMode = "direct",
    steps: Sequence[float] = LADDER_STEPS,
) -> VideoResult:
    """Compare one video's ladder with its exhaustive-hull ladder and with the fixed ladder.

    An ``RQCurve`` in place of a ladder is used as the method's curve directly.
    """
    hull = reference_hull_curve(points, steps)
    fixed_curve = rq_curve_from_ladder(fixed, points)
    curve = ladder if isinstance(ladder, RQCurve) else rq_curve_from_ladder(ladder, points)
    return VideoResult(
        video_id,
        vs_hull=compare(hull, curve, "hull", "method", fit),
        vs_fixed=compare(fixed_curve, curve, "fixed", "method", fit),
        hull_vs_fixed=compare(fixed_curve, hull, "fixed", "hull", fit),
    )


def _failed(video_id: str, err: Exception) -> VideoResult:
    empty = BDReport("-", "-", None, None, False)
    return VideoResult(video_id, empty, empty, empty, error=f"{type(err).__name__}: {err}")


@dataclass
class MethodSummary:
    method: str
    codec: str
    preset: str
    results: list[VideoResult] = field(default_factory=list)

    def row(self) -> list:
        vs_hull = [r.vs_hull for r in self.results if r.vs_hull.overlap_ok]
        # no overlap against the fixed ladder counts as zero gain
        vs_fixed = [r.vs_fixed.bd_rate if r.vs_fixed.overlap_ok else 0.0 for r in self.results if r.error is None]
        paired_m = [r.vs_fixed.pair for r in self.results]
        paired_h = [r.hull_vs_fixed.pair for r in self.results]
        n_bad = sum(1 for r in self.results if not (r.vs_hull.overlap_ok and r.vs_fixed.overlap_ok))
        return [
            self.method, self.codec, self.preset,
            _mean([b.bd_rate for b in vs_hull]),
            _mean([b.bd_quality for b in vs_hull]),
            _mean(vs_fixed),
            f75(paired_m, paired_h) if self.results else float("nan"),
            len(self.results),
            n_bad,
        ]


def _mean(xs: Sequence[float]) -> float:
    return float(np.mean(xs)) if len(xs) else float("nan")


def evaluate_method(
    method: str,
    codec: str,
    preset: str,
    ladders: Mapping[str, BitrateLadder | RQCurve],
    fixed: BitrateLadder,
    points_by_video: Mapping[str, Sequence[RQPoint]],
    fit: FitMode = "direct",
    steps: Sequence[float] = LADDER_STEPS,
) -> MethodSummary:
    """Evaluate every video that has target-encoder points; per-video failures are recorded, not raised."""
    summary = MethodSummary(method, codec, preset)
    for vid in sorted(points_by_video):
        ladder = ladders.get(vid)
        try:
            if ladder is None:
                raise EmptyCurve(f"no ladder for {vid}")
            summary.results.append(evaluate_video(vid, ladder, fixed, points_by_video[vid], fit, steps))
        except ShotLadderError as err:
            log.warning("%s/%s/%s %s: %s", method, codec, preset, vid, err)
            summary.results.append(_failed(vid, err))
    return summary


def write_report(path: str | Path, summaries: Iterable[MethodSummary]) -> list[list]:
    rows = [s.row() for s in summaries]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in r])
    return rows


def write_video_details(path: str | Path, summaries: Iterable[MethodSummary]) -> None:
    """Per-video BD values, one line per (method, codec, preset, video)."""
    cols = ["method", "codec", "preset", "video_id", "bd_rate_vs_hull", "bd_vmaf_vs_hull",
            "bd_rate_vs_fixed", "bd_vmaf_vs_fixed", "hull_bd_rate_vs_fixed", "hull_bd_vmaf_vs_fixed",
            "low_degree", "error"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for s in summaries:
            for r in s.results:
                vals = [r.vs_hull.bd_rate, r.vs_hull.bd_quality, r.vs_fixed.bd_rate, r.vs_fixed.bd_quality,
                        r.hull_vs_fixed.bd_rate, r.hull_vs_fixed.bd_quality]
                w.writerow([s.method, s.codec, s.preset, r.video_id]
                           + ["" if v is None else f"{v:.6f}" for v in vals]
                           + [int(r.vs_hull.low_degree or r.vs_fixed.low_degree), r.error or ""])


def plcc_by_resolution(points: Sequence[RQPoint], predicted: Sequence[float]) -> dict[tuple[int, int], float]:
    """Correlation between measured and predicted quality, per encoding resolution."""
    if len(points) != len(predicted):
        raise ValueError("one prediction per point is required")
    groups: dict[tuple[int, int], tuple[list, list]] = defaultdict(lambda: ([], []))
    for p, q in zip(points, predicted):
        groups[p.resolution][0].append(p.quality)
        groups[p.resolution][1].append(q)
    out = {}
    for res in sorted(groups, key=lambda r: r[0] * r[1]):
        try:
            out[res] = plcc(*groups[res])
        except DegenerateInput:
            out[res] = float("nan")
    return out
