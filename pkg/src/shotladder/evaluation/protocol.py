"""Ladder-to-curve reconstruction, fold planning, closeness and CRF maps."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from shotladder.errors import EmptyCurve, EmptyInput, NoCommonVideos, TooFewVideos
from shotladder.ladder import QUALITY_WINDOW, BitrateLadder, RQCurve, in_window
from shotladder.media.jobs import RQPoint


def rq_curve_from_ladder(
    ladder: BitrateLadder,
    points: Iterable[RQPoint],
    window: tuple[float, float] | None = QUALITY_WINDOW,
) -> RQCurve:
    """Measured points a client would see when streaming this ladder.

    Step i contributes the points at its resolution whose bitrate lies in
    [b_i, b_{i+1}); the last step is open-ended.
    """
    pts = in_window(points, window) if window else list(points)
    steps = list(ladder.steps)
    chosen: dict[tuple[float, float], RQPoint] = {}
    for i, (lo, res) in enumerate(zip(steps, ladder.resolutions)):
        hi = steps[i + 1] if i + 1 < len(steps) else math.inf
        for p in pts:
            if p.resolution == tuple(res) and lo <= p.bitrate < hi:
                chosen.setdefault((p.bitrate, p.quality), p)
    if not chosen:
        raise EmptyCurve("no measured point falls inside any ladder step")
    return RQCurve(sorted(chosen.values(), key=lambda p: (p.bitrate, p.quality)))


# folds --------------------------------------------------------------------

@dataclass(frozen=True)
class FoldRound:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[str, ...], ...]
    rounds: tuple[FoldRound, ...]
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)


def kfold_split(video_ids: Iterable[str], k: int = 5, seed: int = 0, validation_fraction: float = 0.1) -> FoldPlan:
    """Seeded k-fold plan; each round splits the other folds 90/10 into train/validation."""
    ids = sorted(set(video_ids))
    if len(ids) < k:
        raise TooFewVideos(f"{len(ids)} videos cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    shuffled = [ids[i] for i in rng.permutation(len(ids))]
    folds = tuple(tuple(f) for f in np.array_split(np.array(shuffled, dtype=object), k))
    rounds = []
    for r in range(k):
        rest = [v for j, f in enumerate(folds) if j != r for v in f]
        n_val = int(round(validation_fraction * len(rest))) if len(rest) > 1 else 0
        n_val = min(max(n_val, 1 if len(rest) > 1 else 0), len(rest) - 1)
        order = np.random.default_rng([seed, r]).permutation(len(rest))
        val = tuple(sorted(rest[i] for i in order[:n_val]))
        train = tuple(sorted(rest[i] for i in order[n_val:]))
        rounds.append(FoldRound(train, val, tuple(sorted(folds[r]))))
    return FoldPlan(tuple(tuple(str(v) for v in f) for f in folds), tuple(rounds), seed)


# closeness ----------------------------------------------------------------

@dataclass(frozen=True)
class BDPair:
    """BD-rate (%) and BD-quality of one curve against the fixed ladder."""

    rate: float
    quality: float


def _reaches(gain: float, target: float, share: float) -> bool:
    # at least `share` of the reference gain; for a negative reference this
    # allows losing up to (1 + (1 - share)) times as much
    return gain >= target - (1.0 - share) * abs(target)


def f75(method: Sequence[BDPair | None], hull: Sequence[BDPair | None], share: float = 0.75) -> float:
    """Fraction of videos where the method keeps ``share`` of the hull's rate saving and quality gain.

    ``None`` marks a comparison without overlap: a failure on the method
    side, zero gain on the hull side.
    """
    if len(method) != len(hull):
        raise ValueError("method and hull lists must be paired")
    if not method:
        raise EmptyInput("no paired samples")
    ok = 0
    for m, h in zip(method, hull):
        if m is None:
            continue
        h = h or BDPair(0.0, 0.0)
        if _reaches(-m.rate, -h.rate, share) and _reaches(m.quality, h.quality, share):
            ok += 1
    return ok / len(method)


# CRF mapping --------------------------------------------------------------

@dataclass
class CrfMap:
    """``pairs[(video, resolution, target_crf)]`` is the best-matching fast CRF."""

    pairs: dict[tuple[str, tuple[int, int], int], int]

    def distribution(self) -> dict[int, Counter]:
        out: dict[int, Counter] = defaultdict(Counter)
        for (_, _, tcrf), fcrf in self.pairs.items():
            out[tcrf][fcrf] += 1
        return dict(sorted(out.items()))

    def rows(self) -> list[list]:
        return [[t, f, n] for t, dist in self.distribution().items() for f, n in sorted(dist.items())]


def crf_map(fast: Iterable[RQPoint], target: Iterable[RQPoint]) -> CrfMap:
    """For every target rendition, the fast-encoder CRF whose bitrate is closest in log scale."""
    fast_idx: dict[tuple[str, tuple[int, int]], list[tuple[int, float]]] = defaultdict(list)
    for p in fast:
        fast_idx[(p.video_id, p.resolution)].append((p.job.crf, math.log(p.bitrate)))
    target = list(target)
    if not {p.video_id for p in target} & {v for v, _ in fast_idx}:
        raise NoCommonVideos("fast and target grids share no video")
    pairs = {}
    for p in target:
        cands = fast_idx.get((p.video_id, p.resolution))
        if not cands:
            continue
        lb = math.log(p.bitrate)
        best = min(cands, key=lambda c: (abs(c[1] - lb), c[0]))
        pairs[(p.video_id, p.resolution, p.job.crf)] = best[0]
    return CrfMap(pairs)
