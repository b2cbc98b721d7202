"""In-memory orchestration shared by the command line and the demos.

Everything here works on lists of :class:`RQPoint` plus a feature store
(set id -> video id -> vector); persistence lives in the CLI.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from shotladder.errors import DegenerateInput, ShotLadderError
from shotladder.evaluation.protocol import FoldPlan
from shotladder.ladder import (
    LADDER_STEPS,
    QUALITY_WINDOW,
    BitrateLadder,
    convex_hull,
    crossover_bitrates,
    crossover_ladder,
    curves_by_resolution,
    hull_ladder,
    in_window,
    ladder_from_predictions,
    pixels,
    top_bottom_correction,
    two_step_ladder,
)
from shotladder.media.jobs import Resolution, RQPoint
from shotladder.regression.crossover import CrossoverModel, predict_crossovers, train_crossover
from shotladder.regression.forest import ForestModel, ForestParams, predict, train_extra_trees
from shotladder.regression.metrics import plcc
from shotladder.regression.samples import FeatureStore, build_samples, has_features

log = logging.getLogger(__name__)


def train_quality_model(
    points: Sequence[RQPoint],
    features: FeatureStore,
    variant: str,
    with_stats: bool,
    params: ForestParams = ForestParams(),
    seed: int = 0,
    workers: int = 1,
    window: tuple[float, float] = QUALITY_WINDOW,
) -> ForestModel:
    """Fit the quality regressor on renditions whose measured score lies in ``window``."""
    pts = [p for p in in_window(points, window) if has_features(p.video_id, features, variant)]
    x, y, names = build_samples(pts, features, variant, with_stats)
    return train_extra_trees(x, y, params, seed, names, workers)


def predict_quality(
    model: ForestModel, points: Sequence[RQPoint], features: FeatureStore, variant: str, with_stats: bool
) -> np.ndarray:
    x, _, names = build_samples(points, features, variant, with_stats)
    if not len(x):
        return np.empty(0)
    return predict(model, x, names)


def predicted_ladder(
    model: ForestModel,
    points: Sequence[RQPoint],
    features: FeatureStore,
    variant: str,
    with_stats: bool,
    steps: Sequence[float] = LADDER_STEPS,
) -> BitrateLadder:
    """Corrected ladder from predicted qualities of one video's inference renditions."""
    q = predict_quality(model, points, features, variant, with_stats)
    return ladder_from_predictions(curves_by_resolution(points, q), steps, correct=True)


def exhaustive_hull_ladder(points: Sequence[RQPoint], steps: Sequence[float] = LADDER_STEPS) -> BitrateLadder:
    return top_bottom_correction(hull_ladder(convex_hull(points), steps))


def true_crossovers(points: Sequence[RQPoint], resolutions: Sequence[Resolution]) -> list[float]:
    """Cross-over bitrates of one video's measured per-resolution curves (window-filtered)."""
    return crossover_bitrates(curves_by_resolution(in_window(points)), resolutions)


def _group(points: Sequence[RQPoint]) -> dict[str, list[RQPoint]]:
    out: dict[str, list[RQPoint]] = {}
    for p in points:
        out.setdefault(p.video_id, []).append(p)
    return out


@dataclass
class FoldRecord:
    round: int
    test: tuple[str, ...]
    validation_plcc: float
    test_plcc: dict[Resolution, float] = field(default_factory=dict)


@dataclass
class CrossValidation:
    """Per-video ladders for every test video, plus correlation records per round."""

    ladders: dict[str, BitrateLadder]
    records: list[FoldRecord]
    models: list[ForestModel] = field(default_factory=list)

    def mean_test_plcc(self) -> dict[Resolution, float]:
        keys = sorted({r for rec in self.records for r in rec.test_plcc}, key=pixels)
        return {r: float(np.nanmean([rec.test_plcc.get(r, np.nan) for rec in self.records])) for r in keys}


def _safe_plcc(a, b) -> float:
    try:
        return plcc(a, b)
    except DegenerateInput:
        return float("nan")


def cross_validate_quality(
    plan: FoldPlan,
    fast_points: Sequence[RQPoint],
    features: FeatureStore,
    variant: str,
    with_stats: bool,
    inference_crfs: Sequence[int],
    params: ForestParams = ForestParams(),
    seed: int = 0,
    workers: int = 1,
    steps: Sequence[float] = LADDER_STEPS,
    keep_models: bool = False,
    window: tuple[float, float] = QUALITY_WINDOW,
) -> CrossValidation:
    """Train on each round's training videos, predict ladders for its test videos."""
    by_video = _group(fast_points)
    ladders: dict[str, BitrateLadder] = {}
    records: list[FoldRecord] = []
    models: list[ForestModel] = []
    allowed = set(inference_crfs)
    for k, rnd in enumerate(plan.rounds):
        train_pts = [p for v in rnd.train for p in by_video.get(v, [])]
        model = train_quality_model(train_pts, features, variant, with_stats, params, seed + k, workers, window)
        if keep_models:
            models.append(model)
        val_pts = [p for p in in_window([p for v in rnd.validation for p in by_video.get(v, [])], window)
                   if has_features(p.video_id, features, variant)]
        val = _safe_plcc([p.quality for p in val_pts], predict_quality(model, val_pts, features, variant, with_stats)) \
            if len(val_pts) >= 2 else float("nan")
        rec = FoldRecord(k, rnd.test, val)
        test_pts = [p for p in in_window([p for v in rnd.test for p in by_video.get(v, [])], window)
                    if has_features(p.video_id, features, variant)]
        if test_pts:
            pred = predict_quality(model, test_pts, features, variant, with_stats)
            for res in sorted({p.resolution for p in test_pts}, key=pixels):
                idx = [i for i, p in enumerate(test_pts) if p.resolution == res]
                rec.test_plcc[res] = _safe_plcc([test_pts[i].quality for i in idx], pred[idx])
        records.append(rec)
        for vid in rnd.test:
            pts = [p for p in by_video.get(vid, []) if p.job.crf in allowed]
            if not has_features(vid, features, variant):
                log.warning("skipping %s: missing features for %s", vid, variant)
                continue
            try:
                ladders[vid] = predicted_ladder(model, pts, features, variant, with_stats, steps)
            except ShotLadderError as err:
                log.warning("no ladder for %s: %s", vid, err)
    return CrossValidation(ladders, records, models)


def cross_validate_crossover(
    plan: FoldPlan,
    fast_points: Sequence[RQPoint],
    llf1: Mapping[str, np.ndarray],
    resolutions: Sequence[Resolution],
    params: ForestParams = ForestParams(),
    rfe_params: ForestParams = ForestParams(n_trees=20),
    seed: int = 0,
    steps: Sequence[float] = LADDER_STEPS,
    n_select: int = 9,
) -> tuple[dict[str, BitrateLadder], list[CrossoverModel]]:
    """Cross-over baseline: learn per-pair cross-over bitrates from LLF1 features."""
    by_video = _group(fast_points)
    targets = {}
    for vid, pts in by_video.items():
        try:
            targets[vid] = true_crossovers(pts, resolutions)
        except ShotLadderError as err:
            log.warning("no cross-over targets for %s: %s", vid, err)
    ladders: dict[str, BitrateLadder] = {}
    models = []
    for k, rnd in enumerate(plan.rounds):
        train = {v: targets[v] for v in rnd.train if v in targets and v in llf1}
        model = train_crossover(llf1, train, resolutions, params, rfe_params, n_select, seed + k)
        models.append(model)
        for vid in rnd.test:
            if vid in llf1:
                ladders[vid] = crossover_ladder(predict_crossovers(model, llf1[vid]), resolutions, steps)
    return ladders, models


def two_step_ladders(fast_points: Sequence[RQPoint], steps: Sequence[float] = LADDER_STEPS) -> dict[str, BitrateLadder]:
    out = {}
    for vid, pts in _group(fast_points).items():
        try:
            out[vid] = two_step_ladder(convex_hull(pts), steps)
        except ShotLadderError as err:
            log.warning("no fast-encoder hull for %s: %s", vid, err)
    return out
