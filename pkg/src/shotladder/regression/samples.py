"""Design matrices for the quality model.

A sample is one encoded rendition: the source video's features, the
rendition's bitrate, width and height, and (optionally) its compression
statistics. LLF2 is not stored; it is rebuilt per rendition from the
stored LLF1 vector and the rendition's bitrate.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from shotladder.features.lowlevel import LLF2_NAMES, llf2_from_llf1
from shotladder.features.vif import VIFF_NAMES
from shotladder.media.jobs import CompressionStats, RQPoint

FEATURE_VARIANTS: dict[str, tuple[str, ...]] = {
    "none": (),
    "llf2": ("LLF2",),
    "viff": ("VIFF",),
    "llf2+viff": ("LLF2", "VIFF"),
}
META_NAMES = ["bitrate_kbps", "width", "height"]
STAT_NAMES = list(CompressionStats.FIELDS)

FeatureStore = Mapping[str, Mapping[str, np.ndarray]]  # set_id -> video_id -> values


def required_sets(variant: str) -> set[str]:
    sets = FEATURE_VARIANTS[variant]
    return {"LLF1" if s == "LLF2" else s for s in sets}


def sample_names(variant: str, with_stats: bool) -> list[str]:
    names: list[str] = []
    for s in FEATURE_VARIANTS[variant]:
        names += LLF2_NAMES if s == "LLF2" else VIFF_NAMES
    names += META_NAMES
    if with_stats:
        names += STAT_NAMES
    return names


def sample_row(point: RQPoint, features: FeatureStore, variant: str, with_stats: bool) -> np.ndarray:
    parts = []
    for s in FEATURE_VARIANTS[variant]:
        if s == "LLF2":
            parts.append(llf2_from_llf1(features["LLF1"][point.video_id], point.bitrate))
        else:
            parts.append(np.asarray(features[s][point.video_id], dtype=np.float64))
    parts.append([point.bitrate, point.job.width, point.job.height])
    if with_stats:
        parts.append(point.stats.as_tuple())
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def build_samples(
    points: Iterable[RQPoint], features: FeatureStore, variant: str, with_stats: bool
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    pts = list(points)
    names = sample_names(variant, with_stats)
    if not pts:
        return np.empty((0, len(names))), np.empty(0), names
    x = np.stack([sample_row(p, features, variant, with_stats) for p in pts])
    y = np.array([p.quality for p in pts])
    return x, y, names


def has_features(video_id: str, features: FeatureStore, variant: str) -> bool:
    return all(video_id in features.get(s, {}) for s in required_sets(variant))


def select_points(points: Iterable[RQPoint], videos: Sequence[str], crfs: Sequence[int] | None = None) -> list[RQPoint]:
    vids = set(videos)
    allowed = None if crfs is None else set(crfs)
    return [p for p in points if p.video_id in vids and (allowed is None or p.job.crf in allowed)]
