"""Synthetic video cohorts for end-to-end runs without sources or external tools.

Each video has two latent content descriptors (spatial, temporal) in
[0, 1]. They drive the synthetic codec's rate-quality curves and, through a
fixed random mixing, most entries of LLF-style and VIFF-style feature
vectors; the remaining entries are distractors.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from shotladder.features.lowlevel import LLF1_NAMES
from shotladder.features.yuv import YUVVideo
from shotladder.features.vif import VIFF_NAMES
from shotladder.media.jobs import DEFAULT_RESOLUTIONS, EncodeJob, Resolution, RQPoint
from shotladder.media.synthetic import DEFAULT_PROFILES, EncoderProfile, SyntheticCodec

# the mixing is part of the cohort's definition, so it does not follow the run seed
_MIX_SEED = 20240611
_DCT = slice(84, 93)


@dataclass(frozen=True)
class CohortVideo:
    video_id: str
    spatial: float
    temporal: float
    llf1: np.ndarray
    viff: np.ndarray


def _mixing(n: int, informative: float, salt: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng([_MIX_SEED, salt])
    w = rng.normal(0.0, 1.0, size=(n, 5))
    w[rng.uniform(size=n) > informative] = 0.0
    return w, rng.uniform(0.5, 2.0, size=n)


def _basis(s: float, t: float) -> np.ndarray:
    return np.array([s, t, s * t, s * s, np.sqrt(t)])


def llf_like(s: float, t: float, rng: np.random.Generator, jitter: float = 0.02) -> np.ndarray:
    """A 93-long vector in LLF1 layout; the DCT-texture block stays positive."""
    w, scale = _mixing(len(LLF1_NAMES), 0.7, 1)
    v = scale * (w @ _basis(s, t)) + rng.normal(0.0, jitter, len(LLF1_NAMES))
    # e, h, l per channel: energy grows with detail, high-band share with motion
    for c in range(3):
        k = 84 + 3 * c
        v[k] = (1.0 + 6.0 * s) * (1.0 - 0.3 * c) + abs(rng.normal(0.0, jitter))
        v[k + 1] = 0.05 + 2.0 * s * (0.5 + t) * (1.0 - 0.3 * c) + abs(rng.normal(0.0, jitter))
        v[k + 2] = 2.0 + 3.0 * s + rng.normal(0.0, jitter)
    return v


def viff_like(s: float, t: float, rng: np.random.Generator, jitter: float = 0.02) -> np.ndarray:
    w, scale = _mixing(len(VIFF_NAMES), 0.6, 2)
    return scale * (w @ _basis(s, t)) + rng.normal(0.0, jitter, len(VIFF_NAMES))


def make_cohort(n: int, seed: int = 0, jitter: float = 0.02) -> list[CohortVideo]:
    """``n`` videos with descriptors spread over [0.05, 0.95]^2."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        s, t = (float(v) for v in rng.uniform(0.05, 0.95, size=2))
        out.append(CohortVideo(f"syn{i:03d}", s, t, llf_like(s, t, rng, jitter), viff_like(s, t, rng, jitter)))
    return out


def feature_store(cohort: Sequence[CohortVideo]) -> dict[str, dict[str, np.ndarray]]:
    return {
        "LLF1": {v.video_id: v.llf1 for v in cohort},
        "VIFF": {v.video_id: v.viff for v in cohort},
    }


def cohort_codec(cohort: Sequence[CohortVideo], noise_sd: float = 0.0, seed: int = 0,
                 profiles: dict[str, EncoderProfile] | None = None) -> SyntheticCodec:
    return SyntheticCodec(
        profiles=dict(profiles or DEFAULT_PROFILES),
        noise_sd=noise_sd,
        seed=seed,
        content={v.video_id: (v.spatial, v.temporal) for v in cohort},
    )


def encode_cohort(
    cohort: Sequence[CohortVideo],
    preset: str,
    crfs: Sequence[int],
    resolutions: Sequence[Resolution] = DEFAULT_RESOLUTIONS,
    noise_sd: float = 0.0,
    seed: int = 0,
) -> list[RQPoint]:
    """Every (video, resolution, CRF) rendition under the synthetic codec."""
    codec = cohort_codec(cohort, noise_sd, seed)
    res = sorted(resolutions, key=lambda r: r[0] * r[1], reverse=True)
    return [
        codec.encode(EncodeJob(v.video_id, "synthetic", preset, w, h, c))
        for v in cohort
        for (w, h) in res
        for c in sorted(crfs)
    ]


# raw sources for the command-line path -------------------------------------------

def synthetic_clip(spatial: float, temporal: float, size: tuple[int, int] = (256, 144), frames: int = 8,
                   seed: int = 0) -> YUVVideo:
    """A moving texture: finer grain with ``spatial``, faster pan with ``temporal``."""
    from scipy import ndimage


    w, h = size
    rng = np.random.default_rng(seed)
    pad = 4 * frames
    field = ndimage.gaussian_filter(rng.standard_normal((h + pad, w + pad)), sigma=8.0 * (1.0 - spatial) + 0.6)
    field = 0.5 + 0.12 * field / field.std()
    step = temporal * 4.0
    y = np.stack([ndimage.shift(field, (0.0, -step * k), order=1, mode="wrap")[:h, :w] for k in range(frames)])
    tint = rng.uniform(0.4, 0.6, size=2)
    u = np.full((frames, h // 2, w // 2), tint[0]) + 0.05 * (y[:, ::2, ::2] - 0.5)
    v = np.full((frames, h // 2, w // 2), tint[1]) - 0.05 * (y[:, ::2, ::2] - 0.5)
    return YUVVideo(np.clip(y, 0, 1), np.clip(u, 0, 1), np.clip(v, 0, 1))


def write_synthetic_sources(out_dir, n: int, seed: int = 0, size: tuple[int, int] = (256, 144),
                            frames: int = 8):
    """Write ``n`` raw 4:2:0 clips and a manifest describing them; returns the manifest path."""
    from pathlib import Path

    from shotladder.features.yuv import write_yuv
    from shotladder.manifest import Manifest, ManifestEntry

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(n):
        s, t = (float(v) for v in rng.uniform(0.05, 0.95, size=2))
        vid = f"clip{i:03d}"
        write_yuv(out / f"{vid}.yuv", synthetic_clip(s, t, size, frames, seed=seed * 7919 + i))
        entries.append(ManifestEntry(vid, f"{vid}.yuv", size[0], size[1], 30.0, "yuv420p", 8, frames))
    path = out / "manifest.csv"
    Manifest(entries).write(path)
    return path
