"""Encode jobs, rate-quality points and the encode-grid planner."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from shotladder.errors import EmptyManifest, InvalidJob, InvalidResolution

Resolution = tuple[int, int]

# largest first, matching the planner's iteration order
DEFAULT_RESOLUTIONS: tuple[Resolution, ...] = (
    (3840, 2160),
    (2560, 1440),
    (1920, 1080),
    (1280, 720),
    (960, 540),
)

CODECS = ("x265", "svtav1", "vpx-vp9", "aom-av1", "synthetic")

# ffmpeg encoder names
FFMPEG_ENCODERS = {
    "x265": "libx265",
    "svtav1": "libsvtav1",
    "vpx-vp9": "libvpx-vp9",
    "aom-av1": "libaom-av1",
}

MISSING = -1.0


def resolution_label(res: Resolution) -> str:
    return f"{res[1]}p"


@dataclass(frozen=True, order=True)
class EncodeJob:
    video_id: str
    codec: str
    preset: str
    width: int
    height: int
    crf: int

    @property
    def resolution(self) -> Resolution:
        return (self.width, self.height)

    def key(self) -> str:
        """Content address of the job, stable across runs and machines."""
        raw = "|".join(
            str(v) for v in (self.video_id, self.codec, self.preset, self.width, self.height, self.crf)
        )
        return hashlib.sha256(raw.encode()).hexdigest()[:24]


@dataclass(frozen=True)
class CompressionStats:
    """Mean QP and mean kb/s of I, P and B frames; -1 marks an absent value."""

    qp_i: float = MISSING
    qp_p: float = MISSING
    qp_b: float = MISSING
    br_i: float = MISSING
    br_p: float = MISSING
    br_b: float = MISSING

    FIELDS = ("qp_i", "qp_p", "qp_b", "br_i", "br_p", "br_b")

    def __post_init__(self):
        for name in self.FIELDS:
            v = getattr(self, name)
            if not (v == MISSING or v >= 0):
                raise ValueError(f"{name} must be -1 or >= 0, got {v}")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, n)) for n in self.FIELDS)

    @classmethod
    def missing(cls) -> "CompressionStats":
        return cls()


@dataclass(frozen=True)
class RQPoint:
    job: EncodeJob
    bitrate: float
    quality: float
    stats: CompressionStats = field(default_factory=CompressionStats)

    def __post_init__(self):
        if not self.bitrate > 0:
            raise InvalidJob(f"bitrate must be > 0, got {self.bitrate}")
        if not 0.0 <= self.quality <= 100.0:
            raise InvalidJob(f"quality must be within [0, 100], got {self.quality}")

    @property
    def resolution(self) -> Resolution:
        return self.job.resolution

    @property
    def video_id(self) -> str:
        return self.job.video_id


@dataclass
class EncoderSettings:
    """Grid definition for one (codec, preset) pair."""

    codec: str
    preset: str
    crfs: Sequence[int]
    resolutions: Sequence[Resolution] = DEFAULT_RESOLUTIONS
    crf_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.codec not in CODECS:
            raise InvalidJob(f"unknown codec {self.codec!r}; expected one of {CODECS}")
        self.crfs = [int(c) for c in self.crfs]
        self.resolutions = [tuple(int(x) for x in r) for r in self.resolutions]
        if not self.crfs:
            raise InvalidJob(f"{self.codec}: at least one CRF is required")
        if not self.resolutions:
            raise InvalidJob(f"{self.codec}: at least one resolution is required")
        if self.crf_range is None:
            self.crf_range = (min(self.crfs), max(self.crfs))


def crf_grid(lo: int, hi: int, step: int = 2) -> list[int]:
    return list(range(lo, hi + 1, step))


def plan_encode_grid(
    manifest: Iterable[str],
    settings: EncoderSettings,
    known_resolutions: Sequence[Resolution] = DEFAULT_RESOLUTIONS,
) -> list[EncodeJob]:
    """Expand videos x resolutions x CRFs into jobs.

    Order is video (as given), resolution by descending pixel count, CRF
    ascending. Duplicate video ids and duplicate CRFs are collapsed.
    """
    videos = list(dict.fromkeys(manifest))
    if not videos:
        raise EmptyManifest("manifest lists no videos")
    known = {tuple(r) for r in known_resolutions}
    for res in settings.resolutions:
        if tuple(res) not in known:
            raise InvalidResolution(f"{res[0]}x{res[1]} is not a configured resolution")
    lo, hi = settings.crf_range
    for crf in settings.crfs:
        if not lo <= crf <= hi:
            raise InvalidJob(f"CRF {crf} outside {settings.codec} range [{lo}, {hi}]")

    resolutions = sorted(set(settings.resolutions), key=lambda r: (r[0] * r[1], r[1]), reverse=True)
    crfs = sorted(set(settings.crfs))
    return [
        EncodeJob(vid, settings.codec, settings.preset, w, h, crf)
        for vid in videos
        for (w, h) in resolutions
        for crf in crfs
    ]
