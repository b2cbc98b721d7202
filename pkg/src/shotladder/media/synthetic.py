"""A closed-form stand-in for real encoders and the VMAF scorer.

Rate follows ``exp(a - c * crf)`` per resolution and quality a logistic in
log-rate. Compression statistics are derived from the same latent content
descriptors so that they carry information a quality model can use, the way
QP and per-frame-type bitrates do for real encoders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from shotladder.media.jobs import DEFAULT_RESOLUTIONS, CompressionStats, EncodeJob, Resolution, RQPoint

UHD_PIXELS = 3840 * 2160

# frame-type counts used for a 64-frame clip (1 IDR, mini-GOPs of 4)
FRAME_COUNTS = {"I": 1, "P": 16, "B": 47}


@dataclass(frozen=True)
class ResolutionModel:
    q_max: float
    midpoint: float  # ln(kbps) at which quality = q_max / 2
    slope: float  # per ln(kbps)
    rate_intercept: float  # a in exp(a - c * crf)
    rate_slope: float  # c in exp(a - c * crf)

    def __post_init__(self):
        if not 0 < self.q_max <= 100:
            raise ValueError(f"q_max must be in (0, 100], got {self.q_max}")
        if not self.slope > 0:
            raise ValueError("slope must be > 0")
        if not self.rate_slope > 0:
            raise ValueError("rate_slope must be > 0 so bitrate falls with CRF")


@dataclass(frozen=True)
class SyntheticCodecParams:
    models: dict[Resolution, ResolutionModel]
    noise_sd: float = 0.0
    seed: int = 0
    spatial: float = 0.5
    temporal: float = 0.5

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")

    def model(self, res: Resolution) -> ResolutionModel:
        try:
            return self.models[tuple(res)]
        except KeyError:
            raise KeyError(f"no synthetic model for {res[0]}x{res[1]}") from None


@dataclass(frozen=True)
class EncoderProfile:
    """How one synthetic (codec, preset) differs from the reference encoder.

    ``rate_offset`` shifts log-rate (negative = more efficient),
    ``res_rate_offset`` adds a per-resolution shift proportional to
    log(pixel ratio), so ladders built for one profile transfer imperfectly.
    """

    rate_offset: float = 0.0
    res_rate_offset: float = 0.0
    slope_scale: float = 1.0
    crf_scale: float = 1.0


DEFAULT_PROFILES = {
    "veryfast": EncoderProfile(),
    "fast": EncoderProfile(rate_offset=-0.05, res_rate_offset=-0.01),
    "medium": EncoderProfile(rate_offset=-0.10, res_rate_offset=-0.02),
    "slow": EncoderProfile(rate_offset=-0.16, res_rate_offset=-0.03, slope_scale=1.03),
}


def params_from_content(
    spatial: float,
    temporal: float,
    *,
    resolutions=DEFAULT_RESOLUTIONS,
    profile: EncoderProfile = EncoderProfile(),
    noise_sd: float = 0.0,
    seed: int = 0,
) -> SyntheticCodecParams:
    """Build per-resolution models from two content descriptors in [0, 1].

    ``spatial`` raises the bits needed and the loss from downscaling;
    ``temporal`` raises the bits needed.
    """
    s = float(np.clip(spatial, 0.0, 1.0))
    t = float(np.clip(temporal, 0.0, 1.0))
    c = 0.105 * profile.crf_scale
    models = {}
    for w, h in resolutions:
        rho = (w * h) / UHD_PIXELS
        log_rho = math.log(rho)
        a = 11.4 + 0.7 * log_rho + 1.4 * s + 1.0 * t + profile.rate_offset + profile.res_rate_offset * log_rho
        # a ceiling concave in log(pixels) keeps the envelope over
        # resolutions close to concave, so every resolution reaches the hull
        midpoint = 6.55 + 1.1 * s + 0.8 * t + 0.8 * log_rho
        q_max = 100.0 - (0.8 + 1.2 * s) * log_rho**2
        slope = (1.3 + 0.4 * (1.0 - s)) * profile.slope_scale
        models[(w, h)] = ResolutionModel(q_max, midpoint, slope, a, c)
    return SyntheticCodecParams(models, noise_sd=noise_sd, seed=seed, spatial=s, temporal=t)


def synthetic_bitrate(params: SyntheticCodecParams, res: Resolution, crf: float) -> float:
    m = params.model(res)
    return math.exp(m.rate_intercept - m.rate_slope * crf)


def logistic_quality(model: ResolutionModel, bitrate: float) -> float:
    if bitrate <= 0:
        return 0.0
    z = -model.slope * (math.log(bitrate) - model.midpoint)
    if z > 700:
        return 0.0
    return model.q_max / (1.0 + math.exp(z))


def synthetic_stats(params: SyntheticCodecParams, res: Resolution, crf: float, bitrate: float) -> CompressionStats:
    """QP and per-type bitrate analogues, rounded the way x265 prints them."""
    s, t = params.spatial, params.temporal
    qp_p = max(0.0, crf + 1.5 + 3.0 * (s - 0.5) + 2.0 * (t - 0.5))
    qp_i = max(0.0, qp_p - 3.0)
    qp_b = qp_p + 2.5
    w_i, w_p, w_b = 8.0 - 4.0 * t, 1.6 + 0.8 * t, 0.45 + 0.3 * t
    n = FRAME_COUNTS
    scale = bitrate * sum(n.values()) / (n["I"] * w_i + n["P"] * w_p + n["B"] * w_b)
    vals = [qp_i, qp_p, qp_b, w_i * scale, w_p * scale, w_b * scale]
    return CompressionStats(*(round(v, 2) for v in vals))


def synth_codec(params: SyntheticCodecParams, job: EncodeJob) -> RQPoint:
    """Deterministic encode + score of ``job`` under ``params``."""
    res = job.resolution
    bitrate = synthetic_bitrate(params, res, job.crf)
    quality = logistic_quality(params.model(res), bitrate)
    if params.noise_sd > 0:
        rng = np.random.default_rng([params.seed, job.width, job.height, job.crf])
        quality += float(rng.normal(0.0, params.noise_sd))
    quality = float(np.clip(quality, 0.0, 100.0))
    return RQPoint(job, bitrate, quality, synthetic_stats(params, res, job.crf, bitrate))


@dataclass
class SyntheticCodec:
    """Synthetic encoder bound to per-video content descriptors.

    Descriptors come from ``content`` when registered, otherwise they are
    derived from the source frames (see ``content_from_frames``) or, when
    no source is readable, from a hash of the video id.
    """

    profiles: dict[str, EncoderProfile] = field(default_factory=lambda: dict(DEFAULT_PROFILES))
    noise_sd: float = 0.0
    seed: int = 0
    content: dict[str, tuple[float, float]] = field(default_factory=dict)

    def params_for(self, job: EncodeJob, descriptor: tuple[float, float] | None = None) -> SyntheticCodecParams:
        if descriptor is None:
            descriptor = self.content.get(job.video_id)
        if descriptor is None:
            descriptor = hashed_content(job.video_id)
        profile = self.profiles.get(job.preset, EncoderProfile())
        vid_seed = int.from_bytes(job.video_id.encode()[:8].ljust(8, b"\0"), "little") % (2**31)
        return params_from_content(
            *descriptor,
            resolutions=[job.resolution],
            profile=profile,
            noise_sd=self.noise_sd,
            seed=self.seed * 1_000_003 + vid_seed,
        )

    def encode(self, job: EncodeJob, descriptor: tuple[float, float] | None = None) -> RQPoint:
        return synth_codec(self.params_for(job, descriptor), job)


def hashed_content(video_id: str) -> tuple[float, float]:
    import hashlib

    d = hashlib.sha256(video_id.encode()).digest()
    return d[0] / 255.0, d[1] / 255.0


def content_from_frames(luma: np.ndarray) -> tuple[float, float]:
    """Map a (T, H, W) luma stack in [0, 1] to (spatial, temporal) descriptors."""
    y = np.asarray(luma, dtype=np.float64)
    if y.ndim == 2:
        y = y[None]
    gx = np.abs(np.diff(y, axis=2)).mean()
    gy = np.abs(np.diff(y, axis=1)).mean()
    spatial = float(np.clip((gx + gy) / 0.2, 0.0, 1.0))
    temporal = float(np.clip(np.abs(np.diff(y, axis=0)).mean() / 0.1, 0.0, 1.0)) if len(y) > 1 else 0.0
    return spatial, temporal
