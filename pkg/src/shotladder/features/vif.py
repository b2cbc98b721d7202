"""Quality-aware VIF features from a Gaussian scale mixture model of Haar subbands.

Each detail subband is cut into non-overlapping 3x3 neighbourhoods (M = 9).
Their covariance ``C_U`` is diagonalized, the per-neighbourhood multiplier
``s_i^2`` is estimated, and the information carried along eigenvector j is

    I_j = mean_i log2(1 + s_i^2 * lambda_j / sigma_n^2)

Four scales times two orientations times nine eigen-directions give 72
values per frame; the same 72 are taken on frame differences, plus the mean
absolute frame difference, all averaged over time (145 in total).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from shotladder.errors import NeedTwoFrames, TooFewBlocks
from shotladder.features.lowlevel import FeatureVector, _map
from shotladder.features.yuv import FEATURE_SIZE, YUVVideo

N_SCALES = 4
ORIENTATIONS = ("LH", "HL")
M = 9
BLOCK = 3


@dataclass(frozen=True)
class VifConfig:
    sigma_n_sq: float = 2.0
    # luma is scaled to this range before modelling so sigma_n_sq keeps its
    # usual meaning on 8-bit-like intensities
    pixel_scale: float = 255.0
    jacobi_tol: float = 1e-10

    def __post_init__(self):
        if not self.sigma_n_sq > 0:
            raise ValueError("sigma_n_sq must be > 0")


@dataclass
class SubbandPyramid:
    """``bands[k][b]`` is orientation b (0: LH, 1: HL) at scale k (0 = finest)."""

    bands: list[tuple[np.ndarray, np.ndarray]]

    def __iter__(self):
        for k, pair in enumerate(self.bands):
            for b, band in enumerate(pair):
                yield k, b, band


@dataclass
class GsmModel:
    cov: np.ndarray
    eigvals: np.ndarray  # descending, clamped at 0
    eigvecs: np.ndarray  # columns
    s_sq: np.ndarray

    @property
    def block_count(self) -> int:
        return len(self.s_sq)


def _pad16(frame: np.ndarray) -> np.ndarray:
    h, w = frame.shape
    ph, pw = (-h) % 16, (-w) % 16
    if ph or pw:
        frame = np.pad(frame, ((0, ph), (0, pw)), mode="edge")
    return frame


def haar_level(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One orthonormal 2-D Haar step: (LL, LH, HL, HH).

    HL is high-pass along rows (responds to vertical edges), LH high-pass
    along columns.
    """
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    lh = (a + b - c - d) / 2.0
    hl = (a - b + c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return ll, lh, hl, hh


def haar_decompose(frame: np.ndarray, levels: int = N_SCALES):
    """Full decomposition: list of (LH, HL, HH) per level and the final LL."""
    x = _pad16(np.asarray(frame, dtype=np.float64))
    details = []
    for _ in range(levels):
        x, lh, hl, hh = haar_level(x)
        details.append((lh, hl, hh))
    return details, x


def wavelet_subbands(frame: np.ndarray, levels: int = N_SCALES) -> SubbandPyramid:
    details, _ = haar_decompose(frame, levels)
    return SubbandPyramid([(lh, hl) for lh, hl, _ in details])


def jacobi_eigh(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Returns eigenvalues sorted descending and the matching eigenvectors as
    columns. Sweeps stop once every off-diagonal entry is below ``tol``
    (relative to the largest diagonal entry when that exceeds 1).
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, float(np.max(np.abs(np.diag(a)))) if n else 1.0)
    for _ in range(max_sweeps):
        off = np.max(np.abs(a - np.diag(np.diag(a)))) if n > 1 else 0.0
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/cols p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def neighbourhoods(band: np.ndarray) -> np.ndarray:
    """Non-overlapping 3x3 blocks as rows of an (N, 9) matrix."""
    h, w = band.shape
    nby, nbx = h // BLOCK, w // BLOCK
    tiles = band[: nby * BLOCK, : nbx * BLOCK].reshape(nby, BLOCK, nbx, BLOCK)
    return tiles.transpose(0, 2, 1, 3).reshape(nby * nbx, M)


def gsm_fit(band: np.ndarray, config: VifConfig = VifConfig()) -> GsmModel:
    vecs = neighbourhoods(np.asarray(band, dtype=np.float64))
    if len(vecs) < M:
        raise TooFewBlocks(f"{len(vecs)} neighbourhoods; need at least {M}")
    vecs = vecs - vecs.mean(axis=0)
    cov = vecs.T @ vecs / len(vecs)
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = jacobi_eigh(cov, config.jacobi_tol)
    eigvals = np.maximum(eigvals, 0.0)
    # pseudo-inverse through the eigen-basis; drop numerically null directions
    cutoff = max(eigvals[0], 0.0) * M * np.finfo(float).eps * 16
    inv = np.where(eigvals > cutoff, 1.0 / np.where(eigvals > cutoff, eigvals, 1.0), 0.0)
    proj = vecs @ eigvecs
    s_sq = np.maximum(0.0, (proj * proj * inv).sum(axis=1) / M)
    return GsmModel(cov, eigvals, eigvecs, s_sq)


def subband_information(model: GsmModel, config: VifConfig = VifConfig()) -> np.ndarray:
    """Per-eigenvector information ``I_j`` (j = 1..9), non-increasing in j."""
    ratio = np.outer(model.s_sq, model.eigvals) / config.sigma_n_sq
    return np.log2(1.0 + ratio).mean(axis=0)


def frame_information(frame: np.ndarray, config: VifConfig = VifConfig()) -> np.ndarray:
    """72 values ordered scale-major, then orientation, then eigen-index."""
    pyr = wavelet_subbands(np.asarray(frame) * config.pixel_scale)
    return np.concatenate([subband_information(gsm_fit(band, config), config) for _, _, band in pyr])


def viff_names() -> list[str]:
    base = [f"s{k + 1}_{o}_j{j + 1}" for k in range(N_SCALES) for o in ORIENTATIONS for j in range(M)]
    return [f"vif_F_{n}" for n in base] + [f"vif_D_{n}" for n in base] + ["vif_absdiff"]


VIFF_NAMES = viff_names()


def vif_features(
    video: YUVVideo | np.ndarray,
    config: VifConfig = VifConfig(),
    size: tuple[int, int] | None = FEATURE_SIZE,
    workers: int = 1,
) -> FeatureVector:
    if isinstance(video, YUVVideo):
        luma = video.resized(size).y
    else:
        luma = np.asarray(video, dtype=np.float64)
    if len(luma) < 2:
        raise NeedTwoFrames("VIF features need at least two frames")
    diffs = np.diff(luma, axis=0)
    fn = lambda f: frame_information(f, config)  # noqa: E731
    f_info = np.stack(_map(fn, luma, workers))
    d_info = np.stack(_map(fn, diffs, workers))
    absdiff = np.mean([np.abs(d).mean() for d in diffs])
    values = np.concatenate([f_info.mean(axis=0), d_info.mean(axis=0), [absdiff]])
    return FeatureVector("VIFF", list(VIFF_NAMES), values)
