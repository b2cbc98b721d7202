"""Low-level content features: GLCM, temporal coherence, SI/TI/CTI,
colorfulness, chroma intensity and DCT texture energy.

All functions take a :class:`YUVVideo` whose planes are already at the
analysis size; :func:`extract_llf` handles the resize.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import fft, ndimage

from shotladder.errors import BlockTooLarge, InvalidBitrate, MissingBitrate, NeedTwoFrames
from shotladder.features.pooling import F_ALL, F_MS, pool, stat_names, two_level
from shotladder.features.yuv import FEATURE_SIZE, YUVVideo

GLCM_BLOCK = 64
GLCM_LEVELS = 32
# (row, col) displacement for 0, 45, 90 and 135 degrees at distance 1
GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))
GLCM_PROPS = ("correlation", "contrast", "energy", "homogeneity")

DCT_BLOCK = 32
CHROMA_WEIGHT = 5.0
COHERENCE_EPS = 1e-12
DEGENERATE_TEXTURE = -1e9

SET_SIZES = {"LLF1": 93, "LLF2": 96, "VIFF": 145}


@dataclass
class FeatureVector:
    set_id: str
    names: list[str]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")
        expected = SET_SIZES.get(self.set_id)
        if expected is not None and len(self.values) != expected:
            raise ValueError(f"{self.set_id} must have {expected} values, got {len(self.values)}")

    def __len__(self) -> int:
        return len(self.values)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def _map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """Ordered map; results never depend on the worker count."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _blocks(plane: np.ndarray, size: int) -> np.ndarray:
    """Non-overlapping size x size tiles, remainder discarded; shape (n, size, size)."""
    h, w = plane.shape
    nby, nbx = h // size, w // size
    if nby == 0 or nbx == 0:
        raise BlockTooLarge(f"{w}x{h} plane is smaller than one {size}x{size} block")
    tiles = plane[: nby * size, : nbx * size].reshape(nby, size, nbx, size)
    return tiles.transpose(0, 2, 1, 3).reshape(nby * nbx, size, size)


# GLCM ---------------------------------------------------------------------

def quantize(plane: np.ndarray, levels: int = GLCM_LEVELS) -> np.ndarray:
    return np.clip((np.asarray(plane) * levels).astype(np.int64), 0, levels - 1)


def glcm_matrices(blocks_q: np.ndarray, levels: int = GLCM_LEVELS) -> np.ndarray:
    """Symmetric co-occurrence matrices, each angle normalized, then averaged.

    ``blocks_q`` holds quantized tiles, shape (n, b, b); returns (n, L, L).
    """
    n, b, _ = blocks_q.shape
    base = (np.arange(n) * levels * levels)[:, None, None]
    out = np.zeros((n, levels, levels))
    for dr, dc in GLCM_OFFSETS:
        r0, r1 = max(0, -dr), b - max(0, dr)
        c0, c1 = max(0, -dc), b - max(0, dc)
        a = blocks_q[:, r0:r1, c0:c1]
        nb = blocks_q[:, r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        m = np.bincount((base + a * levels + nb).ravel(), minlength=n * levels * levels)
        m = m.reshape(n, levels, levels).astype(np.float64)
        m = m + m.transpose(0, 2, 1)
        out += m / m.sum(axis=(1, 2), keepdims=True)
    return out / len(GLCM_OFFSETS)


def glcm_properties(p: np.ndarray) -> dict[str, np.ndarray]:
    """correlation, contrast, energy, homogeneity for a stack of normalized GLCMs."""
    levels = p.shape[-1]
    i = np.arange(levels, dtype=np.float64)[:, None]
    j = np.arange(levels, dtype=np.float64)[None, :]
    diff2 = (i - j) ** 2
    contrast = np.einsum("nij,ij->n", p, diff2)
    homogeneity = np.einsum("nij,ij->n", p, 1.0 / (1.0 + diff2))
    energy = np.sqrt(np.einsum("nij,nij->n", p, p))
    mu_i = np.einsum("nij,i->n", p, i[:, 0])
    mu_j = np.einsum("nij,j->n", p, j[0])
    var_i = np.einsum("nij,ni->n", p, (i[:, 0][None, :] - mu_i[:, None]) ** 2)
    var_j = np.einsum("nij,nj->n", p, (j[0][None, :] - mu_j[:, None]) ** 2)
    cov = np.einsum("nij,ni,nj->n", p, i[:, 0][None, :] - mu_i[:, None], j[0][None, :] - mu_j[:, None])
    denom = np.sqrt(var_i * var_j)
    flat = denom < 1e-15
    correlation = np.where(flat, 1.0, cov / np.where(flat, 1.0, denom))
    return {"correlation": correlation, "contrast": contrast, "energy": energy, "homogeneity": homogeneity}


def glcm_frame(luma: np.ndarray) -> dict[str, np.ndarray]:
    return glcm_properties(glcm_matrices(_blocks(quantize(luma), GLCM_BLOCK)))


def glcm_features(video: YUVVideo, workers: int = 1) -> np.ndarray:
    per_frame = _map(glcm_frame, video.y, workers)
    return np.concatenate([two_level([f[prop] for f in per_frame], F_MS, F_ALL) for prop in GLCM_PROPS])


# temporal coherence -------------------------------------------------------

def _magnitude(frame: np.ndarray) -> np.ndarray:
    return np.abs(fft.fft2(frame, norm="ortho")).ravel()[1:]


def _coherence_from_magnitudes(fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
    den = fa * fa + fb * fb
    # eps only decides which bins carry energy; on kept bins adding it would
    # just pull identical spectra below 1
    keep = den > COHERENCE_EPS
    return 2.0 * fa[keep] * fb[keep] / den[keep]


def spectral_coherence(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-bin coherence of two frames' FFT magnitudes, DC and empty bins dropped."""
    return _coherence_from_magnitudes(_magnitude(a), _magnitude(b))


def _pooled_coherence(c: np.ndarray) -> np.ndarray:
    if c.size == 0:  # both frames flat: nothing decorrelated
        return np.array([1.0, 0.0, 0.0, 0.0])
    return pool(c, F_ALL)


def temporal_coherence(video: YUVVideo, workers: int = 1) -> np.ndarray:
    if video.n_frames < 2:
        raise NeedTwoFrames("temporal coherence needs at least two frames")
    mags = _map(_magnitude, video.y, workers)
    per_pair = np.stack(
        _map(lambda k: _pooled_coherence(_coherence_from_magnitudes(mags[k], mags[k + 1])),
             range(video.n_frames - 1), workers)
    )  # (T-1, 4)
    return np.concatenate([pool(per_pair[:, i], F_MS) for i in range(4)])


# SI / TI / CTI ------------------------------------------------------------

def sobel_magnitude(luma: np.ndarray) -> np.ndarray:
    """Unnormalized 3x3 Sobel gradient magnitude over interior pixels."""
    gx = ndimage.sobel(luma, axis=1, mode="nearest")
    gy = ndimage.sobel(luma, axis=0, mode="nearest")
    return np.hypot(gx, gy)[1:-1, 1:-1]


def si(video: YUVVideo, workers: int = 1) -> np.ndarray:
    return two_level(_map(sobel_magnitude, video.y, workers), F_MS, F_ALL)


def ti(video: YUVVideo) -> np.ndarray:
    if video.n_frames < 2:
        raise NeedTwoFrames("TI needs at least two frames")
    return two_level(np.diff(video.y, axis=0), F_MS, F_ALL)


def cti(video: YUVVideo) -> np.ndarray:
    return two_level(video.y, F_MS, F_ALL)


# colour -------------------------------------------------------------------

def _upsample_chroma(plane: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    ry = -(-h // plane.shape[0])
    rx = -(-w // plane.shape[1])
    return np.repeat(np.repeat(plane, ry, axis=0), rx, axis=1)[:h, :w]


def yuv_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-range BT.709 conversion of normalized planes (chroma centered at 0.5)."""
    cb = _upsample_chroma(u, y.shape) - 0.5
    cr = _upsample_chroma(v, y.shape) - 0.5
    r = y + 1.5748 * cr
    g = y - 0.187324 * cb - 0.468124 * cr
    b = y + 1.8556 * cb
    return r, g, b


def colorfulness_frame(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> float:
    rg = r - g
    yb = 0.5 * (r + g) - b
    return float(np.sqrt(rg.var() + yb.var()) + 0.3 * np.sqrt(rg.mean() ** 2 + yb.mean() ** 2))


def colorfulness(video: YUVVideo) -> np.ndarray:
    cf = [colorfulness_frame(*yuv_to_rgb(video.y[k], video.u[k], video.v[k])) for k in range(video.n_frames)]
    return pool(cf, F_ALL)


def chroma_intensity(video: YUVVideo) -> np.ndarray:
    u_stats = np.stack([pool(p, F_MS) for p in video.u])
    v_stats = CHROMA_WEIGHT * np.stack([pool(p, F_MS) for p in video.v])
    return np.concatenate(
        [pool(u_stats[:, i], F_ALL) for i in range(2)] + [pool(v_stats[:, i], F_ALL) for i in range(2)]
    )


# DCT texture --------------------------------------------------------------

@dataclass(frozen=True)
class DctTextureStats:
    e_y: float
    h_y: float
    l_y: float
    e_u: float
    h_u: float
    l_u: float
    e_v: float
    h_v: float
    l_v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e_y, self.h_y, self.l_y, self.e_u, self.h_u, self.l_u, self.e_v, self.h_v, self.l_v])

    def channel(self, c: str) -> tuple[float, float, float]:
        return getattr(self, f"e_{c}"), getattr(self, f"h_{c}"), getattr(self, f"l_{c}")


def block_dct(plane: np.ndarray, size: int = DCT_BLOCK) -> np.ndarray:
    return fft.dctn(_blocks(plane, size), axes=(1, 2), norm="ortho")


def _dct_channel(planes: np.ndarray) -> tuple[float, float, float]:
    coeffs = [block_dct(p) for p in planes]
    energy, lum = [], []
    ac = np.ones((DCT_BLOCK, DCT_BLOCK), dtype=bool)
    ac[0, 0] = False
    for c in coeffs:
        energy.append(np.abs(c[:, ac]).mean(axis=1).mean())
        lum.append(np.sqrt(np.abs(c[:, 0, 0])).mean())
    temporal = [np.abs(coeffs[k] - coeffs[k - 1]).mean() for k in range(1, len(coeffs))]
    h = float(np.mean(temporal)) if temporal else 0.0
    return float(np.mean(energy)), h, float(np.mean(lum))


def dct_texture(video: YUVVideo) -> DctTextureStats:
    return DctTextureStats(*_dct_channel(video.y), *_dct_channel(video.u), *_dct_channel(video.v))


def bitrate_dct_texture(stats: DctTextureStats, bitrate: float) -> np.ndarray:
    """``log2(sqrt(h / E)) + 2 log2(b)`` per channel; -1e9 flags a flat channel."""
    if not bitrate > 0:
        raise InvalidBitrate(f"bitrate must be > 0, got {bitrate}")
    out = []
    for c in "yuv":
        e, h, _ = stats.channel(c)
        if e > 0 and h > 0:
            out.append(0.5 * np.log2(h / e) + 2.0 * np.log2(bitrate))
        else:
            out.append(DEGENERATE_TEXTURE)
    return np.array(out)


# assembly -----------------------------------------------------------------

def _names_llf1() -> list[str]:
    names = []
    for prop in GLCM_PROPS:
        names += stat_names(f"glcm_{prop}", F_MS, F_ALL)
    names += [f"tc_{a}_{b}" for a in F_ALL for b in F_MS]
    for key in ("si", "ti", "cti"):
        names += stat_names(key, F_MS, F_ALL)
    names += stat_names("cf", None, F_ALL)
    names += stat_names("ci_u", F_MS, F_ALL) + stat_names("ci_v", F_MS, F_ALL)
    names += [f"dct_{q}_{c}" for c in "yuv" for q in "ehl"]
    return names


LLF1_NAMES = _names_llf1()
BDCT_NAMES = ["bdct_y", "bdct_u", "bdct_v"]
LLF2_NAMES = LLF1_NAMES + BDCT_NAMES


def dct_stats_from_llf(values: Sequence[float]) -> DctTextureStats:
    """Recover the DCT-texture block (last nine LLF1 entries) from a stored vector."""
    return DctTextureStats(*np.asarray(values, dtype=np.float64)[84:93])


def extract_llf(
    video: YUVVideo,
    set_id: str = "LLF1",
    bitrate: float | None = None,
    size: tuple[int, int] | None = FEATURE_SIZE,
    workers: int = 1,
) -> FeatureVector:
    set_id = set_id.upper()
    if set_id not in ("LLF1", "LLF2"):
        raise ValueError(f"unknown low-level set {set_id!r}")
    if set_id == "LLF2" and bitrate is None:
        raise MissingBitrate("LLF2 needs the bitrate of the compressed rendition")
    if video.n_frames < 2:
        raise NeedTwoFrames("low-level features need at least two frames")
    v = video.resized(size)
    dct = dct_texture(v)
    parts = [
        glcm_features(v, workers),
        temporal_coherence(v, workers),
        si(v, workers),
        ti(v),
        cti(v),
        colorfulness(v),
        chroma_intensity(v),
        dct.as_array(),
    ]
    values = np.concatenate(parts)
    if set_id == "LLF2":
        return FeatureVector("LLF2", list(LLF2_NAMES), np.concatenate([values, bitrate_dct_texture(dct, bitrate)]))
    return FeatureVector("LLF1", list(LLF1_NAMES), values)


def llf2_from_llf1(llf1: FeatureVector | Sequence[float], bitrate: float) -> np.ndarray:
    vals = llf1.values if isinstance(llf1, FeatureVector) else np.asarray(llf1, dtype=np.float64)
    return np.concatenate([vals, bitrate_dct_texture(dct_stats_from_llf(vals), bitrate)])
