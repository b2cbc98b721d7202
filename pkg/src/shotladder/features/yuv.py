"""Planar YUV video container, raw reader and Lanczos resampling."""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

FEATURE_SIZE = (3840, 2160)

_CHROMA_DIVISORS = {"420": (2, 2), "422": (2, 1), "444": (1, 1)}


@dataclass
class YUVVideo:
    """Planes are float64 arrays of shape (T, H, W) normalized to [0, 1]."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        for name in ("y", "u", "v"):
            arr = getattr(self, name)
            if arr.ndim == 2:
                setattr(self, name, arr[None])
        if not (len(self.y) == len(self.u) == len(self.v)):
            raise ValueError("planes disagree on frame count")
        self.chroma = self._sampling()

    def _sampling(self) -> str:
        _, h, w = self.y.shape
        _, hc, wc = self.u.shape
        if self.v.shape != self.u.shape:
            raise ValueError("U and V planes differ in shape")
        for name, (dx, dy) in _CHROMA_DIVISORS.items():
            if wc == -(-w // dx) and hc == -(-h // dy):
                return name
        raise ValueError(f"chroma {wc}x{hc} inconsistent with luma {w}x{h}")

    @property
    def n_frames(self) -> int:
        return self.y.shape[0]

    @property
    def width(self) -> int:
        return self.y.shape[2]

    @property
    def height(self) -> int:
        return self.y.shape[1]

    @classmethod
    def from_luma(cls, y: np.ndarray, chroma_value: float = 0.5, sampling: str = "420") -> "YUVVideo":
        y = np.asarray(y, dtype=np.float64)
        if y.ndim == 2:
            y = y[None]
        dx, dy = _CHROMA_DIVISORS[sampling]
        t, h, w = y.shape
        c = np.full((t, -(-h // dy), -(-w // dx)), chroma_value)
        return cls(y, c, c.copy())

    def resized(self, size: tuple[int, int] | None = FEATURE_SIZE) -> "YUVVideo":
        """Lanczos-3 resize of luma to ``size`` (w, h); chroma keeps its subsampling."""
        if size is None or (self.width, self.height) == tuple(size):
            return self
        w, h = size
        dx, dy = _CHROMA_DIVISORS[self.chroma]
        return YUVVideo(
            resize_stack(self.y, w, h),
            resize_stack(self.u, -(-w // dx), -(-h // dy)),
            resize_stack(self.v, -(-w // dx), -(-h // dy)),
            self.bit_depth,
        )

    def subset(self, frames: slice) -> "YUVVideo":
        return YUVVideo(self.y[frames], self.u[frames], self.v[frames], self.bit_depth)


def _lanczos(x: np.ndarray, a: int) -> np.ndarray:
    out = np.sinc(x) * np.sinc(x / a)
    out[np.abs(x) >= a] = 0.0
    return out


@lru_cache(maxsize=32)
def lanczos_matrix(n_in: int, n_out: int, a: int = 3) -> sparse.csr_matrix:
    """Row-normalized (n_out, n_in) resampling operator, edge-replicating."""
    scale = n_in / n_out
    stretch = max(scale, 1.0)
    support = a * stretch
    rows, cols, vals = [], [], []
    for i in range(n_out):
        center = (i + 0.5) * scale
        lo = int(np.floor(center - support))
        hi = int(np.ceil(center + support))
        j = np.arange(lo, hi + 1)
        wts = _lanczos((j + 0.5 - center) / stretch, a)
        keep = wts != 0
        j, wts = j[keep], wts[keep]
        wts = wts / wts.sum()
        j = np.clip(j, 0, n_in - 1)
        rows.extend([i] * len(j))
        cols.extend(j.tolist())
        vals.extend(wts.tolist())
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n_out, n_in))


def resize_stack(planes: np.ndarray, width: int, height: int, a: int = 3) -> np.ndarray:
    t, h, w = planes.shape
    if (w, h) == (width, height):
        return planes
    mh = lanczos_matrix(h, height, a)
    mw = lanczos_matrix(w, width, a)
    out = np.empty((t, height, width))
    for k in range(t):
        tmp = mh @ planes[k]  # (height, w)
        out[k] = (mw @ tmp.T).T
    return out


def read_yuv(
    path: str | os.PathLike,
    width: int,
    height: int,
    pix_fmt: str = "yuv420p",
    bit_depth: int = 8,
    frame_limit: int | None = 64,
) -> YUVVideo:
    """Read raw planar 8-bit or little-endian 10/12/16-bit 4:2:0 / 4:2:2 / 4:4:4 video."""
    sampling = "422" if "422" in pix_fmt else "444" if "444" in pix_fmt else "420"
    dx, dy = _CHROMA_DIVISORS[sampling]
    wc, hc = -(-width // dx), -(-height // dy)
    dtype = np.dtype("<u2") if bit_depth > 8 else np.dtype("u1")
    n_luma, n_chroma = width * height, wc * hc
    per_frame = n_luma + 2 * n_chroma
    raw = np.fromfile(path, dtype=dtype)
    n = raw.size // per_frame
    if n == 0:
        raise ValueError(f"{path}: smaller than one {width}x{height} {pix_fmt} frame")
    if frame_limit:
        n = min(n, frame_limit)
    raw = raw[: n * per_frame].reshape(n, per_frame).astype(np.float64) / float(2**bit_depth - 1)
    y = raw[:, :n_luma].reshape(n, height, width)
    u = raw[:, n_luma:n_luma + n_chroma].reshape(n, hc, wc)
    v = raw[:, n_luma + n_chroma:].reshape(n, hc, wc)
    return YUVVideo(y, u, v, bit_depth)


def write_yuv(path: str | os.PathLike, video: YUVVideo, bit_depth: int = 8) -> None:
    dtype = np.dtype("<u2") if bit_depth > 8 else np.dtype("u1")
    scale = float(2**bit_depth - 1)
    with open(path, "wb") as fh:
        for k in range(video.n_frames):
            for plane in (video.y[k], video.u[k], video.v[k]):
                fh.write(np.round(np.clip(plane, 0, 1) * scale).astype(dtype).tobytes())
