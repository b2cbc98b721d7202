"""Compression statistics from x265 logs and ffprobe frame dumps."""
from __future__ import annotations

import json
import re
import shutil
import subprocess
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from shotladder.errors import ParseFailed, ProbeFailed, ToolNotFound
from shotladder.media.jobs import MISSING, CompressionStats

# x265 [info]: frame I:      2, Avg QP:21.50  kb/s: 9050.11  PSNR Mean: ...
_FRAME_LINE = re.compile(
    r"frame\s+(?P<type>[IPB])\s*:\s*(?P<count>\d+)\s*,\s*"
    r"Avg\s+QP\s*:\s*(?P<qp>[-+]?\d+(?:\.\d+)?)\s+"
    r"kb/s\s*:\s*(?P<kbps>[-+]?\d+(?:\.\d+)?)"
)


def parse_x265_log(log: str) -> CompressionStats:
    """Read the per-frame-type summary lines of an x265 log.

    Frame types that never appear keep the -1 sentinel. If a type is
    reported more than once (e.g. two-pass logs) the last report wins.
    """
    found: dict[str, tuple[float, float]] = {}
    for m in _FRAME_LINE.finditer(log or ""):
        found[m["type"]] = (float(m["qp"]), float(m["kbps"]))
    if not found:
        raise ParseFailed("no 'frame I/P/B: ... Avg QP ... kb/s' summary lines in log")
    qp = {t: found.get(t, (MISSING, MISSING))[0] for t in "IPB"}
    br = {t: found.get(t, (MISSING, MISSING))[1] for t in "IPB"}
    return CompressionStats(qp["I"], qp["P"], qp["B"], br["I"], br["P"], br["B"])


def render_x265_log(stats: CompressionStats, counts: Mapping[str, int] | None = None) -> str:
    """Inverse of :func:`parse_x265_log`, in x265's own summary format.

    Values are written with two decimals, as x265 does.
    """
    counts = counts or {"I": 1, "P": 16, "B": 47}
    lines = [
        "x265 [info]: HEVC encoder version 3.5+1",
        "x265 [info]: build info [Linux][GCC 11.2.0][64 bit] 8bit+10bit+12bit",
    ]
    pairs = {"I": (stats.qp_i, stats.br_i), "P": (stats.qp_p, stats.br_p), "B": (stats.qp_b, stats.br_b)}
    for t in "IPB":
        qp, br = pairs[t]
        if qp == MISSING and br == MISSING:
            continue
        lines.append(
            f"x265 [info]: frame {t}: {counts.get(t, 1):6d}, Avg QP:{qp:.2f}  kb/s: {br:.2f}"
        )
    lines.append("x265 [info]: consecutive B-frames: 100.0% 0.0% 0.0% 0.0% 0.0%")
    return "\n".join(lines) + "\n"


def _frame_rate(value: Any) -> float:
    if value in (None, "", "0/0"):
        return 0.0
    return float(Fraction(str(value)))


def frame_stats_from_probe(probe: str | Mapping[str, Any], fps: float | None = None) -> CompressionStats:
    """Per-type mean QP and kb/s from ``ffprobe -show_frames`` JSON.

    Bitrate of a frame type is its mean packet size times the frame rate,
    in kb/s. QP is only filled when the probe exposes a ``qp`` entry per
    frame (patched builds do); otherwise it stays -1.
    """
    if isinstance(probe, str):
        try:
            probe = json.loads(probe)
        except json.JSONDecodeError as exc:
            raise ProbeFailed(f"probe output is not JSON: {exc}") from None
    frames = probe.get("frames") or probe.get("packets") or []
    if not frames:
        raise ProbeFailed("probe reported no frames")
    if fps is None:
        streams = probe.get("streams") or [{}]
        fps = _frame_rate(streams[0].get("avg_frame_rate") or streams[0].get("r_frame_rate"))
    if not fps or fps <= 0:
        raise ProbeFailed("frame rate unknown; pass fps explicitly")

    sizes: dict[str, list[float]] = {"I": [], "P": [], "B": []}
    qps: dict[str, list[float]] = {"I": [], "P": [], "B": []}
    for fr in frames:
        t = str(fr.get("pict_type", "")).upper()
        if t not in sizes:
            continue
        size = fr.get("pkt_size", fr.get("size"))
        if size is None:
            raise ProbeFailed("frame entry without pkt_size")
        sizes[t].append(float(size))
        if fr.get("qp") is not None:
            qps[t].append(float(fr["qp"]))

    def mean_or_missing(xs: list[float]) -> float:
        return float(np.mean(xs)) if xs else MISSING

    br = {t: (float(np.mean(s)) * 8.0 * fps / 1000.0 if s else MISSING) for t, s in sizes.items()}
    qp = {t: mean_or_missing(qps[t]) if sizes[t] else MISSING for t in qps}
    return CompressionStats(qp["I"], qp["P"], qp["B"], br["I"], br["P"], br["B"])


def probe_frame_stats(bitstream: str | Path, ffprobe: str = "ffprobe", timeout: float = 600) -> CompressionStats:
    """Run ffprobe on an encoded file and reduce its frames to CompressionStats."""
    exe = shutil.which(ffprobe)
    if exe is None:
        raise ToolNotFound(f"{ffprobe} not found on PATH")
    cmd = [
        exe, "-v", "error", "-select_streams", "v:0",
        "-show_entries", "frame=pict_type,pkt_size:stream=avg_frame_rate,r_frame_rate",
        "-of", "json", str(bitstream),
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
    if proc.returncode != 0:
        raise ProbeFailed(f"ffprobe exited with {proc.returncode}: {proc.stderr.strip()[-500:]}")
    return frame_stats_from_probe(proc.stdout)
