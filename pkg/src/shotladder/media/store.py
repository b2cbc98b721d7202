"""Append-only CSV store of measured rate-quality points."""
from __future__ import annotations

import csv
import threading
from pathlib import Path
from typing import Iterable

from shotladder.media.jobs import CompressionStats, EncodeJob, RQPoint

RQ_COLUMNS = [
    "video_id", "codec", "preset", "width", "height", "crf",
    "bitrate_kbps", "vmaf", "qp_i", "qp_p", "qp_b", "br_i", "br_p", "br_b",
]


def point_to_row(p: RQPoint) -> list[str]:
    j = p.job
    return [j.video_id, j.codec, j.preset, str(j.width), str(j.height), str(j.crf),
            repr(float(p.bitrate)), repr(float(p.quality)), *(repr(v) for v in p.stats.as_tuple())]


def row_to_point(row: dict[str, str]) -> RQPoint:
    job = EncodeJob(row["video_id"], row["codec"], row["preset"], int(row["width"]), int(row["height"]), int(row["crf"]))
    stats = CompressionStats(*(float(row[k]) for k in CompressionStats.FIELDS))
    return RQPoint(job, float(row["bitrate_kbps"]), float(row["vmaf"]), stats)


class RQStore:
    """Rows are appended one at a time under a lock, so concurrent workers
    never interleave partial lines."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def _ensure_header(self) -> None:
        if not self.path.exists() or self.path.stat().st_size == 0:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", newline="") as fh:
                csv.writer(fh).writerow(RQ_COLUMNS)
            return
        with self.path.open(newline="") as fh:
            header = next(csv.reader(fh), None)
        if header != RQ_COLUMNS:
            raise ValueError(f"{self.path}: unexpected header {header}")

    def append(self, points: RQPoint | Iterable[RQPoint]) -> None:
        if isinstance(points, RQPoint):
            points = [points]
        with self._lock:
            self._ensure_header()
            with self.path.open("a", newline="") as fh:
                w = csv.writer(fh)
                for p in points:
                    w.writerow(point_to_row(p))
                fh.flush()

    def read(self) -> list[RQPoint]:
        if not self.path.exists():
            return []
        with self.path.open(newline="") as fh:
            return [row_to_point(r) for r in csv.DictReader(fh)]

    def done_jobs(self) -> set[EncodeJob]:
        return {p.job for p in self.read()}

    def select(self, codec: str | None = None, preset: str | None = None) -> list[RQPoint]:
        return [
            p for p in self.read()
            if (codec is None or p.job.codec == codec) and (preset is None or p.job.preset == preset)
        ]


def group_by_video(points: Iterable[RQPoint]) -> dict[str, list[RQPoint]]:
    out: dict[str, list[RQPoint]] = {}
    for p in points:
        out.setdefault(p.video_id, []).append(p)
    return out
