"""Source-video manifests (CSV)."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator

from shotladder.errors import ConfigError, EmptyManifest

MAX_FRAMES = 64


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    path: str
    width: int
    height: int
    fps: float = 30.0
    pix_fmt: str = "yuv420p"
    bit_depth: int = 8
    frame_limit: int = MAX_FRAMES

    @property
    def chroma(self) -> str:
        if "422" in self.pix_fmt:
            return "422"
        if "444" in self.pix_fmt:
            return "444"
        return "420"

    @property
    def is_raw(self) -> bool:
        return Path(self.path).suffix.lower() in (".yuv", ".raw")


class Manifest:
    COLUMNS = [f.name for f in fields(ManifestEntry)]

    def __init__(self, entries: Iterable[ManifestEntry]):
        self.entries = list(entries)
        seen = set()
        for e in self.entries:
            if e.video_id in seen:
                raise ConfigError(f"duplicate video_id {e.video_id!r} in manifest")
            seen.add(e.video_id)
            if e.frame_limit > MAX_FRAMES:
                raise ConfigError(f"{e.video_id}: frame_limit {e.frame_limit} exceeds {MAX_FRAMES}")

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, video_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.video_id == video_id:
                return e
        raise KeyError(video_id)

    @property
    def video_ids(self) -> list[str]:
        return [e.video_id for e in self.entries]

    @classmethod
    def read(cls, path: str | Path) -> "Manifest":
        path = Path(path)
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise EmptyManifest(f"{path} has no entries")
        entries = []
        for row in rows:
            p = row["path"]
            if p and not Path(p).is_absolute():
                p = str((path.parent / p).resolve())
            entries.append(
                ManifestEntry(
                    video_id=row["video_id"],
                    path=p,
                    width=int(row["width"]),
                    height=int(row["height"]),
                    fps=float(row.get("fps") or 30.0),
                    pix_fmt=row.get("pix_fmt") or "yuv420p",
                    bit_depth=int(row.get("bit_depth") or 8),
                    frame_limit=int(row.get("frame_limit") or MAX_FRAMES),
                )
            )
        return cls(entries)

    def write(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=self.COLUMNS)
            w.writeheader()
            for e in self.entries:
                w.writerow(asdict(e))
