"""On-disk layout of a run: feature tables, fold plans, models, ladders and hulls."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from shotladder.config import RunConfig
from shotladder.errors import ConfigError
from shotladder.evaluation.protocol import FoldPlan, FoldRound
from shotladder.features.lowlevel import LLF1_NAMES
from shotladder.features.vif import VIFF_NAMES
from shotladder.ladder import BitrateLadder, RQCurve, read_ladders, write_ladders
from shotladder.media.jobs import RQPoint
from shotladder.media.store import RQStore

FEATURE_SETS = {"LLF1": LLF1_NAMES, "VIFF": VIFF_NAMES}
PLAN_FILE = "folds.json"


class Workspace:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.paths = cfg.paths

    # rate-quality points ------------------------------------------------------

    @property
    def store(self) -> RQStore:
        return RQStore(self.paths.rq_store)

    def points(self, codec: str, preset: str) -> list[RQPoint]:
        return self.store.select(codec, preset)

    def fast_points(self) -> list[RQPoint]:
        codec, preset = self.cfg.fast_encoder
        pts = self.points(codec, preset)
        if not pts:
            raise ConfigError(
                f"no rate-quality points for the fast encoder {codec}/{preset} in {self.paths.rq_store}; "
                f"run `shotladder encode-grid --codec {codec}` first"
            )
        return pts

    # features -------------------------------------------------------------------

    def feature_path(self, set_id: str) -> Path:
        return self.paths.features / f"{set_id}.csv"

    def read_feature_table(self, set_id: str) -> dict[str, tuple[np.ndarray | None, str]]:
        """video id -> (values or None, error message)."""
        path = self.feature_path(set_id)
        if not path.exists():
            return {}
        out = {}
        with path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                if row["error"]:
                    out[row["video_id"]] = (None, row["error"])
                else:
                    out[row["video_id"]] = (np.array([float(row[n]) for n in FEATURE_SETS[set_id]]), "")
        return out

    def write_feature_table(self, set_id: str, rows: Mapping[str, tuple[np.ndarray | None, str]],
                            order: Sequence[str]) -> None:
        names = FEATURE_SETS[set_id]
        path = self.feature_path(set_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with tmp.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["video_id", "error", *names])
            for vid in order:
                if vid not in rows:
                    continue
                values, err = rows[vid]
                if values is None:
                    w.writerow([vid, err] + [""] * len(names))
                else:
                    w.writerow([vid, ""] + [repr(float(v)) for v in values])
        tmp.replace(path)

    def feature_store(self) -> dict[str, dict[str, np.ndarray]]:
        return {
            set_id: {v: vals for v, (vals, _) in self.read_feature_table(set_id).items() if vals is not None}
            for set_id in FEATURE_SETS
        }

    # fold plan ------------------------------------------------------------------

    @property
    def plan_path(self) -> Path:
        return self.paths.models / PLAN_FILE

    def save_plan(self, plan: FoldPlan) -> None:
        self.plan_path.parent.mkdir(parents=True, exist_ok=True)
        doc = {
            "seed": plan.seed,
            "folds": [list(f) for f in plan.folds],
            "rounds": [{"train": list(r.train), "validation": list(r.validation), "test": list(r.test)}
                       for r in plan.rounds],
        }
        self.plan_path.write_text(json.dumps(doc, indent=1))

    def load_plan(self) -> FoldPlan:
        if not self.plan_path.exists():
            raise ConfigError(f"no fold plan at {self.plan_path}; run `shotladder train` first")
        doc = json.loads(self.plan_path.read_text())
        rounds = tuple(FoldRound(tuple(r["train"]), tuple(r["validation"]), tuple(r["test"])) for r in doc["rounds"])
        return FoldPlan(tuple(tuple(f) for f in doc["folds"]), rounds, doc["seed"])

    # models -----------------------------------------------------------------------

    @staticmethod
    def model_tag(variant: str, with_stats: bool) -> str:
        return f"{variant}_{'stats' if with_stats else 'nostats'}"

    def model_path(self, tag: str, round_index: int) -> Path:
        return self.paths.models / tag / f"round{round_index}.json"

    @property
    def fold_report_path(self) -> Path:
        return self.paths.reports / "fold_plcc.csv"

    # ladders and hulls ----------------------------------------------------------

    def ladder_path(self, method: str) -> Path:
        return self.paths.ladders / f"{method}.csv"

    def write_ladders(self, method: str, ladders: Mapping[str, BitrateLadder], label: str | None = None) -> Path:
        path = self.ladder_path(method)
        write_ladders(path, (row for vid in sorted(ladders) for row in ladders[vid].rows(vid, label or method)))
        return path

    def read_ladders(self, method: str) -> dict[str, BitrateLadder] | None:
        path = self.ladder_path(method)
        if not path.exists():
            return None
        return {vid: lad for (vid, _), lad in read_ladders(path).items()}

    def ladder_files(self) -> list[str]:
        if not self.paths.ladders.exists():
            return []
        return sorted(p.stem for p in self.paths.ladders.glob("*.csv"))

    def hull_path(self, codec: str, preset: str) -> Path:
        return self.paths.hulls / f"{codec}_{preset}.csv"

    def write_hulls(self, codec: str, preset: str, hulls: Mapping[str, RQCurve]) -> Path:
        path = self.hull_path(codec, preset)
        path.unlink(missing_ok=True)
        store = RQStore(path)
        store.append([p for vid in sorted(hulls) for p in hulls[vid].points])
        return path

    def read_hulls(self, codec: str, preset: str) -> dict[str, RQCurve] | None:
        path = self.hull_path(codec, preset)
        if not path.exists():
            return None
        out: dict[str, list[RQPoint]] = {}
        for p in RQStore(path).read():
            out.setdefault(p.video_id, []).append(p)
        return {vid: RQCurve(sorted(pts, key=lambda p: p.bitrate)) for vid, pts in out.items()}


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6f}"
    return v
