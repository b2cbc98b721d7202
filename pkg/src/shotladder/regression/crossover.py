"""Cascaded cross-over bitrate regressor.

One forest per adjacent resolution pair, trained on log10 cross-over
bitrates. Pairs are handled from the top of the resolution chain down;
each lower pair also sees the predicted log10 cross-overs of the pairs
above it. Every pair uses its own RFE-selected subset of LLF1 columns.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from shotladder.errors import ModelLoadFailed, TooFewSamples
from shotladder.ladder import pixels
from shotladder.media.jobs import Resolution
from shotladder.regression.forest import ForestModel, ForestParams, model_from_dict, predict, train_extra_trees
from shotladder.regression.rfe import rfe_select

FORMAT = "shotladder-crossover"
VERSION = 1


@dataclass
class CrossoverModel:
    resolutions: list[Resolution]  # ascending
    selected: list[list[int]]  # per pair, ascending pair order
    forests: list[ForestModel]  # per pair, ascending pair order

    @property
    def n_pairs(self) -> int:
        return len(self.resolutions) - 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": FORMAT,
                "version": VERSION,
                "resolutions": [list(r) for r in self.resolutions],
                "selected": self.selected,
                "forests": [json.loads(f.to_json()) for f in self.forests],
            },
            sort_keys=True,
            separators=(",", ":"),
        )


def _row(llf1: np.ndarray, selected: Sequence[int], upper_logs: Sequence[float]) -> np.ndarray:
    return np.concatenate([np.asarray(llf1, dtype=np.float64)[list(selected)], upper_logs])


def train_crossover(
    llf1: Mapping[str, np.ndarray],
    targets: Mapping[str, Sequence[float]],
    resolutions: Sequence[Resolution],
    params: ForestParams = ForestParams(),
    rfe_params: ForestParams = ForestParams(n_trees=20),
    n_select: int = 9,
    seed: int = 0,
) -> CrossoverModel:
    """``targets[video]`` lists cross-overs in ascending pair order (kbps)."""
    res = sorted((tuple(r) for r in resolutions), key=pixels)
    vids = sorted(v for v in targets if v in llf1)
    if len(vids) < 2:
        raise TooFewSamples("cross-over model needs at least two videos")
    x_base = np.stack([np.asarray(llf1[v], dtype=np.float64) for v in vids])
    y_all = np.log10(np.array([targets[v] for v in vids], dtype=np.float64))
    n_pairs = len(res) - 1
    selected: list[list[int]] = [[] for _ in range(n_pairs)]
    forests: list[ForestModel | None] = [None] * n_pairs
    upper = np.empty((len(vids), 0))
    for j in range(n_pairs - 1, -1, -1):
        y = y_all[:, j]
        if x_base.shape[1] > n_select:
            sel = rfe_select(x_base, y, n_select, rfe_params, seed + j)
        else:
            sel = list(range(x_base.shape[1]))
        x = np.column_stack([x_base[:, sel], upper])
        names = [f"llf1_{i}" for i in sel] + [f"upper_log10_{k}" for k in range(upper.shape[1])]
        model = train_extra_trees(x, y, params, seed + j, names)
        selected[j], forests[j] = sel, model
        upper = np.column_stack([predict(model, x), upper])
    return CrossoverModel([tuple(r) for r in res], selected, forests)  # type: ignore[arg-type]


def predict_crossovers(model: CrossoverModel, llf1: np.ndarray) -> list[float]:
    """Predicted cross-overs (kbps), ascending pair order."""
    upper: list[float] = []
    out = [0.0] * model.n_pairs
    for j in range(model.n_pairs - 1, -1, -1):
        v = float(predict(model.forests[j], _row(llf1, model.selected[j], upper)))
        out[j] = 10.0**v
        upper = [v] + upper
    return out


def save_crossover(model: CrossoverModel, path: str | Path) -> None:
    Path(path).write_text(model.to_json())


def load_crossover(path: str | Path) -> CrossoverModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelLoadFailed(f"cannot read cross-over model {path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelLoadFailed(f"{path} is not a {FORMAT} model")
    if doc.get("version") != VERSION:
        raise ModelLoadFailed(f"cross-over model version {doc.get('version')!r} is not supported")
    try:
        forests = [model_from_dict(f, f"{path} forest") for f in doc["forests"]]
        return CrossoverModel([tuple(r) for r in doc["resolutions"]], doc["selected"], forests)
    except (KeyError, TypeError) as exc:
        raise ModelLoadFailed(f"malformed cross-over model {path}: {exc}") from None
