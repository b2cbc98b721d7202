"""Extremely randomized trees for regression.

Trees are grown breadth-first: at every depth all open nodes draw one
uniform threshold per candidate feature inside the node's range and keep
the candidate with the largest drop in squared error. No bootstrap.

Training samples are put in a canonical order first, and tree ``t`` uses
its own generator keyed on ``(seed, t)``, so the forest does not depend on
the order of the input rows or on the number of worker threads.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from shotladder.errors import ModelLoadFailed, SchemaMismatch, TooFewSamples

FORMAT = "shotladder-extratrees"
VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    min_samples_leaf: int = 2
    max_features: float = 1.0
    max_depth: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0 < self.max_features <= 1:
            raise ValueError("max_features is a fraction in (0, 1]")


@dataclass
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[r]
            go_left = x[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active[r] = self.feature[node[r]] >= 0
        return node

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Tree":
        t = cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
        )
        n = len(t.feature)
        if not (len(t.threshold) == len(t.left) == len(t.right) == len(t.value) == n) or n == 0:
            raise ValueError("node arrays disagree in length")
        inner = t.feature >= 0
        if np.any(t.left[inner] >= n) or np.any(t.right[inner] >= n) or np.any(t.left[inner] <= 0):
            raise ValueError("child index out of range")
        return t


def schema_hash(names: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(names).encode()).hexdigest()


@dataclass
class ForestModel:
    trees: list[Tree]
    params: ForestParams
    seed: int
    feature_names: list[str]
    y_min: float
    y_max: float
    importances: np.ndarray = field(repr=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def schema(self) -> str:
        return schema_hash(self.feature_names)

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "schema_hash": self.schema,
            "feature_names": self.feature_names,
            "params": asdict(self.params),
            "seed": self.seed,
            "y_range": [self.y_min, self.y_max],
            "importances": self.importances.tolist(),
            "trees": [t.to_json() for t in self.trees],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _canonical_order(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    keys = np.column_stack([x, y]).T
    return np.lexsort(keys[::-1])


def _grow(x: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator) -> tuple[Tree, np.ndarray]:
    n, p = x.shape
    msl = params.min_samples_leaf
    n_cand = max(1, int(round(params.max_features * p)))

    feature = np.array([-1], dtype=np.int64)
    threshold = np.zeros(1)
    left = np.array([-1], dtype=np.int64)
    right = np.array([-1], dtype=np.int64)
    value = np.array([float(y[0]) if y.max() == y.min() else float(y.mean())])
    importance = np.zeros(p)

    node_of = np.zeros(n, dtype=np.int64)
    open_nodes = np.array([0])
    depth = 0
    while open_nodes.size:
        if params.max_depth is not None and depth >= params.max_depth:
            break
        idx = np.flatnonzero(node_of >= open_nodes[0])
        idx = idx[np.argsort(node_of[idx], kind="stable")]
        nodes_sorted = node_of[idx]
        starts = np.flatnonzero(np.r_[True, nodes_sorted[1:] != nodes_sorted[:-1]])
        k = len(starts)
        counts = np.diff(np.r_[starts, len(idx)])
        node_ids = nodes_sorted[starts]
        seg = np.repeat(np.arange(k), counts)

        xs = x[idx]
        ys = y[idx]
        lo = np.minimum.reduceat(xs, starts, axis=0)
        hi = np.maximum.reduceat(xs, starts, axis=0)
        valid = hi > lo

        if n_cand < p:
            keys = rng.random((k, p))
            keys[~valid] = 2.0
            cut = np.sort(keys, axis=1)[:, n_cand - 1:n_cand]
            valid &= keys <= cut
        u = rng.random((k, p))
        thr = lo + u * (hi - lo)

        go_left = xs <= thr[seg]
        n_left = np.add.reduceat(go_left.astype(np.int64), starts, axis=0)
        s_left = np.add.reduceat(go_left * ys[:, None], starts, axis=0)
        s_tot = np.add.reduceat(ys, starts)[:, None]
        n_tot = counts[:, None].astype(np.float64)
        n_right = n_tot - n_left
        ok = valid & (n_left >= msl) & (n_right >= msl)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = s_left**2 / n_left + (s_tot - s_left) ** 2 / n_right - s_tot**2 / n_tot
        gain = np.where(ok, gain, -np.inf)
        best = np.argmax(gain, axis=1)
        best_gain = gain[np.arange(k), best]

        y_lo = np.minimum.reduceat(ys, starts)
        y_hi = np.maximum.reduceat(ys, starts)
        split = np.isfinite(best_gain) & (y_hi > y_lo) & (counts >= 2 * msl)

        sj = np.flatnonzero(split)
        if sj.size == 0:
            break
        base = len(feature)
        lid = base + 2 * np.arange(sj.size)
        rank = np.full(k, -1)
        rank[sj] = np.arange(sj.size)
        row_rank = rank[seg]
        moving = row_rank >= 0
        row_left = go_left[np.arange(len(idx)), best[seg]]
        child = lid[row_rank[moving]] + (~row_left[moving])
        node_of[idx[moving]] = child

        n_new = 2 * sj.size
        c_rel = child - base
        c_cnt = np.bincount(c_rel, minlength=n_new)
        c_sum = np.bincount(c_rel, weights=ys[moving], minlength=n_new)
        c_min = np.full(n_new, np.inf)
        c_max = np.full(n_new, -np.inf)
        np.minimum.at(c_min, c_rel, ys[moving])
        np.maximum.at(c_max, c_rel, ys[moving])
        c_val = np.where(c_min == c_max, c_min, c_sum / np.maximum(c_cnt, 1))

        parents = node_ids[sj]
        feature[parents] = best[sj]
        threshold[parents] = thr[sj, best[sj]]
        left[parents] = lid
        right[parents] = lid + 1
        feature = np.r_[feature, np.full(n_new, -1)]
        threshold = np.r_[threshold, np.zeros(n_new)]
        left = np.r_[left, np.full(n_new, -1)]
        right = np.r_[right, np.full(n_new, -1)]
        value = np.r_[value, c_val]
        np.add.at(importance, best[sj], np.maximum(best_gain[sj], 0.0))
        open_nodes = np.arange(base, base + n_new)
        depth += 1

    return Tree(feature, threshold, left, right, value), importance


def train_extra_trees(
    x,
    y,
    params: ForestParams = ForestParams(),
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
    workers: int = 1,
) -> ForestModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("x must be (n, p) with one target per row")
    if len(y) < 2:
        raise TooFewSamples(f"need at least 2 samples, got {len(y)}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("features and targets must be finite")
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(x.shape[1])]
    if len(names) != x.shape[1]:
        raise ValueError("feature_names does not match the number of columns")

    order = _canonical_order(x, y)
    x, y = x[order], y[order]

    def grow(t: int):
        return _grow(x, y, params, np.random.default_rng([seed, t]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            grown = list(ex.map(grow, range(params.n_trees)))
    else:
        grown = [grow(t) for t in range(params.n_trees)]
    importances = np.zeros(x.shape[1])
    for _, imp in grown:
        importances += imp
    return ForestModel(
        [t for t, _ in grown], params, seed, names, float(y.min()), float(y.max()), importances
    )


def predict(model: ForestModel, x, feature_names: Sequence[str] | None = None) -> np.ndarray:
    """Mean of per-tree leaf values for each row of ``x`` (or a single vector)."""
    if feature_names is not None and schema_hash(list(feature_names)) != model.schema:
        raise SchemaMismatch("feature names differ from the ones the model was trained on")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.n_features:
        raise SchemaMismatch(f"model expects {model.n_features} features, got {x.shape[1]}")
    # running mean keeps an all-equal ensemble exactly equal to that value
    out = np.zeros(len(x))
    for k, tree in enumerate(model.trees):
        out += (tree.predict(x) - out) / (k + 1)
    out = np.clip(out, model.y_min, model.y_max)
    return out[0] if single else out


def r2_score(y, pred) -> float:
    y = np.asarray(y, dtype=np.float64)
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)


def save_model(model: ForestModel, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(model.to_json())
    tmp.replace(path)


def model_from_dict(doc, source: str = "model") -> ForestModel:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelLoadFailed(f"{source} is not a {FORMAT} model")
    if doc.get("version") != VERSION:
        raise ModelLoadFailed(f"model version {doc.get('version')!r} is not supported (expected {VERSION})")
    try:
        names = list(doc["feature_names"])
        if schema_hash(names) != doc["schema_hash"]:
            raise ValueError("schema hash does not match feature names")
        trees = [Tree.from_json(t) for t in doc["trees"]]
        if not trees or any(t.feature.max() >= len(names) for t in trees):
            raise ValueError("missing trees or split feature index out of range")
        y_min, y_max = (float(v) for v in doc["y_range"])
        return ForestModel(
            trees,
            ForestParams(**doc["params"]),
            int(doc["seed"]),
            names,
            y_min,
            y_max,
            np.asarray(doc["importances"], dtype=np.float64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelLoadFailed(f"malformed {source}: {exc}") from None


def load_model(path: str | Path) -> ForestModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelLoadFailed(f"cannot read model {path}: {exc}") from None
    return model_from_dict(doc, str(path))
