"""Run configuration: the built-in ``standard`` profile plus explicit YAML overrides.

A config file looks like::

    defaults: standard
    targets: [synthetic]
    fast_encoder: {codec: synthetic, preset: veryfast}
    codecs:
      synthetic: {presets: [veryfast, medium]}
    model: {n_trees: 50}
    paths: {work_dir: work}

Every key is optional; unknown keys are rejected so typos surface early.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from shotladder.errors import ConfigError
from shotladder.ladder import LADDER_STEPS, QUALITY_WINDOW
from shotladder.media.jobs import CODECS, DEFAULT_RESOLUTIONS, EncoderSettings, Resolution, crf_grid
from shotladder.media.tools import DEFAULT_CODEC_ARGS, ToolConfig
from shotladder.regression.forest import ForestParams

PROFILES = ("standard",)


@dataclass(frozen=True)
class CodecConfig:
    name: str
    presets: tuple[str, ...]
    crfs: tuple[int, ...]
    inference_crfs: tuple[int, ...]

    def settings(self, preset: str, resolutions) -> EncoderSettings:
        return EncoderSettings(self.name, preset, list(self.crfs), list(resolutions))


_X265_INFERENCE = (18, 22, 26, 30, 34, 38, 42)
_AV_INFERENCE = (20, 26, 32, 38, 44, 50, 56, 62)


def default_codecs() -> dict[str, CodecConfig]:
    wide = tuple(crf_grid(16, 62))
    return {
        "x265": CodecConfig("x265", ("veryfast", "fast", "medium", "slow"), tuple(crf_grid(14, 50)), _X265_INFERENCE),
        "svtav1": CodecConfig("svtav1", ("8", "6", "4"), wide, _AV_INFERENCE),
        "vpx-vp9": CodecConfig("vpx-vp9", ("4", "3"), wide, _AV_INFERENCE),
        "aom-av1": CodecConfig("aom-av1", ("7", "5"), wide, _AV_INFERENCE),
        # test double with x265-like grids; not a target unless selected
        "synthetic": CodecConfig("synthetic", ("veryfast", "fast", "medium", "slow"),
                                 tuple(crf_grid(14, 50)), _X265_INFERENCE),
    }


@dataclass(frozen=True)
class Paths:
    work_dir: Path = Path("shotladder-work")

    @property
    def rq_store(self) -> Path:
        return self.work_dir / "rq.csv"

    @property
    def cache(self) -> Path:
        return self.work_dir / "encodes"

    @property
    def features(self) -> Path:
        return self.work_dir / "features"

    @property
    def models(self) -> Path:
        return self.work_dir / "models"

    @property
    def ladders(self) -> Path:
        return self.work_dir / "ladders"

    @property
    def hulls(self) -> Path:
        return self.work_dir / "hulls"

    @property
    def reports(self) -> Path:
        return self.work_dir / "reports"


@dataclass(frozen=True)
class RunConfig:
    codecs: dict[str, CodecConfig] = field(default_factory=default_codecs)
    targets: tuple[str, ...] = ("x265", "svtav1", "vpx-vp9", "aom-av1")
    fast_encoder: tuple[str, str] = ("x265", "veryfast")
    resolutions: tuple[Resolution, ...] = DEFAULT_RESOLUTIONS
    quality_window: tuple[float, float] = QUALITY_WINDOW
    ladder_steps: tuple[float, ...] = LADDER_STEPS
    fixed_ladder: Path | None = None
    model: ForestParams = ForestParams()
    rfe: ForestParams = ForestParams(n_trees=20)
    crossover_features: int = 9
    folds: int = 5
    validation_fraction: float = 0.1
    seed: int = 0
    workers: int = 1
    feature_size: tuple[int, int] | None = (3840, 2160)
    noise_sd: float = 0.0
    tools: ToolConfig = field(default_factory=ToolConfig)
    paths: Paths = Paths()

    def codec(self, name: str) -> CodecConfig:
        try:
            return self.codecs[name]
        except KeyError:
            raise ConfigError(f"unknown codec {name!r}; known: {', '.join(self.codecs)}") from None

    @property
    def fast(self) -> CodecConfig:
        return self.codec(self.fast_encoder[0])

    def target_settings(self, codec: str | None = None, preset: str | None = None) -> list[tuple[str, str]]:
        """(codec, preset) pairs to run, optionally narrowed to one codec and preset."""
        names = [codec] if codec else list(self.targets)
        out = []
        for name in names:
            cfg = self.codec(name)
            if preset is not None and preset not in cfg.presets:
                raise ConfigError(f"{name} has no preset {preset!r}; configured: {', '.join(cfg.presets)}")
            out += [(name, p) for p in cfg.presets if preset is None or p == preset]
        return out

    def with_overrides(self, **kw) -> "RunConfig":
        cfg = replace(self, **{k: v for k, v in kw.items() if v is not None})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for name in self.targets:
            self.codec(name)
        fc, fp = self.fast_encoder
        if fp not in self.codec(fc).presets:
            raise ConfigError(f"fast encoder preset {fp!r} is not configured for {fc}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        lo, hi = self.quality_window
        if not lo < hi:
            raise ConfigError("quality_window must be [low, high] with low < high")
        if list(self.ladder_steps) != sorted(set(self.ladder_steps)):
            raise ConfigError("ladder_steps must be strictly increasing")


# loading ---------------------------------------------------------------------

_TOP_KEYS = {
    "defaults", "codecs", "targets", "fast_encoder", "resolutions", "quality_window", "ladder_steps",
    "fixed_ladder", "model", "rfe", "folds", "validation_fraction", "seed", "workers", "feature_size",
    "synthetic", "tools", "paths",
}


def _check_keys(doc: Mapping, allowed: set[str], where: str) -> None:
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _crfs(spec: Any, where: str) -> tuple[int, ...]:
    if isinstance(spec, Mapping):
        _check_keys(spec, {"min", "max", "step"}, where)
        return tuple(crf_grid(int(spec["min"]), int(spec["max"]), int(spec.get("step", 2))))
    return tuple(int(c) for c in spec)


def _codecs(doc: Mapping, base: dict[str, CodecConfig]) -> dict[str, CodecConfig]:
    out = dict(base)
    for name, spec in doc.items():
        if name not in CODECS:
            raise ConfigError(f"unknown codec {name!r}; supported: {', '.join(CODECS)}")
        spec = spec or {}
        _check_keys(spec, {"presets", "crfs", "inference_crfs"}, f"codecs.{name}")
        cur = out[name]
        out[name] = CodecConfig(
            name,
            tuple(str(p) for p in spec.get("presets", cur.presets)),
            _crfs(spec["crfs"], f"codecs.{name}.crfs") if "crfs" in spec else cur.crfs,
            tuple(int(c) for c in spec.get("inference_crfs", cur.inference_crfs)),
        )
    return out


def _forest(doc: Mapping, base: ForestParams, where: str) -> ForestParams:
    _check_keys(doc, {"n_trees", "min_samples_leaf", "max_features", "max_depth", "n_select"}, where)
    kw = {k: v for k, v in doc.items() if k != "n_select"}
    try:
        return replace(base, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def from_mapping(doc: Mapping | None, base_dir: Path = Path(".")) -> RunConfig:
    doc = dict(doc or {})
    _check_keys(doc, _TOP_KEYS, "config")
    profile = doc.get("defaults", "standard")
    if profile not in PROFILES:
        raise ConfigError(f"unknown defaults profile {profile!r}; available: {', '.join(PROFILES)}")
    cfg = RunConfig()
    kw: dict[str, Any] = {}
    if "codecs" in doc:
        kw["codecs"] = _codecs(doc["codecs"] or {}, cfg.codecs)
    if "targets" in doc:
        kw["targets"] = tuple(str(t) for t in doc["targets"])
    if "fast_encoder" in doc:
        fe = doc["fast_encoder"]
        _check_keys(fe, {"codec", "preset"}, "fast_encoder")
        kw["fast_encoder"] = (str(fe["codec"]), str(fe["preset"]))
    if "resolutions" in doc:
        kw["resolutions"] = tuple((int(w), int(h)) for w, h in doc["resolutions"])
    if "quality_window" in doc:
        lo, hi = doc["quality_window"]
        kw["quality_window"] = (float(lo), float(hi))
    if "ladder_steps" in doc:
        kw["ladder_steps"] = tuple(float(s) for s in doc["ladder_steps"])
    if doc.get("fixed_ladder"):
        kw["fixed_ladder"] = base_dir / doc["fixed_ladder"]
    if "model" in doc:
        kw["model"] = _forest(doc["model"], cfg.model, "model")
    if "rfe" in doc:
        kw["rfe"] = _forest(doc["rfe"], cfg.rfe, "rfe")
        if "n_select" in doc["rfe"]:
            kw["crossover_features"] = int(doc["rfe"]["n_select"])
    for key, cast in (("folds", int), ("validation_fraction", float), ("seed", int), ("workers", int)):
        if key in doc:
            kw[key] = cast(doc[key])
    if "feature_size" in doc:
        fs = doc["feature_size"]
        kw["feature_size"] = None if fs is None else (int(fs[0]), int(fs[1]))
    if "synthetic" in doc:
        _check_keys(doc["synthetic"], {"noise_sd"}, "synthetic")
        kw["noise_sd"] = float(doc["synthetic"].get("noise_sd", 0.0))
    if "tools" in doc:
        t = doc["tools"]
        _check_keys(t, {"ffmpeg", "ffprobe", "codec_args", "vmaf_options", "timeout"}, "tools")
        args = {k: list(v) for k, v in DEFAULT_CODEC_ARGS.items()}
        args.update({k: list(v) for k, v in (t.get("codec_args") or {}).items()})
        kw["tools"] = ToolConfig(
            ffmpeg=t.get("ffmpeg", "ffmpeg"),
            ffprobe=t.get("ffprobe", "ffprobe"),
            codec_args=args,
            vmaf_options=t.get("vmaf_options", "log_fmt=json"),
            timeout=float(t.get("timeout", 3600.0)),
        )
    if "paths" in doc:
        _check_keys(doc["paths"], {"work_dir"}, "paths")
        kw["paths"] = Paths(base_dir / doc["paths"].get("work_dir", "shotladder-work"))
    try:
        cfg = replace(cfg, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


def load_config(path: str | Path | None = None) -> RunConfig:
    """The standard profile, overridden by ``path`` when given; relative paths resolve against the file."""
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from None
    if doc is not None and not isinstance(doc, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_mapping(doc, path.parent)
