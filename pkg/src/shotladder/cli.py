"""Command-line front end.

Each command reads and writes files under the configured work directory,
so commands can be rerun or resumed independently::

    shotladder encode-grid --manifest clips/manifest.csv --config run.yaml
    shotladder extract-features --manifest clips/manifest.csv --config run.yaml
    shotladder train --config run.yaml
    shotladder predict-ladder --method proposed --config run.yaml
    shotladder evaluate --config run.yaml
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Sequence

import numpy as np

from shotladder.config import RunConfig, load_config
from shotladder.errors import ConfigError, ParseFailed, ProbeFailed, ShotLadderError
from shotladder.evaluation import crf_map, evaluate_method, write_report, write_video_details
from shotladder.evaluation.protocol import kfold_split
from shotladder.features.lowlevel import extract_llf
from shotladder.features.vif import vif_features
from shotladder.ladder import convex_hull, fixed_ladder, hull_ladder, load_fixed_table, pixels
from shotladder.manifest import Manifest
from shotladder.media.jobs import CompressionStats, EncodeJob, RQPoint, plan_encode_grid, resolution_label
from shotladder.media.logparse import parse_x265_log, probe_frame_stats
from shotladder.media.store import group_by_video
from shotladder.media.synthetic import SyntheticCodec
from shotladder.media.tools import decode_source, measure_quality, run_encode
from shotladder.pipeline import (
    cross_validate_crossover,
    cross_validate_quality,
    predicted_ladder,
    two_step_ladders,
)
from shotladder.regression import FEATURE_VARIANTS, load_model, save_model
from shotladder.workspace import FEATURE_SETS, Workspace, write_csv

log = logging.getLogger("shotladder")

METHODS = ("proposed", "fixed", "hull", "two-step", "crossover")
DEFAULT_VARIANT = "llf2+viff"


# argument parsing --------------------------------------------------------------

def _fast_encoder(text: str) -> tuple[str, str]:
    codec, sep, preset = text.partition(":")
    if not sep or not codec or not preset:
        raise argparse.ArgumentTypeError("expected CODEC:PRESET, e.g. x265:veryfast")
    return codec, preset


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML overrides of the built-in standard profile")
    common.add_argument("--work-dir", type=Path, help="directory holding stores, models, ladders and reports")
    common.add_argument("--seed", type=int, help="seed for fold plans and forests")
    common.add_argument("--workers", type=int, help="worker threads")
    common.add_argument("--fast-encoder", type=_fast_encoder, metavar="CODEC:PRESET",
                        help="encoder whose statistics feed the quality model")
    common.add_argument("-v", "--verbose", action="store_true")

    target = argparse.ArgumentParser(add_help=False)
    target.add_argument("--codec", help="restrict to one configured codec")
    target.add_argument("--preset", help="restrict to one preset of --codec")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--features", choices=list(FEATURE_VARIANTS), help="source-feature variant")
    stats = model.add_mutually_exclusive_group()
    stats.add_argument("--with-compression-stats", dest="with_stats", action="store_true", default=True,
                       help="include fast-encoder QP and per-frame-type bitrates (default)")
    stats.add_argument("--no-compression-stats", dest="with_stats", action="store_false",
                       help="source features, bitrate and resolution only")

    p = argparse.ArgumentParser(prog="shotladder", description="Per-shot bitrate ladders from predicted VMAF.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode-grid", parents=[common, target], help="encode and score the full grid")
    e.add_argument("--manifest", type=Path, required=True)

    f = sub.add_parser("extract-features", parents=[common], help="compute source-video feature sets")
    f.add_argument("--manifest", type=Path, required=True)
    f.add_argument("--set", dest="set_id", choices=[*FEATURE_SETS, "all"], default="all")

    sub.add_parser("train", parents=[common, model],
                   help="k-fold training of the quality regressors (all variants unless --features)")

    pl = sub.add_parser("predict-ladder", parents=[common, target, model], help="build per-video ladders")
    pl.add_argument("--method", choices=METHODS, default="proposed")

    ev = sub.add_parser("evaluate", parents=[common, target, model], help="BD metrics against hull and fixed ladder")
    ev.add_argument("--method", choices=METHODS, action="append",
                    help="methods to report (repeatable); default: every ladder file found plus fixed and hull")

    sub.add_parser("crf-map", parents=[common, target], help="fast-encoder CRFs matching each target CRF")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    paths = None
    if args.work_dir is not None:
        paths = type(cfg.paths)(args.work_dir)
    return cfg.with_overrides(seed=args.seed, workers=args.workers, fast_encoder=args.fast_encoder, paths=paths)


# encode-grid -------------------------------------------------------------------------

def _settings_to_run(cfg: RunConfig, codec: str | None, preset: str | None) -> list[tuple[str, str]]:
    pairs = cfg.target_settings(codec, preset)
    if codec is None and cfg.fast_encoder not in pairs:
        pairs.insert(0, cfg.fast_encoder)
    return pairs


def _stats_for(job: EncodeJob, path: Path, log_text: str, cfg: RunConfig) -> CompressionStats:
    try:
        if job.codec in ("x265", "synthetic"):
            return parse_x265_log(log_text)
        return probe_frame_stats(path, cfg.tools.ffprobe)
    except (ParseFailed, ProbeFailed) as err:
        log.warning("%s: no compression statistics (%s)", job, err)
        return CompressionStats.missing()


def cmd_encode_grid(args, cfg: RunConfig) -> int:
    manifest = Manifest.read(args.manifest)
    pairs = _settings_to_run(cfg, args.codec, args.preset)
    jobs: list[EncodeJob] = []
    for codec, preset in pairs:
        settings = cfg.codec(codec).settings(preset, cfg.resolutions)
        jobs += plan_encode_grid(manifest.video_ids, settings, cfg.resolutions)
    ws = Workspace(cfg)
    store = ws.store
    done = store.done_jobs()
    todo = [j for j in jobs if j not in done]
    log.info("%d jobs planned, %d already in %s, %d to run", len(jobs), len(jobs) - len(todo), store.path, len(todo))
    synthetic = SyntheticCodec(noise_sd=cfg.noise_sd, seed=cfg.seed)

    def run(job: EncodeJob) -> RQPoint:
        src = manifest[job.video_id]
        result = run_encode(job, src, cfg.paths.cache, cfg.tools, synthetic)
        stats = _stats_for(job, result.path, result.log_text, cfg)
        return RQPoint(job, result.bitrate, measure_quality(src, result.path, cfg.tools), stats)

    failures = 0
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {pool.submit(run, j): j for j in todo}
        for fut in as_completed(futures):
            job = futures[fut]
            try:
                store.append(fut.result())
            except (ShotLadderError, OSError) as err:
                failures += 1
                log.error("job failed %s: %s", job, err)
    log.info("%d jobs done, %d failed", len(todo) - failures, failures)
    return 1 if failures else 0


# extract-features ------------------------------------------------------------------------

def cmd_extract_features(args, cfg: RunConfig) -> int:
    manifest = Manifest.read(args.manifest)
    ws = Workspace(cfg)
    sets = list(FEATURE_SETS) if args.set_id == "all" else [args.set_id]
    tables = {s: ws.read_feature_table(s) for s in sets}
    failures = 0
    for entry in manifest:
        missing = [s for s in sets if tables[s].get(entry.video_id, (None, ""))[0] is None]
        if not missing:
            continue
        try:
            video = decode_source(entry, cfg.tools)
        except (ShotLadderError, OSError, ValueError) as err:
            failures += 1
            log.error("%s: %s", entry.video_id, err)
            for s in missing:
                tables[s][entry.video_id] = (None, f"{type(err).__name__}: {err}")
            continue
        for s in missing:
            try:
                if s == "LLF1":
                    fv = extract_llf(video, "LLF1", size=cfg.feature_size, workers=cfg.workers)
                else:
                    fv = vif_features(video, size=cfg.feature_size, workers=cfg.workers)
                tables[s][entry.video_id] = (fv.values, "")
            except (ShotLadderError, ValueError) as err:
                failures += 1
                log.error("%s %s: %s", entry.video_id, s, err)
                tables[s][entry.video_id] = (None, f"{type(err).__name__}: {err}")
        log.info("features for %s", entry.video_id)
    for s in sets:
        order = manifest.video_ids + sorted(set(tables[s]) - set(manifest.video_ids))
        ws.write_feature_table(s, tables[s], order)
    return 1 if failures else 0


# train ---------------------------------------------------------------------------------

def _plan(ws: Workspace, fast_points: Sequence[RQPoint], create: bool):
    cfg = ws.cfg
    ids = sorted({p.video_id for p in fast_points})
    plan = kfold_split(ids, cfg.folds, cfg.seed, cfg.validation_fraction)
    if create:
        ws.save_plan(plan)
        return plan
    saved = ws.load_plan()
    if sorted(v for f in saved.folds for v in f) != ids or saved.seed != cfg.seed:
        raise ConfigError("the saved fold plan does not match the current videos or seed; rerun `shotladder train`")
    return saved


def _variants(args) -> list[str]:
    return [args.features] if args.features else list(FEATURE_VARIANTS)


def cmd_train(args, cfg: RunConfig) -> int:
    ws = Workspace(cfg)
    fast = ws.fast_points()
    features = ws.feature_store()
    plan = _plan(ws, fast, create=True)
    res_cols = sorted({p.resolution for p in fast}, key=pixels)
    header = ["variant", "compression_stats", "round", "validation_plcc"] + [
        f"plcc_{resolution_label(r)}" for r in res_cols
    ]
    rows = _read_rows(ws.fold_report_path)
    for variant in _variants(args):
        cv = cross_validate_quality(
            plan, fast, features, variant, args.with_stats, cfg.fast.inference_crfs, cfg.model, cfg.seed,
            cfg.workers, cfg.ladder_steps, keep_models=True, window=cfg.quality_window,
        )
        tag = ws.model_tag(variant, args.with_stats)
        for k, model in enumerate(cv.models):
            path = ws.model_path(tag, k)
            path.parent.mkdir(parents=True, exist_ok=True)
            save_model(model, path)
        stats_flag = "yes" if args.with_stats else "no"
        rows = [r for r in rows if (r[0], r[1]) != (variant, stats_flag)]
        for rec in cv.records:
            rows.append([variant, stats_flag, str(rec.round), _num(rec.validation_plcc)]
                        + [_num(rec.test_plcc.get(r, float("nan"))) for r in res_cols])
        mean = cv.mean_test_plcc()
        log.info("%s: mean held-out PLCC %s", tag,
                 ", ".join(f"{resolution_label(r)}={v:.4f}" for r, v in mean.items()))
    rows.sort(key=lambda r: (list(FEATURE_VARIANTS).index(r[0]), r[1], int(r[2])))
    write_csv(ws.fold_report_path, header, rows)
    _write_plcc_summary(ws, header, rows)
    return 0


def _num(v: float) -> str:
    return "" if np.isnan(v) else f"{v:.6f}"


def _read_rows(path: Path) -> list[list[str]]:
    if not path.exists():
        return []
    with path.open(newline="") as fh:
        return list(csv.reader(fh))[1:]


def _write_plcc_summary(ws: Workspace, header: list[str], rows: list[list[str]]) -> None:
    """Mean held-out PLCC per variant and resolution, with and without statistics side by side."""
    res_cols = header[4:]
    out = []
    for variant in FEATURE_VARIANTS:
        for col_i, col in enumerate(res_cols, start=4):
            vals = {}
            for flag in ("yes", "no"):
                xs = [float(r[col_i]) for r in rows if r[0] == variant and r[1] == flag and r[col_i]]
                vals[flag] = float(np.mean(xs)) if xs else float("nan")
            if not all(np.isnan(v) for v in vals.values()):
                out.append([variant, col.removeprefix("plcc_"), vals["yes"], vals["no"]])
    write_csv(ws.paths.reports / "plcc.csv",
              ["variant", "resolution", "plcc_with_stats", "plcc_without_stats"], out)


# predict-ladder ----------------------------------------------------------------------------

def _proposed_name(args) -> str:
    return f"proposed_{Workspace.model_tag(args.features or DEFAULT_VARIANT, args.with_stats)}"


def _predict_proposed(args, cfg: RunConfig, ws: Workspace) -> dict:
    variant = args.features or DEFAULT_VARIANT
    tag = ws.model_tag(variant, args.with_stats)
    fast = ws.fast_points()
    plan = _plan(ws, fast, create=False)
    features = ws.feature_store()
    by_video = group_by_video(fast)
    allowed = set(cfg.fast.inference_crfs)
    ladders = {}
    for k, rnd in enumerate(plan.rounds):
        path = ws.model_path(tag, k)
        if not path.exists():
            flag = "--with-compression-stats" if args.with_stats else "--no-compression-stats"
            raise ConfigError(f"no trained model at {path}; run `shotladder train --features {variant} {flag}`")
        model = load_model(path)
        for vid in rnd.test:
            pts = [p for p in by_video.get(vid, []) if p.job.crf in allowed]
            try:
                ladders[vid] = predicted_ladder(model, pts, features, variant, args.with_stats, cfg.ladder_steps)
            except (ShotLadderError, KeyError) as err:
                log.warning("no ladder for %s: %s", vid, err)
    return ladders


def cmd_predict_ladder(args, cfg: RunConfig) -> int:
    ws = Workspace(cfg)
    method = args.method
    if method == "proposed":
        name = _proposed_name(args)
        ladders = _predict_proposed(args, cfg, ws)
    elif method == "fixed":
        name = "fixed"
        table = load_fixed_table(cfg.fixed_ladder)
        lad = fixed_ladder(table, cfg.ladder_steps)
        ladders = {vid: lad for vid in sorted({p.video_id for p in ws.store.read()})}
    elif method == "hull":
        return _predict_hulls(args, cfg, ws)
    elif method == "two-step":
        name = "two-step"
        fc, fp = cfg.fast_encoder
        hulls = ws.read_hulls(fc, fp)
        if hulls is None:
            raise ConfigError(
                f"two-step needs the fast-encoder convex hull at {ws.hull_path(fc, fp)}; encode the full "
                f"{fc}/{fp} grid, then run `shotladder predict-ladder --method hull`"
            )
        ladders = two_step_ladders([p for h in hulls.values() for p in h.points], cfg.ladder_steps)
    else:
        name = "crossover"
        fast = ws.fast_points()
        plan = _plan(ws, fast, create=False)
        llf1 = ws.feature_store()["LLF1"]
        if not llf1:
            raise ConfigError("the cross-over method needs LLF1 features; run `shotladder extract-features`")
        ladders, _ = cross_validate_crossover(
            plan, fast, llf1, cfg.resolutions, cfg.model, cfg.rfe, cfg.seed, cfg.ladder_steps, cfg.crossover_features,
        )
    path = ws.write_ladders(name, ladders)
    log.info("%d ladders written to %s", len(ladders), path)
    return 0


def _predict_hulls(args, cfg: RunConfig, ws: Workspace) -> int:
    pairs = _settings_to_run(cfg, args.codec, args.preset)
    written = 0
    for codec, preset in pairs:
        pts = ws.points(codec, preset)
        if not pts:
            log.warning("no points for %s/%s; skipped", codec, preset)
            continue
        hulls = {}
        for vid, vp in group_by_video(pts).items():
            try:
                hulls[vid] = convex_hull(vp, cfg.quality_window)
            except ShotLadderError as err:
                log.warning("no hull for %s (%s/%s): %s", vid, codec, preset, err)
        ws.write_hulls(codec, preset, hulls)
        ladders = {vid: hull_ladder(h, cfg.ladder_steps) for vid, h in hulls.items()}
        ws.write_ladders(f"hull_{codec}_{preset}", ladders, "hull")
        written += 1
    if not written:
        raise ConfigError("no rate-quality points for any selected encoder; run `shotladder encode-grid` first")
    return 0


# evaluate ----------------------------------------------------------------------------------

def _method_files(args, ws: Workspace) -> list[str]:
    if args.method:
        names = []
        for m in dict.fromkeys(args.method):
            names.append(_proposed_name(args) if m == "proposed" else m)
        return names
    found = [n for n in ws.ladder_files() if not n.startswith("hull_") and n != "fixed"]
    return ["fixed", "hull", *found]


def cmd_evaluate(args, cfg: RunConfig) -> int:
    ws = Workspace(cfg)
    fixed = fixed_ladder(load_fixed_table(cfg.fixed_ladder), cfg.ladder_steps)
    methods = _method_files(args, ws)
    summaries = []
    for codec, preset in cfg.target_settings(args.codec, args.preset):
        pts = ws.points(codec, preset)
        if not pts:
            log.warning("no points for %s/%s; skipped", codec, preset)
            continue
        by_video = group_by_video(pts)
        for name in methods:
            if name == "fixed":
                ladders = {vid: fixed for vid in by_video}
            elif name == "hull":
                ladders = {}
                for vid, vp in by_video.items():
                    try:
                        ladders[vid] = hull_ladder(convex_hull(vp, cfg.quality_window), cfg.ladder_steps)
                    except ShotLadderError as err:
                        log.warning("no hull for %s: %s", vid, err)
            else:
                ladders = ws.read_ladders(name)
                if ladders is None:
                    log.warning("ladder file %s is missing; the %s row is flagged", ws.ladder_path(name), name)
                    ladders = {}
            summaries.append(evaluate_method(name, codec, preset, ladders, fixed, by_video,
                                             steps=cfg.ladder_steps))
    if not summaries:
        raise ConfigError("nothing to evaluate: no target-encoder points in the store")
    report = cfg.paths.reports / "report.csv"
    rows = write_report(report, summaries)
    write_video_details(cfg.paths.reports / "videos.csv", summaries)
    for r in rows:
        print(",".join(f"{v:.3f}" if isinstance(v, float) else str(v) for v in r))
    log.info("report written to %s", report)
    return 0


# crf-map ---------------------------------------------------------------------------------------

def cmd_crf_map(args, cfg: RunConfig) -> int:
    ws = Workspace(cfg)
    fast = ws.fast_points()
    for codec, preset in cfg.target_settings(args.codec, args.preset):
        if (codec, preset) == cfg.fast_encoder and args.codec is None:
            continue
        target = ws.points(codec, preset)
        if not target:
            log.warning("no points for %s/%s; skipped", codec, preset)
            continue
        mapping = crf_map(fast, target)
        path = cfg.paths.reports / f"crf_map_{codec}_{preset}.csv"
        write_csv(path, ["target_crf", "fast_crf", "count"], mapping.rows())
        log.info("%s/%s: %d renditions mapped, written to %s", codec, preset, len(mapping.pairs), path)
    return 0


COMMANDS = {
    "encode-grid": cmd_encode_grid,
    "extract-features": cmd_extract_features,
    "train": cmd_train,
    "predict-ladder": cmd_predict_ladder,
    "evaluate": cmd_evaluate,
    "crf-map": cmd_crf_map,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except ShotLadderError as err:
        print(f"shotladder: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
