"""Walk through per-shot ladder prediction on a synthetic cohort, using the library directly.

Thirty videos get low-level and VIF-style descriptors plus a deterministic synthetic
encoder. A quality model is trained with 5-fold cross-validation on the fast preset,
ladders are predicted for held-out videos, and everything is scored against the
fixed ladder and the exhaustive convex hull.

    python demos/synthetic_cohort.py [--videos 30] [--trees 50]
"""
import argparse
import time

from shotladder.cohort import encode_cohort, feature_store, make_cohort
from shotladder.evaluation import evaluate_method, kfold_split
from shotladder.ladder import convex_hull, fixed_ladder, hull_ladder, load_fixed_table
from shotladder.media.jobs import crf_grid
from shotladder.pipeline import cross_validate_quality, two_step_ladders
from shotladder.regression import ForestParams

INFERENCE_CRFS = [18, 22, 26, 30, 34, 38, 42]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--videos", type=int, default=30)
    ap.add_argument("--trees", type=int, default=50)
    args = ap.parse_args()

    t0 = time.perf_counter()
    cohort = make_cohort(args.videos, seed=0)
    features = feature_store(cohort)
    fast = encode_cohort(cohort, "veryfast", crf_grid(14, 50))
    slow = encode_cohort(cohort, "slow", crf_grid(14, 50))
    print(f"{len(cohort)} videos, {len(fast)} fast-preset encodes, {len(slow)} slow-preset encodes")

    by_fast, by_slow = {}, {}
    for p in fast:
        by_fast.setdefault(p.video_id, []).append(p)
    for p in slow:
        by_slow.setdefault(p.video_id, []).append(p)

    first = next(iter(by_fast))
    print(f"\nhull ladder of {first}:")
    lad = hull_ladder(convex_hull(by_fast[first]))
    for step, (w, h) in zip(lad.steps, lad.resolutions):
        print(f"  {step:>7.0f} kbps -> {w}x{h}")

    fixed = fixed_ladder(load_fixed_table())
    plan = kfold_split(by_fast, 5, seed=0)
    rows = []
    for with_stats in (True, False):
        cv = cross_validate_quality(plan, fast, features, "llf2+viff", with_stats, INFERENCE_CRFS,
                                    ForestParams(n_trees=args.trees), seed=0)
        tag = "proposed (stats)" if with_stats else "proposed (no stats)"
        plcc = sum(cv.mean_test_plcc().values()) / len(cv.mean_test_plcc())
        print(f"{tag}: mean held-out PLCC {plcc:.4f}")
        rows.append(evaluate_method(tag, "synthetic", "veryfast", cv.ladders, fixed, by_fast).row())
    hulls = {v: hull_ladder(convex_hull(p)) for v, p in by_fast.items()}
    rows.append(evaluate_method("hull", "synthetic", "veryfast", hulls, fixed, by_fast).row())
    rows.append(evaluate_method("fixed", "synthetic", "veryfast", {v: fixed for v in by_fast}, fixed, by_fast).row())
    # reuse the fast preset's hull on the slow preset
    rows.append(evaluate_method("two-step", "synthetic", "slow", two_step_ladders(fast), fixed, by_slow).row())

    print(f"\n{'method':<22}{'preset':<10}{'BD-rate vs hull %':>18}{'BD-VMAF vs hull':>17}"
          f"{'BD-rate vs fixed %':>20}{'f75':>6}")
    for method, _, preset, rate, vmaf, vs_fixed, f, *_ in rows:
        print(f"{method:<22}{preset:<10}{rate:>18.3f}{vmaf:>17.3f}{vs_fixed:>20.3f}{f:>6.2f}")
    print(f"\ndone in {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
