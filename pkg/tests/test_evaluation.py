import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from rqutil import RES5, point, quad_quality, quad_rate, random_curve
from shotladder.errors import EmptyCurve, EmptyInput, NoCommonVideos, NoOverlap, TooFewVideos
from shotladder.evaluation import (
    REPORT_COLUMNS,
    BDPair,
    bd_quality,
    bd_rate,
    compare,
    crf_map,
    degree_used,
    evaluate_method,
    f75,
    kfold_split,
    plcc_by_resolution,
    polyfit_centered,
    rq_curve_from_ladder,
    write_report,
)
from shotladder.ladder import BitrateLadder, convex_hull, fixed_ladder, hull_ladder, load_fixed_table
from shotladder.media.synthetic import DEFAULT_PROFILES, params_from_content, synth_codec
from shotladder.media.jobs import EncodeJob

P540, P720, P1080, P1440, P2160 = RES5


# BD metrics ---------------------------------------------------------------

def test_bd_identity_is_zero():
    rng = np.random.default_rng(0)
    a = random_curve(rng, 6)
    assert abs(bd_rate(a, a)) < 1e-9
    assert abs(bd_quality(a, a)) < 1e-9


def test_bd_rate_uniform_shift():
    rng = np.random.default_rng(1)
    r, q = random_curve(rng)
    assert abs(bd_rate((r, q), (1.10 * r, q)) - 10.0) < 1e-6


def test_bd_quality_constant_offset():
    rng = np.random.default_rng(2)
    r, q = random_curve(rng)
    assert abs(bd_quality((r, q), (r, q + 2.0)) - 2.0) < 1e-6


def test_uniform_shift_composes_multiplicatively():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = random_curve(rng), random_curve(rng)
        try:
            base = bd_rate(a, b)
        except NoOverlap:
            continue
        f = float(rng.uniform(0.5, 2.0))
        shifted = bd_rate(a, (b[0] * f, b[1]))
        assert abs(shifted - ((1 + base / 100) * f - 1) * 100) < 1e-6


def test_bd_matches_quadrature_oracle():
    rng = np.random.default_rng(4)
    done = 0
    while done < 100:
        a, b = random_curve(rng), random_curve(rng)
        try:
            got_r, got_q = bd_rate(a, b), bd_quality(a, b)
        except NoOverlap:
            continue
        assert abs(got_r - quad_rate(a, b)) < 0.01
        assert abs(got_q - quad_quality(a, b)) < 0.001
        done += 1


def test_no_overlap():
    a = ([100, 200, 300, 400], [20, 25, 30, 35])
    b = ([1000, 2000, 3000, 4000], [60, 70, 80, 90])
    with pytest.raises(NoOverlap):
        bd_rate(a, b)
    with pytest.raises(NoOverlap):
        bd_quality(a, b)
    rep = compare(convex_hull([point(r, q, crf=i) for i, (r, q) in enumerate(zip(*a))]),
                  convex_hull([point(r, q, crf=i) for i, (r, q) in enumerate(zip(*b))]))
    assert not rep.overlap_ok and rep.bd_rate is None and rep.pair is None


def test_low_degree_fallback_is_flagged():
    a = ([100, 1000], [30, 60])
    b = ([150, 1500], [30, 60])
    assert degree_used(a, b) == 1
    # a straight line in (quality, log rate) shifted by a constant factor
    assert abs(bd_rate(a, b) - 50.0) < 1e-9


def test_inverse_fit_agrees_on_exact_laws():
    rng = np.random.default_rng(5)
    r, q = random_curve(rng, 6)
    assert abs(bd_rate((r, q), (1.1 * r, q), fit="inverse") - 10.0) < 1e-3
    assert abs(bd_quality((r, q), (r, q + 2.0), fit="inverse") - 2.0) < 1e-3


def test_centered_fit_recovers_cubic():
    x = np.linspace(30, 90, 12)
    y = 0.5 - 0.01 * x + 2e-4 * x**2 - 1e-6 * x**3
    fit = polyfit_centered(x, y)
    assert fit.degree == 3
    assert np.allclose(fit(x), y, atol=1e-12)
    assert abs(fit.integral(40, 80) - trapezoid(fit(np.linspace(40, 80, 100001)), np.linspace(40, 80, 100001))) < 1e-8


# f75 ---------------------------------------------------------------------------

def test_f75_examples():
    hull = [BDPair(-20.0, 3.0)] * 4
    assert f75(hull, hull) == 1.0
    assert f75([BDPair(0.0, 0.0)] * 4, hull) == 0.0
    with pytest.raises(EmptyInput):
        f75([], [])


def test_f75_hand_built_cohort():
    hull = [BDPair(-20.0, 4.0)] * 10
    good = BDPair(-15.0, 3.0)  # exactly 75% of both
    rate_short = BDPair(-14.9, 4.0)
    gain_short = BDPair(-20.0, 2.9)
    method = [good] * 7 + [rate_short, gain_short, None]
    assert f75(method, hull) == pytest.approx(0.7)


def test_f75_monotone_under_improvement():
    rng = np.random.default_rng(6)
    for _ in range(200):
        hull = [BDPair(float(rng.uniform(-40, 5)), float(rng.uniform(-1, 8))) for _ in range(8)]
        method = [BDPair(float(rng.uniform(-40, 5)), float(rng.uniform(-1, 8))) for _ in range(8)]
        before = f75(method, hull)
        k = int(rng.integers(8))
        better = list(method)
        better[k] = BDPair(method[k].rate - float(rng.uniform(0, 5)), method[k].quality + float(rng.uniform(0, 2)))
        assert f75(better, hull) >= before


def test_f75_hull_without_overlap_counts_zero_gain():
    assert f75([BDPair(0.0, 0.0)], [None]) == 1.0


# k-fold ------------------------------------------------------------------------

def test_kfold_small_partition():
    ids = [f"v{i}" for i in range(10)]
    plan = kfold_split(ids, k=5, seed=1)
    assert [len(f) for f in plan.folds] == [2] * 5
    tested = sorted(v for r in plan.rounds for v in r.test)
    assert tested == sorted(ids)
    for r in plan.rounds:
        assert not set(r.train) & set(r.test)
        assert not set(r.validation) & set(r.test)
        assert sorted(r.train + r.validation + r.test) == sorted(ids)


def test_kfold_217():
    plan = kfold_split([f"v{i:03d}" for i in range(217)], k=5, seed=0)
    assert sorted(len(f) for f in plan.folds) == [43, 43, 43, 44, 44]
    r = plan.rounds[0]
    assert len(r.validation) == round(0.1 * (217 - len(plan.folds[0])))


def test_kfold_deterministic_and_errors():
    ids = [str(i) for i in range(30)]
    assert kfold_split(ids, seed=4) == kfold_split(list(reversed(ids)), seed=4)
    assert kfold_split(ids, seed=4) != kfold_split(ids, seed=5)
    with pytest.raises(TooFewVideos):
        kfold_split(["a", "b"], k=5)


# ladder to curve ---------------------------------------------------------------

def _grid(vid="v", s=0.5, t=0.5, preset="medium", crfs=range(16, 63, 2)):
    params = params_from_content(s, t, profile=DEFAULT_PROFILES[preset])
    return [synth_codec(params, EncodeJob(vid, "synthetic", preset, w, h, c)) for (w, h) in RES5 for c in crfs]


def test_constant_ladder_takes_whole_resolution():
    pts = _grid()
    lad = BitrateLadder((100, 1000, 10000), (P1080,) * 3)
    curve = rq_curve_from_ladder(lad, pts)
    want = sorted(p.bitrate for p in pts if p.resolution == P1080 and p.bitrate >= 100 and 20 <= p.quality <= 99.9)
    assert list(curve.bitrates) == want


def test_hull_ladder_curve_is_subset_of_hull():
    pts = _grid()
    hull = convex_hull(pts)
    curve = rq_curve_from_ladder(hull_ladder(hull), hull.points)
    keys = {(p.bitrate, p.quality) for p in hull.points}
    assert curve.points and all((p.bitrate, p.quality) in keys for p in curve.points)


def test_empty_curve():
    lad = BitrateLadder((100,), (P1080,))
    with pytest.raises(EmptyCurve):
        rq_curve_from_ladder(lad, [point(500, 50, P720)])


# crf map -----------------------------------------------------------------------

def _rate_points(vid, preset, a, c, crfs):
    return [point(math.exp(a - c * crf), 50, P1080, crf=crf, vid=vid, preset=preset) for crf in crfs]


def test_crf_map_identity():
    pts = _rate_points("v", "veryfast", 12, 0.105, range(14, 51, 2))
    m = crf_map(pts, pts)
    assert all(t == f for (_, _, t), f in m.pairs.items())


def test_crf_map_synthetic_offset():
    c = math.log(2) / 4
    fast = _rate_points("v", "veryfast", 12 + math.log(2), c, range(10, 61))
    target = _rate_points("v", "slow", 12, c, range(14, 51, 2))
    dist = crf_map(fast, target).distribution()
    assert all(list(d) == [t + 4] for t, d in dist.items())


def test_crf_map_single_video_and_disjoint():
    fast = _rate_points("a", "veryfast", 12, 0.1, [20, 30])
    target = _rate_points("a", "slow", 12, 0.1, [25])
    assert sum(sum(d.values()) for d in crf_map(fast, target).distribution().values()) == 1
    with pytest.raises(NoCommonVideos):
        crf_map(fast, _rate_points("b", "slow", 12, 0.1, [25]))


# report ------------------------------------------------------------------------

def _cohort(n):
    return {f"v{i}": _grid(f"v{i}", s=0.2 + 0.6 * i / max(n - 1, 1), t=0.7 - 0.4 * i / max(n - 1, 1)) for i in range(n)}


def test_hull_against_itself_reports_zero(tmp_path):
    data = _cohort(4)
    hulls = {vid: hull_ladder(convex_hull(pts)) for vid, pts in data.items()}
    fixed = fixed_ladder(load_fixed_table())
    summary = evaluate_method("hull", "synthetic", "medium", hulls, fixed, data)
    row = dict(zip(REPORT_COLUMNS, summary.row()))
    assert row["mean_bd_rate_vs_hull"] == 0.0 and row["mean_bd_vmaf_vs_hull"] == 0.0
    assert row["f75"] == 1.0 and row["n_videos"] == 4 and row["n_no_overlap"] == 0
    rows = write_report(tmp_path / "r.csv", [summary])
    text = (tmp_path / "r.csv").read_text().splitlines()
    assert text[0] == ",".join(REPORT_COLUMNS) and len(text) == 2 and len(rows) == 1


def test_report_shape_methods_by_settings(tmp_path):
    data = {p: {vid: _grid(vid, s=0.3 + 0.02 * i, preset=p) for i, vid in enumerate(f"v{k}" for k in range(5))}
            for p in ("fast", "slow")}
    fixed = fixed_ladder(load_fixed_table())
    summaries = []
    for preset, pts in data.items():
        for method in ("fixed", "hull-ladder"):
            lads = {vid: fixed if method == "fixed" else hull_ladder(convex_hull(p)) for vid, p in pts.items()}
            summaries.append(evaluate_method(method, "synthetic", preset, lads, fixed, pts))
    rows = write_report(tmp_path / "r.csv", summaries)
    assert len(rows) == 4
    fixed_rows = [dict(zip(REPORT_COLUMNS, r)) for r in rows if r[0] == "fixed"]
    assert all(abs(r["mean_bd_rate_vs_fixed"]) < 1e-9 for r in fixed_rows)


def test_self_comparison_is_exact_zero():
    pts = _grid()
    h = convex_hull(pts)
    rep = compare(h, h)
    assert rep.bd_rate == 0.0 and rep.bd_quality == 0.0


def test_missing_ladder_is_flagged_not_fatal():
    data = {"v0": _grid("v0"), "v1": _grid("v1", s=0.3)}
    ladders = {"v0": hull_ladder(convex_hull(data["v0"]))}
    summary = evaluate_method("m", "synthetic", "medium", ladders, fixed_ladder(load_fixed_table()), data)
    errors = {r.video_id: r.error for r in summary.results}
    assert errors["v0"] is None and "EmptyCurve" in errors["v1"]
    row = dict(zip(REPORT_COLUMNS, summary.row()))
    assert row["n_videos"] == 2 and row["n_no_overlap"] == 1


def test_no_overlap_vs_fixed_counts_zero_gain():
    # the method curve lives entirely above the fixed ladder's quality range
    pts = [point(100 * 2**k, 21 + k, P540, crf=k) for k in range(6)]
    pts += [point(5000 * 2**k, 90 + k, P2160, crf=10 + k) for k in range(5)]
    fixed = BitrateLadder((100.0,), (P540,))
    method = BitrateLadder((100.0, 4000.0), (P2160, P2160))
    summary = evaluate_method("m", "synthetic", "medium", {"v": method}, fixed, {"v": pts})
    (res,) = summary.results
    assert not res.vs_fixed.overlap_ok
    row = dict(zip(REPORT_COLUMNS, summary.row()))
    assert row["mean_bd_rate_vs_fixed"] == 0.0 and row["f75"] == 0.0


def test_plcc_by_resolution():
    pts = [point(100 * k, 20 + k, P720, crf=k) for k in range(1, 6)] + [point(100 * k, 30 + k, P1080, crf=k) for k in range(1, 6)]
    pred = [p.quality * 2 + 1 for p in pts]
    out = plcc_by_resolution(pts, pred)
    assert list(out) == [P720, P1080]
    assert all(abs(v - 1.0) < 1e-12 for v in out.values())
