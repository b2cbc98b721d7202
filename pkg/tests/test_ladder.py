import itertools
import math
import time

import numpy as np
import pytest

from rqutil import RES5, brute_hull, point, random_points
from shotladder.errors import EmptyHull, EmptyTable, InsufficientPredictions
from shotladder.ladder import (
    LADDER_STEPS,
    BitrateLadder,
    FixedTable,
    convex_hull,
    crossover_bitrates,
    crossover_ladder,
    curves_by_resolution,
    fixed_ladder,
    hull_ladder,
    ladder_from_predictions,
    load_fixed_table,
    pixels,
    read_ladders,
    top_bottom_correction,
    two_step_ladder,
    write_ladders,
)
from shotladder.media.synthetic import ResolutionModel, logistic_quality

P540, P720, P1080, P1440, P2160 = RES5


def test_hull_matches_brute_force_on_random_sets():
    rng = np.random.default_rng(7)
    sets = [random_points(rng, int(rng.integers(1, 21))) for _ in range(1000)]
    t0 = time.perf_counter()
    hulls = []
    for pts in sets:
        try:
            hulls.append(convex_hull(pts).points)
        except EmptyHull:
            hulls.append([])
    elapsed = time.perf_counter() - t0
    for pts, got in zip(sets, hulls):
        assert [(p.bitrate, p.quality) for p in got] == [(p.bitrate, p.quality) for p in brute_hull(pts)]
    assert elapsed < 5.0


def test_hull_singleton_and_dominance():
    a = point(1000, 80)
    assert convex_hull([a]).points == [a]
    b = point(2000, 70)
    assert convex_hull([a, b]).points == [a]


def test_hull_empty_window():
    with pytest.raises(EmptyHull):
        convex_hull([point(100, 10), point(200, 99.95)])


def test_hull_strictly_increasing_and_undominated():
    rng = np.random.default_rng(3)
    for _ in range(200):
        pts = random_points(rng, 15)
        try:
            h = convex_hull(pts)
        except EmptyHull:
            continue
        assert np.all(np.diff(h.bitrates) > 0) and np.all(np.diff(h.qualities) > 0)
        for p in h.points:
            assert not any(q.bitrate < p.bitrate and q.quality > p.quality
                           for q in pts if 20 <= q.quality <= 99.9)


# ladder_from_predictions ------------------------------------------------------

def test_dominant_resolution_gives_constant_ladder():
    rates = [100, 1000, 20000]
    curves = {P720: (rates, [30, 50, 70]), P1080: (rates, [40, 60, 80])}
    lad = ladder_from_predictions(curves)
    assert set(lad.resolutions) == {P1080}
    assert len(lad.steps) == 22


def test_crossing_logistics_switch_between_2400_and_3000():
    # equal slopes; the higher resolution's midpoint is solved so the curves meet at 2500 kbps
    low = ResolutionModel(q_max=80.0, midpoint=math.log(900.0), slope=1.5, rate_intercept=10.0, rate_slope=0.1)
    q_cross = logistic_quality(low, 2500.0)
    mid_high = math.log(2500.0) + math.log(95.0 / q_cross - 1.0) / 1.5
    high = ResolutionModel(q_max=95.0, midpoint=mid_high, slope=1.5, rate_intercept=10.0, rate_slope=0.1)
    assert abs(logistic_quality(high, 2500.0) - q_cross) < 1e-9
    rates = np.geomspace(50, 30000, 60)
    curves = {
        P720: (rates, [logistic_quality(low, r) for r in rates]),
        P1080: (rates, [logistic_quality(high, r) for r in rates]),
    }
    lad = ladder_from_predictions(curves)
    assert lad.at(2400) == P720
    assert lad.at(3000) == P1080


def test_outside_span_uses_nearest_endpoint():
    curves = {P540: ([150, 300], [30, 40]), P2160: ([9000, 20000], [85, 95])}
    lad = ladder_from_predictions(curves, steps=(100, 1000, 6000, 15000))
    assert lad.resolutions == (P540, P540, P2160, P2160)


def test_tie_goes_to_lower_resolution():
    curves = {P1080: ([100, 20000], [30, 90]), P720: ([100, 20000], [30, 90])}
    assert set(ladder_from_predictions(curves).resolutions) == {P720}


def test_insufficient_predictions():
    with pytest.raises(InsufficientPredictions):
        ladder_from_predictions({P720: ([1000], [50])})
    with pytest.raises(InsufficientPredictions):
        ladder_from_predictions({})


def test_oracle_on_hull_points_reproduces_hull_ladder():
    rng = np.random.default_rng(11)
    for _ in range(300):
        pts = random_points(rng, 20)
        try:
            h = convex_hull(pts)
        except EmptyHull:
            continue
        if not any(sum(p.resolution == r for p in h.points) >= 2 for r in RES5):
            continue
        by_res = {r: [p for p in h.points if p.resolution == r] for r in RES5}
        # a resolution that reappears after another one breaks span contiguity
        seq = [p.resolution for p in h.points]
        if len([k for k, _ in itertools.groupby(seq)]) != len(set(seq)):
            continue
        pred = ladder_from_predictions(curves_by_resolution(h.points))
        assert pred.resolutions == hull_ladder(h).resolutions, by_res


# top-bottom correction ----------------------------------------------------------

def test_correction_worked_example():
    lad = BitrateLadder((1000, 2000, 3000), (P1080, P720, P1080))
    assert top_bottom_correction(lad).resolutions == (P720, P720, P1080)


def test_correction_fixpoints():
    mono = BitrateLadder((1, 2, 3), (P540, P720, P2160))
    assert top_bottom_correction(mono) == mono
    flat = BitrateLadder((1, 2, 3), (P1080,) * 3)
    assert top_bottom_correction(flat) == flat


def test_correction_monotone_and_idempotent_random():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        res = tuple(RES5[i] for i in rng.integers(0, 5, size=22))
        out = top_bottom_correction(BitrateLadder(LADDER_STEPS, res))
        assert out.is_monotone()
        assert top_bottom_correction(out) == out


def _changes(a, b):
    return sum(x != y for x, y in zip(a, b))


def test_correction_minimal_for_single_spikes():
    # one rung above its successor, with the rest already in order, is fixed
    # by touching that rung alone (brute force over lengths up to 6)
    checked = 0
    for n in range(2, 7):
        for seq in itertools.product(RES5, repeat=n):
            keys = [pixels(r) for r in seq]
            bad = [k for k in range(n - 1) if keys[k] > keys[k + 1]]
            if len(bad) != 1:
                continue
            i = bad[0]
            rest = keys[:i] + keys[i + 1:]
            if not all(a <= b for a, b in zip(rest, rest[1:])):
                continue
            out = top_bottom_correction(BitrateLadder(tuple(range(n)), seq))
            assert out.is_monotone()
            assert _changes(seq, out.resolutions) == 1
            checked += 1
    assert checked > 1000


def test_correction_not_minimal_for_long_dips():
    # a low rung under a run of higher ones drags the whole run down
    seq = (P1080, P1080, P720, P1080)
    out = top_bottom_correction(BitrateLadder((1, 2, 3, 4), seq)).resolutions
    assert out == (P720, P720, P720, P1080)
    assert _changes(seq, out) == 2


# fixed, two-step and cross-over ladders ---------------------------------------------

def test_fixed_ladder_defaults():
    table = load_fixed_table()
    lad = fixed_ladder(table)
    assert lad.at(100) == (960, 540)
    assert lad.is_monotone()
    rates = [r for r, _ in table.rungs]
    # a step sitting exactly on a rung takes that rung
    assert lad.resolutions[LADDER_STEPS.index(2400)] == dict(table.rungs)[2400.0]
    assert rates == sorted(rates)


def test_fixed_ladder_boundary_and_empty(tmp_path):
    table = FixedTable(((1000.0, P720), (5000.0, P2160)))
    lad = fixed_ladder(table, steps=(999, 1000, 4999, 5000))
    assert lad.resolutions == (P540, P720, P720, P2160)
    with pytest.raises(EmptyTable):
        fixed_ladder(FixedTable(()))
    cfg = tmp_path / "t.yaml"
    cfg.write_text("floor: [640, 360]\nrungs:\n  - {kbps: 500, width: 1280, height: 720}\n")
    t = load_fixed_table(cfg)
    assert t.floor == (640, 360) and t.rungs == ((500.0, P720),)


def test_two_step_single_resolution_is_constant():
    h = convex_hull([point(200 * 2**k, 25 + 10 * k, P1080, crf=k) for k in range(7)])
    assert set(two_step_ladder(h).resolutions) == {P1080}


def test_two_step_switch_at_5000():
    low = [point(r, q, P720) for r, q in [(1000, 50), (2000, 60), (4000, 66)]]
    # geometric midpoint between 4000 and 6250 is 5000
    high = [point(r, q, P2160) for r, q in [(6250, 75), (12000, 85), (20000, 90)]]
    lad = two_step_ladder(convex_hull(low + high))
    assert lad.at(4500) == P720 and lad.at(5000) == P2160
    assert lad.is_monotone()


def test_crossover_ladder_threshold_walk():
    lad = crossover_ladder([800, 2000, 6000, 12000], RES5)
    assert lad.at(1000) == P720
    assert lad.at(7000) == P1440
    assert lad.at(100) == P540
    assert lad.at(15000) == P2160


def test_crossover_ladder_clipping():
    assert set(crossover_ladder([16000, 17000, 18000, 19000], RES5).resolutions) == {P540}
    clipped = crossover_ladder([2000, 800, 3000, 4000], RES5)
    reference = crossover_ladder([2000, 2000, 3000, 4000], RES5)
    assert clipped == reference
    with pytest.raises(ValueError):
        crossover_ladder([1000], RES5)


def test_crossover_bitrates_of_linear_curves():
    rates = np.geomspace(100, 20000, 9)
    lr = np.log(rates)
    curves = {
        P720: (rates, 10 * lr),
        # overtakes where 12 lr - 15 = 10 lr, i.e. lr = 7.5
        P1080: (rates, 12 * lr - 15),
    }
    (x,) = crossover_bitrates(curves, [P720, P1080], grid_points=4001)
    assert abs(math.log(x) - 7.5) < 2e-3


def test_ladder_csv_round_trip(tmp_path):
    lad = fixed_ladder(load_fixed_table())
    path = tmp_path / "l.csv"
    write_ladders(path, lad.rows("v1", "fixed") + lad.rows("v2", "fixed"))
    back = read_ladders(path)
    assert back[("v1", "fixed")] == BitrateLadder(tuple(float(s) for s in lad.steps), lad.resolutions)
    assert set(back) == {("v1", "fixed"), ("v2", "fixed")}
