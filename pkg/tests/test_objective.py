import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_max_bbox, brute_force_wl2
from rapidplace.design import design_from_dict, replicate_netlist
from rapidplace.device import BlockType
from rapidplace.errors import ValidationError
from rapidplace.genotype import Placement, decode, random_genotype
from rapidplace.objective import (ObjectiveValues, check_constraints,
                                  evaluate_placement, max_bbox, scalarize,
                                  wirelength_squared)


def mk_design(blocks, connections=(), chains=()):
    return design_from_dict({
        "blocks": [{"id": i, "type": t, "unit": u} for i, t, u in blocks],
        "connections": [{"src": s, "dst": d, "weight": w} for s, d, w in connections],
        "chains": [{"type": t, "members": list(m)} for t, m in chains],
    })


def mk_placement(sites):
    ids = tuple(i for i, *_ in sites)
    types = tuple(BlockType(t) for _, t, *_ in sites)
    xs = np.array([s[2] for s in sites], dtype=np.int64)
    ys = np.array([s[3] for s in sites], dtype=np.int64)
    return Placement(ids, types, xs, ys)


def test_wl2_zero_distance():
    d = mk_design([(0, "DSP", 0), (1, "BRAM", 0)], [(0, 1, 1)])
    p = mk_placement([(0, "DSP", 3, 4), (1, "BRAM", 3, 4)])
    assert wirelength_squared(p, d) == 0


def test_wl2_direct_arithmetic():
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0)], [(0, 1, 2)])
    p = mk_placement([(0, "DSP", 0, 0), (1, "DSP", 3, 4)])
    assert wirelength_squared(p, d) == ((3 + 4) * 2) ** 2 == 196


def test_wl2_triangle():
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0), (2, "DSP", 0)],
                  [(0, 1, 1), (0, 2, 1), (1, 2, 1)])
    p = mk_placement([(0, "DSP", 0, 0), (1, "DSP", 1, 0), (2, "DSP", 0, 1)])
    assert wirelength_squared(p, d) == 1 + 1 + 4 == brute_force_wl2(p, d)


def test_bbox_single_unit():
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0)])
    p = mk_placement([(0, "DSP", 0, 0), (1, "DSP", 2, 3)])
    assert max_bbox(p, d) == 5


def test_bbox_single_column():
    d = mk_design([(i, "DSP", 0) for i in range(9)])
    p = mk_placement([(i, "DSP", 4, i) for i in range(9)])
    assert max_bbox(p, d) == 8


def test_bbox_takes_max_over_units():
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0), (2, "DSP", 1), (3, "DSP", 1)])
    p = mk_placement([(0, "DSP", 0, 0), (1, "DSP", 2, 3),
                      (2, "DSP", 5, 0), (3, "DSP", 9, 5)])
    assert max_bbox(p, d) == 9


def test_missing_assignment_error():
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0)], [(0, 1, 1)])
    p = mk_placement([(0, "DSP", 0, 0)])
    with pytest.raises(ValidationError, match="missing assignment"):
        wirelength_squared(p, d)


def test_scalarize_product():
    assert scalarize(ObjectiveValues.of(100, 5)) == 500
    assert scalarize(ObjectiveValues.of(0, 7)) == 0
    assert scalarize(ObjectiveValues.of(100, 0)) == 100  # degenerate bbox


def test_objective_values_invariant():
    with pytest.raises(ValidationError):
        ObjectiveValues(10, 10, 11)


def test_check_constraints_cascade_rules(tiny4):
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0), (2, "BRAM", 0), (3, "BRAM", 0)],
                  chains=[("DSP", (0, 1)), ("BRAM", (2, 3))])
    ok = mk_placement([(0, "DSP", 1, 2), (1, "DSP", 1, 3),
                       (2, "BRAM", 0, 2), (3, "BRAM", 0, 4)])
    assert check_constraints(ok, d, tiny4, 0).ok
    bad = mk_placement([(0, "DSP", 1, 2), (1, "DSP", 1, 3),
                        (2, "BRAM", 0, 2), (3, "BRAM", 0, 3)])
    report = check_constraints(bad, d, tiny4, 0)
    assert not report.ok
    assert any(v.kind == "cascade" and v.blocks == (2, 3)
               for v in report.violations)


def test_check_constraints_exclusivity(tiny4):
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0)])
    p = mk_placement([(0, "DSP", 1, 5), (1, "DSP", 1, 5)])
    report = check_constraints(p, d, tiny4, 0)
    assert any(v.kind == "exclusivity" for v in report.violations)


def test_check_constraints_region_bounds(tiny4):
    d = mk_design([(0, "DSP", 0)])
    p = mk_placement([(0, "DSP", 1, 40)])  # beyond ymax=36
    report = check_constraints(p, d, tiny4, 0)
    assert any(v.kind == "region" for v in report.violations)


def test_check_constraints_missing_site(tiny4):
    # URAM column only has 4 sites; y=10 is in-region but not a site
    d = mk_design([(0, "URAM", 0)])
    p = mk_placement([(0, "URAM", 2, 10)])
    report = check_constraints(p, d, tiny4, 0)
    assert any(v.kind == "region" and "no URAM site" in v.detail
               for v in report.violations)


def test_matches_brute_force_on_random_placements(tiny4, conv2):
    for seed in range(20):
        p = decode(random_genotype(tiny4, conv2, 0, seed), tiny4, conv2, 0)
        v = evaluate_placement(p, conv2)
        assert v.wl2 == brute_force_wl2(p, conv2)
        assert v.max_bbox == brute_force_max_bbox(p, conv2)
        assert v.scalar == v.wl2 * v.max_bbox


@settings(max_examples=40, deadline=None)
@given(dx=st.integers(-50, 50), dy=st.integers(-50, 50), seed=st.integers(0, 50))
def test_translation_invariance(tiny4, conv2, dx, dy, seed):
    p = decode(random_genotype(tiny4, conv2, 0, seed), tiny4, conv2, 0)
    shifted = Placement(p.block_ids, p.block_types, p.xs + dx, p.ys + dy)
    a = evaluate_placement(p, conv2)
    b = evaluate_placement(shifted, conv2)
    assert (a.wl2, a.max_bbox) == (b.wl2, b.max_bbox)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_moving_endpoint_farther_never_decreases_wl2(data):
    d = mk_design([(0, "DSP", 0), (1, "DSP", 0), (2, "DSP", 0)],
                  [(0, 1, 2), (1, 2, 1)])
    xs = data.draw(st.lists(st.integers(0, 20), min_size=3, max_size=3))
    ys = data.draw(st.lists(st.integers(0, 20), min_size=3, max_size=3))
    p = mk_placement([(i, "DSP", xs[i], ys[i]) for i in range(3)])
    base = wirelength_squared(p, d)
    # move block 0 strictly farther from block 1 along x
    step = data.draw(st.integers(1, 10))
    direction = 1 if xs[0] >= xs[1] else -1
    moved = mk_placement([(0, "DSP", xs[0] + direction * step, ys[0]),
                          (1, "DSP", xs[1], ys[1]),
                          (2, "DSP", xs[2], ys[2])])
    assert wirelength_squared(moved, d) >= base


def test_evaluation_is_pure(tiny4, conv2):
    p = decode(random_genotype(tiny4, conv2, 0, 1), tiny4, conv2, 0)
    xs0, ys0 = p.xs.copy(), p.ys.copy()
    evaluate_placement(p, conv2)
    check_constraints(p, conv2, tiny4, 0)
    assert np.array_equal(p.xs, xs0) and np.array_equal(p.ys, ys0)
