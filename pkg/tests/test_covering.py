import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from thetadim.covering import (
    CoveringQuery,
    box_counting_dimension,
    brute_force_cover_cost,
    cover_cost_levels,
    default_schedule,
    dim_estimate,
    level_range,
    min_theta,
    optimal_cover_cost,
    theta_sweep,
)
from thetadim.dyadic_core import DyadicSet, morton_decode
from thetadim.errors import DomainError, EmptySetError, OverLimitError, ResolutionError
from thetadim.generators import gen_cube, gen_pattern_fractal, gen_point, gen_sequence_set

from conftest import dyadic_sets


def test_query_validation():
    with pytest.raises(DomainError):
        CoveringQuery(1.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        CoveringQuery(1.0, 0.5, 1.5)
    assert CoveringQuery(1.0, 0.5, 0.25).fine_scale == pytest.approx(0.0625)


def test_level_range_examples():
    assert level_range(1, 10, 1.0, 2.0**-3) == (3, 3, False)
    assert level_range(2, 12, 0.5, math.sqrt(2) * 2.0**-4) == (4, 7, False)
    with pytest.raises(ResolutionError) as err:
        level_range(2, 6, 0.1, 0.1)
    assert err.value.min_delta is not None
    assert level_range(2, 6, 0.1, 0.1, clamp=True)[1:] == (6, True)


def test_level_range_empty_interval_raises():
    # theta = 1 and delta strictly between two cube diameters: no level fits
    with pytest.raises(ResolutionError):
        level_range(1, 10, 1.0, 0.3)


def test_interval_single_level_cost():
    assert cover_cost_levels(gen_cube(1, 5), 1.0, 3, 3)[0] == pytest.approx(1.0)


def test_interval_two_level_cost():
    assert cover_cost_levels(gen_cube(1, 5), 0.5, 1, 2)[0] == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_single_point_uses_finest_cube(d):
    # one cube suffices, and for s > 0 the smallest admissible one is cheapest
    pt = gen_point(d, 8)
    q = CoveringQuery(0.7, 0.5, math.sqrt(d) * 2.0**-3)
    res = optimal_cover_cost(pt, q)
    assert res.cover_size == 1
    expected = (math.sqrt(d) * 2.0 ** -res.level_range[1]) ** 0.7
    assert res.cost == pytest.approx(expected)
    assert brute_force_cover_cost(pt, q) == pytest.approx(expected)


@pytest.mark.parametrize("s, parent_wins", [(0.5, True), (0.99, True), (1.01, False), (2.0, False)])
def test_two_siblings_crossover_at_one(s, parent_wins):
    sibs = DyadicSet.from_leaf_indices(np.array([[0], [1]]), 1, 3)
    cost = cover_cost_levels(sibs, s, 2, 3)[0]
    two = 2 * (2.0**-3) ** s
    one = (2.0**-2) ** s
    assert cost == pytest.approx(min(one, two))
    assert (one < two) == parent_wins


@settings(max_examples=250)
@given(dyadic_sets(max_depth=5, max_points=10), st.floats(0.05, 3.0), st.floats(0.2, 1.0), st.floats(0.02, 0.95))
def test_dp_matches_brute_force(dset, s, theta, delta):
    try:
        res = optimal_cover_cost(dset, CoveringQuery(s, theta, delta), clamp=True)
    except ResolutionError:
        assume(False)
    try:
        brute = brute_force_cover_cost(dset, CoveringQuery(s, theta, delta), levels=res.level_range)
    except OverLimitError:
        assume(False)
    assert res.cost == pytest.approx(brute, rel=1e-12)


@given(dyadic_sets(max_depth=6), st.floats(0.1, 2.5), st.data())
def test_cover_is_exact_disjoint_and_priced(dset, s, data):
    lf = data.draw(st.integers(0, dset.depth))
    lc = data.draw(st.integers(0, lf))
    cost, size, cover = cover_cost_levels(dset, s, lc, lf, return_cover=True)
    assert sum(c.size for c in cover.values()) == size
    assert all(lc <= lvl <= lf for lvl in cover)
    # each leaf lies under exactly one chosen cube
    hits = np.zeros(dset.n_leaves, dtype=int)
    for lvl, codes in cover.items():
        anc = dset.leaves >> (dset.d * (dset.depth - lvl))
        hits += np.isin(anc, codes)
    assert np.all(hits == 1)
    priced = math.fsum(c.size * (math.sqrt(dset.d) * 2.0**-lvl) ** s for lvl, c in cover.items())
    assert priced == pytest.approx(cost, rel=1e-12)


@given(dyadic_sets(max_depth=6), st.floats(0.0, 2.5), st.floats(0.01, 1.0))
def test_cost_nonincreasing_in_s(dset, s, ds):
    # from level 1 on every cube diameter is below 1
    a = cover_cost_levels(dset, s, 1, dset.depth)[0]
    b = cover_cost_levels(dset, s + ds, 1, dset.depth)[0]
    assert b <= a * (1 + 1e-12)


@given(dyadic_sets(max_depth=6), st.floats(0.1, 2.5), st.data())
def test_cost_nonincreasing_as_range_widens(dset, s, data):
    lf = data.draw(st.integers(0, dset.depth))
    lc = data.draw(st.integers(0, lf))
    base = cover_cost_levels(dset, s, lc, lf)[0]
    if lc > 0:
        assert cover_cost_levels(dset, s, lc - 1, lf)[0] <= base * (1 + 1e-12)
    if lf < dset.depth:
        assert cover_cost_levels(dset, s, lc, lf + 1)[0] <= base * (1 + 1e-12)


@given(dyadic_sets(max_depth=6), st.floats(0.1, 2.5), st.floats(0.1, 10.0))
def test_cost_scales_by_lambda_power(dset, s, lam):
    a = cover_cost_levels(dset, s, 0, dset.depth)[0]
    b = cover_cost_levels(dset, s, 0, dset.depth, diameter_scale=lam)[0]
    assert b == pytest.approx(lam**s * a, rel=1e-10)


def test_with_cover_reports_cubes():
    res = optimal_cover_cost(gen_cube(1, 6), CoveringQuery(1.0, 1.0, 2.0**-3), with_cover=True)
    assert res.cover_size == 8
    assert sorted(res.chosen_cover) == [(3, (i,)) for i in range(8)]


def test_brute_force_limits_and_errors():
    with pytest.raises(OverLimitError):
        brute_force_cover_cost(gen_cube(2, 4), CoveringQuery(1.0, 0.5, 0.7), levels=(1, 3), limit=8)
    with pytest.raises(EmptySetError):
        optimal_cover_cost(DyadicSet.empty(1, 3), CoveringQuery(1.0, 1.0, 0.25))


def test_default_schedule_and_min_theta():
    cp_like = gen_sequence_set(1, 14)
    sched = default_schedule(cp_like, 0.5)
    assert len(sched) >= 2 and all(0 < x < 1 for x in sched)
    assert sched == sorted(sched, reverse=True)
    with pytest.raises(ResolutionError):
        default_schedule(gen_cube(2, 8), 0.1)
    assert min_theta(2, 8, 3) == pytest.approx(2.5 / 7.5)


def test_cube_estimate_with_clamped_schedule():
    cube = gen_cube(2, 10)
    sched = [2.0**-k for k in range(4, 10)]
    est = dim_estimate(cube, 0.5, schedule=sched, clamp=True)
    assert est.value == pytest.approx(2.0, abs=0.05)
    assert est.diagnostics["clamped"]


@pytest.mark.parametrize("theta", [0.25, 0.5, 1.0])
def test_diagonal_estimate(theta):
    diag = gen_pattern_fractal([0, 3], 12, 2)
    assert dim_estimate(diag, theta).value == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("mode", ["regression", "liminf", "limsup"])
def test_point_is_zero_dimensional(mode):
    assert dim_estimate(gen_point(2, 10), 0.5, mode=mode).value == 0.0


def test_modes_are_ordered():
    seq = gen_sequence_set(1, 14)
    lo = dim_estimate(seq, 0.5, mode="liminf").value
    hi = dim_estimate(seq, 0.5, mode="limsup").value
    assert 0 <= lo <= hi <= 1


def test_estimate_diagnostics_present():
    est = dim_estimate(gen_sequence_set(1, 12), 0.75)
    diag = est.diagnostics
    assert diag["depth"] == 12 and diag["clamped"] is False
    assert "tail_crossings_eps_0.1" in diag and "tail_crossings_eps_10" in diag
    for row in est.per_scale:
        assert set(row) >= {"delta", "s_cross", "cost_at_cross", "cover_size", "levels", "clamped"}


def test_estimate_argument_errors():
    seq = gen_sequence_set(1, 10)
    with pytest.raises(DomainError):
        dim_estimate(seq, 0.0)
    with pytest.raises(DomainError):
        dim_estimate(seq, 0.5, mode="median")
    with pytest.raises(EmptySetError):
        dim_estimate(DyadicSet.empty(1, 4), 0.5)


@pytest.mark.parametrize("make", [
    lambda: gen_sequence_set(1, 14),
    lambda: gen_pattern_fractal([0, 1, 2], 10, 2),
    lambda: gen_pattern_fractal([0, 3], 12, 2),
])
def test_theta_sweep_monotone(make):
    results = theta_sweep(make(), [0.25, 0.5, 0.75, 1.0])
    values = [e.value for _, e in results]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("make", [
    lambda: gen_pattern_fractal([0, 3], 12, 2),
    lambda: gen_pattern_fractal([0, 1, 2], 10, 2),
    lambda: gen_cube(2, 9),
])
def test_upper_slack_three_is_harmless(make):
    s = make()
    for theta in (0.5, 1.0):
        a = dim_estimate(s, theta).value
        b = dim_estimate(s, theta, upper_slack=3.0).value
        assert abs(a - b) < 0.02


@pytest.mark.parametrize("make", [
    lambda: gen_sequence_set(1, 14),
    lambda: gen_pattern_fractal([0, 1, 2], 10, 2),
    lambda: gen_pattern_fractal([0, 3], 12, 2),
    lambda: gen_cube(2, 9),
])
def test_theta_one_matches_box_counting(make):
    s = make()
    assert dim_estimate(s, 1.0).value == pytest.approx(box_counting_dimension(s, 4), abs=0.05)
