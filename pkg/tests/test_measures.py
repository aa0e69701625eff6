import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from thetadim.covering import cover_cost_levels
from thetadim.dyadic_core import dyadic_dimension
from thetadim.errors import DegenerateScaleError, DomainError, EmptySetError, ResolutionError
from thetadim.generators import gen_cube, gen_pattern_fractal, gen_point, gen_product, gen_sequence_set
from thetadim.measures import (
    DiscreteMeasure,
    ball_mass,
    ball_masses,
    build_joint_frostman,
    frostman_levels,
    load_measure,
    point_mass,
    product_measure,
    save_measure,
    uniform_measure,
    verify_frostman_profile,
)

from conftest import dyadic_sets


def brute_ball(mu, x, r):
    side = 2.0**-mu.depth
    lo = mu.base.lower_corners(mu.depth)
    near = np.maximum(np.maximum(lo - x, x - lo - side), 0)
    return float(mu.weights[np.sqrt((near**2).sum(axis=1)) < r].sum())


def test_measure_validation():
    s = gen_cube(1, 3)
    with pytest.raises(DomainError):
        DiscreteMeasure(s, np.ones(3))
    with pytest.raises(DomainError):
        DiscreteMeasure(s, -np.ones(8))
    with pytest.raises(EmptySetError):
        uniform_measure(gen_cube(1, 3).truncate(0).__class__.empty(1, 3))


def test_level_mass_and_coarsen_preserve_mass(rng):
    s = gen_sequence_set(1, 10)
    mu = DiscreteMeasure(s, rng.random(s.n_leaves))
    for n in range(11):
        assert math.fsum(mu.level_mass(n)) == pytest.approx(mu.total_mass)
    c = mu.coarsen(6)
    assert c.depth == 6 and c.total_mass == pytest.approx(mu.total_mass)
    np.testing.assert_allclose(c.weights, mu.level_mass(6))


def test_product_measure_weights():
    a = uniform_measure(gen_cube(1, 4))
    b = uniform_measure(gen_sequence_set(1, 4))
    prod = product_measure(a, b)
    assert prod.base == gen_product(a.base, b.base)
    assert prod.total_mass == pytest.approx(1.0)
    np.testing.assert_allclose(prod.weights, 1.0 / prod.base.n_leaves)


def test_frostman_levels():
    assert frostman_levels(1, 0.5, 2.0**-8) == (16, 8)
    assert frostman_levels(2, 0.5, 2.0**-7) == (14, 8)


def test_frostman_interval_example():
    s = gen_cube(1, 16)
    mu, tr = build_joint_frostman(s, 0.5, 0.9, 0.5, 2.0**-8)
    assert (tr.fine_level, tr.coarse_level) == (16, 8)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-12)
    cap8 = 2.0 ** (-8 * 0.5)
    assert np.all(mu.level_mass(8) <= cap8 / tr.normalization * (1 + 1e-12))
    dp = cover_cost_levels(s, 0.5, 8, 16)[0]
    assert tr.normalization >= dp * 1.0 ** (-0.25) * (1 - 1e-12)
    assert tr.check_caps() and tr.check_monotone_chain()


def test_frostman_single_point_keeps_all_mass():
    pt = gen_pattern_fractal([0], 12, 1)
    mu, tr = build_joint_frostman(pt, 0.5, 0.5, 0.5, 2.0**-4, check_alpha=False)
    assert mu.weights.tolist() == [1.0]
    assert np.all(tr.branching_products == 1)


def test_frostman_errors():
    s = gen_cube(1, 10)
    with pytest.raises(ResolutionError):
        build_joint_frostman(s, 0.5, 0.9, 0.5, 2.0**-8)
    with pytest.raises(DegenerateScaleError):
        build_joint_frostman(gen_cube(1, 12), 0.5, 0.9, 0.9, 2.0**-8)
    with pytest.raises(DomainError):
        build_joint_frostman(s, 0.5, 0.9, 1.0, 2.0**-3)
    with pytest.raises(DomainError):
        build_joint_frostman(gen_point(1, 10), 0.5, 0.5, 0.5, 2.0**-3)
    with pytest.raises(DomainError):
        build_joint_frostman(s, 1.5, 0.9, 0.5, 2.0**-3)


@given(dyadic_sets(max_depth=9, min_depth=6, max_points=40), st.floats(0.1, 1.0), st.floats(0.2, 0.9), st.integers(1, 3))
def test_frostman_trace_invariants(dset, t_frac, theta, k):
    t = t_frac * dset.d
    delta = 2.0**-k
    try:
        mu, tr = build_joint_frostman(dset, t, 0.5, theta, delta, check_alpha=False)
    except (ResolutionError, DegenerateScaleError):
        assume(False)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-12)
    assert tr.check_caps()
    assert tr.check_monotone_chain()
    ok, totals = tr.check_total_mass_chain()
    assert ok and totals[0] >= totals[-1]
    assert tr.extra["all_fine_cubes_covered"]
    assert tr.cover_sum() == pytest.approx(tr.normalization, rel=1e-10)
    assert np.all(tr.branching_products >= 1)
    assert np.all(mu.weights > 0)
    # the saturated cover is an admissible cover, so it bounds the DP cost from above
    dp = cover_cost_levels(dset, t, tr.coarse_level, tr.fine_level)[0]
    assert tr.normalization >= dp * dset.d ** (-t / 2) * (1 - 1e-10)


def test_trace_report_is_plain():
    mu, tr = build_joint_frostman(gen_pattern_fractal([0, 3], 12, 2), 1.0, 0.9, 0.5, 2.0**-6)
    rep = tr.to_report()
    assert rep["caps_hold"] and rep["monotone_chain_holds"]
    assert rep["ell"] == tr.fine_level - tr.coarse_level


def test_ball_mass_examples():
    mu = uniform_measure(gen_cube(1, 10))
    assert ball_mass(mu, np.array([0.5]), 2.0) == pytest.approx(1.0)
    assert ball_mass(mu, np.array([0.5]), 0.25) == pytest.approx(0.5, abs=2 * 2.0**-10)
    centre = mu.centers()[17]
    assert ball_mass(mu, centre, 0.4 * 2.0**-10) == pytest.approx(mu.weights[17])
    with pytest.raises(DomainError):
        ball_mass(mu, centre, 0.0)


@given(dyadic_sets(max_depth=6, max_points=30), st.data())
def test_ball_mass_matches_brute_force(dset, data):
    w = np.array(data.draw(st.lists(st.floats(0, 1), min_size=dset.n_leaves, max_size=dset.n_leaves)))
    mu = DiscreteMeasure(dset, w)
    x = np.array(data.draw(st.lists(st.floats(0, 1), min_size=dset.d, max_size=dset.d)))
    r = data.draw(st.floats(1e-3, 2.0))
    assert ball_masses(mu, x[None, :], np.array([r]))[0] == pytest.approx(brute_ball(mu, x, r), abs=1e-12)


def test_profile_uniform_interval():
    mu = uniform_measure(gen_cube(1, 12))
    rep = verify_frostman_profile(mu, 2.0**-6, 2.0**-2, (1.0, 1.0))
    assert rep["finite"] and not rep["diverging"]
    assert max(rep["fine"]["c"], rep["coarse"]["c"]) <= 3.0


def test_profile_point_mass_diverges():
    mu = point_mass(gen_point(1, 14))
    rep = verify_frostman_profile(mu, 2.0**-4, 2.0**-2, (0.5, 0.5))
    assert rep["diverging"]


def test_profile_constant_for_interval_scales_like_power():
    # below the set's dimension the constant shrinks like 2 delta**(1 - t): bounded, not flat
    s = gen_cube(1, 16)
    cs = []
    for k in (6, 7, 8):
        mu, _ = build_joint_frostman(s, 0.5, 0.9, 0.5, 2.0**-k)
        cs.append(verify_frostman_profile(mu, 2.0 ** (-2 * k), 2.0**-k, (0.5, 0.9))["coarse"]["c"])
    np.testing.assert_allclose(cs, [2 * 2.0 ** (-k / 2) for k in (6, 7, 8)], rtol=0.01)


def test_profile_constant_stable_at_t_one():
    s = gen_cube(1, 16)
    cs = []
    for k in (6, 7, 8):
        mu, _ = build_joint_frostman(s, 1.0, 0.9, 0.5, 2.0**-k)
        cs.append(verify_frostman_profile(mu, 2.0 ** (-2 * k), 2.0**-k, (1.0, 0.9))["coarse"]["c"])
    # at delta = 2**-8 the coarse regime starts at the leaf side, where a ball
    # meets three cells; that discretization effect is the whole spread
    assert max(cs) <= 2.0 * min(cs)
    assert max(cs) <= 3.0 + 1e-9


def test_measure_file_roundtrip(tmp_path, rng):
    s = gen_pattern_fractal([0, 3], 6, 2)
    mu = DiscreteMeasure(s, rng.random(s.n_leaves))
    path = tmp_path / "mu.txt"
    save_measure(mu, path, ["test"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# test" and lines[1].startswith("2,6,")
    back = load_measure(path)
    assert back.base == s
    np.testing.assert_array_equal(back.weights, mu.weights)


def test_profile_reports_unresolved_fine_regime():
    mu = uniform_measure(gen_cube(1, 8))
    rep = verify_frostman_profile(mu, 2.0**-8, 2.0**-2, (1.0, 1.0))
    assert rep["fine"]["resolved"] is False and math.isnan(rep["fine"]["c"])
    assert rep["coarse"]["resolved"] and rep["finite"]
