import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thetadim.dyadic_core import dyadic_dimension
from thetadim.errors import ConfigError, DomainError
from thetadim.generators import (
    default_n_max,
    gen_cube,
    gen_pattern_fractal,
    gen_point,
    gen_product,
    gen_rotated_sequence,
    gen_sequence_set,
    rotated_sequence_dimension,
)


@pytest.mark.parametrize("theta, expected", [(1.0, 4 / 3), (0.5, 1.2), (0.25, 1.0 + 0.125 / 1.125)])
def test_rotated_sequence_formula(theta, expected):
    assert rotated_sequence_dimension(0.5, theta) == pytest.approx(expected)


def test_rotated_sequence_two_circles():
    s = gen_rotated_sequence(0.5, 4, n_max=2)
    s.check_invariants()
    rho = np.linalg.norm(s.centers(4) - 0.5, axis=1)
    radii = np.array([0.0, 0.5, 0.5 / np.sqrt(2)])
    gap = np.abs(rho[:, None] - radii[None, :]).min(axis=1)
    assert np.all(gap <= 2 * 2.0**-4)
    # both circles are hit, not only the center cell
    assert np.any(np.abs(rho - 0.5) < 0.1) and np.any(np.abs(rho - 0.5 / np.sqrt(2)) < 0.1)


def test_rotated_sequence_leaves_meet_the_set():
    """Every occupied closed leaf contains a point at one of the radii (or the center)."""
    depth = 7
    s = gen_rotated_sequence(0.5, depth)
    side = 2.0**-depth
    lo = s.lower_corners(depth) - 0.5
    hi = lo + side
    rmin = np.linalg.norm(np.maximum(np.maximum(lo, -hi), 0), axis=1)
    rmax = np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)), axis=1)
    n_max = default_n_max(0.5, depth)
    radii = 0.5 * np.arange(1, n_max + 1) ** -0.5
    hit = (rmin == 0) | np.array([np.any((radii >= a) & (radii <= b)) for a, b in zip(rmin, rmax)])
    assert hit.all()


def test_rotated_sequence_dihedral_symmetry():
    depth = 9
    s = gen_rotated_sequence(0.5, depth)
    idx = {tuple(v) for v in s.indices(depth).tolist()}
    top = (1 << depth) - 1
    perimeter = 4 * (1 << depth)
    maps = [
        lambda i, j: (top - i, j), lambda i, j: (i, top - j), lambda i, j: (j, i),
        lambda i, j: (top - j, top - i), lambda i, j: (top - i, top - j),
    ]
    for f in maps:
        image = {f(i, j) for i, j in idx}
        assert len(image ^ idx) <= 4 * perimeter


def test_rotated_sequence_rejects_bad_p():
    with pytest.raises(DomainError):
        gen_rotated_sequence(1.0, 4)


def test_sequence_set_depth_three():
    s = gen_sequence_set(1, 3)
    assert s.indices(3).ravel().tolist() == [0, 1, 2, 3, 4, 7]


def test_sequence_set_contains_every_point():
    depth = 10
    s = gen_sequence_set(1, depth)
    pts = np.concatenate([[0.0], 1.0 / np.arange(2, 5000)])
    cells = np.unique(np.floor(pts * 2**depth).astype(int))
    assert set(cells.tolist()) <= set(s.indices(depth).ravel().tolist())


def test_pattern_fractal_examples():
    point = gen_pattern_fractal([0], 6, 1)
    assert point.n_leaves == 1
    interval = gen_pattern_fractal([0, 1], 6, 1)
    assert interval == gen_cube(1, 6)
    diag = gen_pattern_fractal([0, 3], 10, 2)
    assert diag.n_leaves == 2**10
    idx = diag.indices(10)
    np.testing.assert_array_equal(idx[:, 0], idx[:, 1])
    assert dyadic_dimension(gen_pattern_fractal([0, 3], 12, 2)) == pytest.approx(1.0)


def test_pattern_fractal_rejects_bad_digits():
    with pytest.raises(DomainError):
        gen_pattern_fractal([], 3, 2)
    with pytest.raises(DomainError):
        gen_pattern_fractal([4], 3, 2)


def test_products():
    assert gen_product(gen_point(1, 5), gen_point(1, 5)) == gen_point(2, 5)
    assert gen_product(gen_cube(1, 5), gen_cube(1, 5)) == gen_cube(2, 5)
    assert gen_cube(2, 5).n_leaves == 4**5
    with pytest.raises(ConfigError):
        gen_product(gen_cube(1, 4), gen_cube(1, 5))


@given(st.integers(2, 8), st.sampled_from([[0], [0, 1], [1]]), st.floats(0.3, 2.0))
def test_product_leaf_count(depth, pattern, p):
    a = gen_sequence_set(p, depth)
    b = gen_pattern_fractal(pattern, depth, 1)
    prod = gen_product(a, b)
    prod.check_invariants()
    assert prod.n_leaves == a.n_leaves * b.n_leaves


@pytest.mark.parametrize("make", [
    lambda: gen_rotated_sequence(0.5, 8),
    lambda: gen_sequence_set(0.7, 10),
    lambda: gen_pattern_fractal([0, 1, 2], 6, 2),
    lambda: gen_cube(3, 4),
    lambda: gen_point(3, 4),
])
def test_generators_satisfy_invariants_and_are_deterministic(make):
    a, b = make(), make()
    a.check_invariants()
    assert a == b
