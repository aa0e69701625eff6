"""Affine planes, slices of dyadic sets and tube restrictions of measures.

Only codimension one is supported (lines in the plane, planes in space):
then ``W^perp`` is spanned by one unit normal ``u`` and a cube meets
``W + a`` exactly when the scalar offset ``<a, u>`` lies in the interval
``<Q, u>``, which is computed from two opposite vertices.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .covering import dim_estimate
from .dyadic_core import DyadicSet
from .errors import DomainError, EmptySetError
from .measures import DiscreteMeasure

__all__ = [
    "AffinePlane",
    "SliceReport",
    "sample_plane",
    "line_plane",
    "axis_plane",
    "generic_offsets",
    "slice_set",
    "tube_measure",
    "slice_scan",
    "tube_mass_profile",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AffinePlane:
    """``W + a`` with ``W`` spanned by the orthonormal rows of ``frame``."""

    frame: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        frame = np.atleast_2d(np.asarray(self.frame, dtype=float))
        offset = np.asarray(self.offset, dtype=float).reshape(-1)
        if offset.size != frame.shape[1]:
            raise DomainError("offset and frame live in different dimensions")
        if not np.allclose(frame @ frame.T, np.eye(frame.shape[0]), atol=1e-10):
            raise DomainError("frame must be orthonormal")
        if np.any(np.abs(frame @ offset) > 1e-10):
            raise DomainError("offset must be orthogonal to the frame")
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "offset", offset)

    @property
    def d(self):
        return self.frame.shape[1]

    @property
    def k(self):
        return self.frame.shape[0]

    @property
    def m(self):
        return self.d - self.k

    def complement(self):
        """Orthonormal basis of ``W^perp`` (rows), with a deterministic sign."""
        _, _, vt = np.linalg.svd(self.frame)
        basis = vt[self.k:]
        for i in range(basis.shape[0]):
            j = int(np.argmax(np.abs(basis[i])))
            if basis[i, j] < 0:
                basis[i] = -basis[i]
        return basis

    @property
    def normal(self):
        if self.m != 1:
            raise NotImplementedError("a single normal exists only in codimension one")
        return self.complement()[0]

    @property
    def scalar_offset(self):
        return float(self.offset @ self.normal)

    def with_offset(self, c):
        """Same direction, shifted so that ``<x, u> = c`` on the plane."""
        return AffinePlane(self.frame, c * self.normal)

    def describe(self):
        """``angle=<deg>`` for lines in the plane, else the normal components."""
        if self.d == 2:
            u = self.frame[0]
            ang = math.degrees(math.atan2(u[1], u[0])) % 180.0
            return f"angle={ang:.12g}"
        return "normal=" + ";".join(f"{v:.12g}" for v in self.normal)


def sample_plane(d, m, seed=0):
    """Rotation-invariant random ``W`` of dimension ``d - m`` through the origin."""
    if not 1 <= m <= d - 1:
        raise DomainError(f"need 1 <= m <= d-1, got d={d}, m={m}")
    rng = np.random.default_rng(seed)
    while True:
        g = rng.standard_normal((d - m, d))
        if np.linalg.svd(g, compute_uv=False).min() > 1e-8:
            break
    q, r = np.linalg.qr(g.T)
    q = q * np.sign(np.diag(r))
    return AffinePlane(q.T, np.zeros(d))


def line_plane(angle, c=0.0):
    """Line in the unit square with direction angle ``angle`` (radians)."""
    direction = np.array([math.cos(angle), math.sin(angle)])
    return AffinePlane(direction[None, :], np.zeros(2)).with_offset(c)


def axis_plane(d, normal_axis, c=0.0):
    """Coordinate hyperplane ``x[normal_axis] = c``."""
    frame = np.delete(np.eye(d), normal_axis, axis=0)
    return AffinePlane(frame, np.zeros(d)).with_offset(c)


def _projection_interval(plane):
    u = plane.normal
    return float(np.minimum(u, 0).sum()), float(np.maximum(u, 0).sum())


def generic_offsets(plane, n, margin=2.0**-4):
    """``n`` sorted offsets spread over the projection of the unit cube.

    The points ``frac(sqrt(2)/2 + j * golden)`` are irrational, so the lines
    avoid dyadic cube faces; a ``margin`` is trimmed from both ends.
    """
    lo, hi = _projection_interval(plane)
    lo, hi = lo + margin, hi - margin
    frac = np.mod(math.sqrt(2.0) / 2.0 + np.arange(n) * GOLDEN, 1.0)
    return np.sort(lo + (hi - lo) * frac)


def _cube_interval(lower, side, u):
    base = lower @ u
    return base + side * np.minimum(u, 0).sum(), base + side * np.maximum(u, 0).sum()


def slice_set(dset, plane, level=None):
    """Occupied level-``level`` cubes of ``dset`` whose closed cube meets the plane."""
    if plane.m != 1 or dset.d not in (2, 3):
        raise NotImplementedError("slicing supports d in {2, 3} with codimension one")
    if plane.d != dset.d:
        raise DomainError("plane and set live in different dimensions")
    level = dset.depth if level is None else level
    if not 0 <= level <= dset.depth:
        raise DomainError(f"level {level} outside [0, {dset.depth}]")
    if dset.is_empty:
        return DyadicSet.empty(dset.d, level)
    u, c = plane.normal, plane.scalar_offset
    pos = np.zeros(1, dtype=np.int64)
    for n in range(level + 1):
        side = 2.0 ** -n
        lo, hi = _cube_interval(dset.indices(n)[pos] * side, side, u)
        pos = pos[(lo <= c) & (c <= hi)]
        if n == level or pos.size == 0:
            break
        start, stop = dset.child_ranges(n)
        lens = stop[pos] - start[pos]
        pos = np.repeat(start[pos] - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
    if pos.size == 0:
        return DyadicSet.empty(dset.d, level)
    return DyadicSet.from_leaf_codes(dset.codes(level)[pos], dset.d, level, assume_unique=True)


def _leaf_distance(mu, plane):
    side = 2.0 ** -mu.depth
    lo, hi = _cube_interval(mu.base.lower_corners(mu.depth), side, plane.normal)
    c = plane.scalar_offset
    return lo, hi, np.maximum(np.maximum(lo - c, c - hi), 0.0)


def tube_measure(mu, plane, width):
    """``(2 width)**-m`` times ``mu`` restricted to leaves within ``width`` of the plane.

    Returns ``(measure, empty)``; an empty tube gives the zero measure.
    """
    if width <= 0:
        raise DomainError("width must be positive")
    if plane.m != 1:
        raise NotImplementedError("tubes are implemented in codimension one")
    if mu.base.is_empty:
        return mu, True
    _, _, dist = _leaf_distance(mu, plane)
    mask = dist <= width
    if not mask.any():
        return DiscreteMeasure(DyadicSet.empty(mu.d, mu.depth), np.zeros(0)), True
    return mu.restrict(mask).scaled((2.0 * width) ** -plane.m), False


def tube_mass_profile(mu, plane, a, radii):
    """Masses of ``P^{-1}(B(a, r))`` for each radius, with ``mass / (2r)**m``.

    ``plane`` supplies the direction ``W``; ``a`` is the scalar coordinate
    along the normal.  Returns a list of ``(r, mass, ratio)``.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise DomainError("radii must be positive")
    if plane.m != 1:
        raise NotImplementedError("tubes are implemented in codimension one")
    lo, hi, _ = _leaf_distance(mu, plane.with_offset(a))
    out = []
    for r in radii:
        mass = float(math.fsum(mu.weights[(hi > a - r) & (lo < a + r)]))
        out.append((float(r), mass, mass / (2.0 * r)))
    return out


@dataclass
class SliceReport:
    """Per-offset slice estimates against the bound ``ambient - m``."""

    theta: float
    plane: AffinePlane
    offsets: np.ndarray
    slice_dims: np.ndarray
    ambient_dim: float
    bound: float
    tolerance: float
    empty: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def violations(self):
        return np.where(self.empty, False, self.slice_dims > self.bound + self.tolerance)

    @property
    def violation_count(self):
        return int(self.violations.sum())

    @property
    def violation_fraction(self):
        return self.violation_count / max(1, len(self.offsets))

    def rows(self, set_id):
        ang = self.plane.describe()
        for c, s, v, e in zip(self.offsets, self.slice_dims, self.violations, self.empty):
            yield {
                "set_id": set_id,
                "theta": self.theta,
                "frame_angle_or_axes": ang,
                "offset": float(c),
                "slice_dim": float("nan") if e else float(s),
                "ambient_dim": self.ambient_dim,
                "bound": self.bound,
                "violation": int(v),
            }


def _slice_task(args):
    dset, plane, c, theta, schedule, mode = args
    sl = slice_set(dset, plane.with_offset(c))
    if sl.is_empty:
        return float("nan"), True
    return dim_estimate(sl, theta, schedule=schedule, mode=mode).value, False


def slice_scan(
    dset, theta, plane, offsets, schedule=None, tolerance=0.15, mode="regression",
    ambient=None, jobs=1,
):
    """Estimate the dimension of every slice ``dset ∩ (W + c u)``.

    Empty slices are reported with ``nan`` and never count as violations.
    """
    if dset.is_empty:
        raise EmptySetError("slice scan of an empty set")
    offsets = np.asarray(offsets, dtype=float)
    if ambient is None:
        ambient = dim_estimate(dset, theta, schedule=schedule, mode=mode).value
    tasks = [(dset, plane, float(c), theta, schedule, mode) for c in offsets]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_slice_task, tasks))
    else:
        results = [_slice_task(t) for t in tasks]
    dims = np.array([r[0] for r in results])
    empty = np.array([r[1] for r in results], dtype=bool)
    return SliceReport(
        theta=theta, plane=plane, offsets=offsets, slice_dims=dims,
        ambient_dim=float(ambient), bound=float(ambient) - plane.m,
        tolerance=tolerance, empty=empty,
        diagnostics={"n_empty": int(empty.sum()), "mode": mode},
    )
