"""Example sets as :class:`~thetadim.dyadic_core.DyadicSet` objects.

Curves and point sequences are rasterized by descending the tree and
keeping the cubes whose closed cube meets the set (``rule="intersect"``,
the default).  The older ``rule="center"`` keeps a leaf when its center is
within ``sqrt(d) * 2**-depth`` of the set; it thickens curves to about
three cells, which inflates box counts at the finest levels.  Either way
the cost scales with the number of occupied cubes, not ``2**(d*depth)``.
"""

import math

import numpy as np

from .dyadic_core import DyadicSet, morton_encode
from .errors import ConfigError, DomainError

__all__ = [
    "gen_rotated_sequence",
    "gen_sequence_set",
    "gen_pattern_fractal",
    "gen_cube",
    "gen_point",
    "gen_product",
    "rotated_sequence_dimension",
    "default_n_max",
]

N_MAX_CAP = 10**6
_EPS = 1e-12


def rotated_sequence_dimension(p, theta):
    """Closed-form theta-intermediate dimension of the rotated ``1/n**p`` set."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    q = theta * (1.0 - p)
    return 1.0 + q / (2.0 * p + q)


def default_n_max(p, depth):
    return int(min(math.ceil(2.0 ** (depth / p)), N_MAX_CAP))


def _radius_in_band(lo, hi, scale, p, n_max):
    """Does some radius ``scale * k**-p`` (1 <= k <= n_max) fall in ``[lo, hi]``?"""
    hi = np.maximum(hi, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        k_lo = np.where(hi > 0, np.ceil((scale / np.maximum(hi, 1e-300)) ** (1.0 / p) - _EPS), np.inf)
        k_hi = np.where(lo > 0, np.floor((scale / np.maximum(lo, 1e-300)) ** (1.0 / p) + _EPS), np.inf)
    k_lo = np.maximum(k_lo, 1.0)
    k_hi = np.minimum(k_hi, float(n_max))
    return k_lo <= k_hi


def _distance_to_radii(rho, scale, p, n_max):
    """Distance from ``rho`` to the nearest of ``{0} U {scale * k**-p}``."""
    with np.errstate(divide="ignore", over="ignore"):
        kstar = np.where(rho > 0, (scale / np.maximum(rho, 1e-300)) ** (1.0 / p), np.inf)
    best = rho.copy()
    for k in (np.floor(kstar), np.ceil(kstar)):
        k = np.clip(k, 1.0, float(n_max))
        best = np.minimum(best, np.abs(rho - scale * k ** (-p)))
    return best


def _rasterize_radial(d, depth, center, scale, p, n_max, rule="center"):
    """Leaves within ``sqrt(d) 2^-depth`` of ``{x : |x - center| in {0} U {scale k^-p}}``."""
    center = np.asarray(center, dtype=float)
    tol = math.sqrt(d) * 2.0 ** -depth if rule == "center" else 0.0
    # child offsets in Morton digit order: bit i of the digit is the axis-i offset
    offsets = (np.arange(1 << d)[:, None] >> np.arange(d)[None, :]) & 1
    idx = np.zeros((1, d), dtype=np.int64)
    for n in range(1, depth + 1):
        idx = (2 * idx[:, None, :] + offsets[None, :, :]).reshape(-1, d)
        side = 2.0 ** -n
        if n < depth or rule != "center":
            lo = idx * side - center
            hi = lo + side
            near = np.maximum(np.maximum(lo, -hi), 0.0)
            far = np.maximum(np.abs(lo), np.abs(hi))
            rmin = np.sqrt((near**2).sum(axis=1))
            rmax = np.sqrt((far**2).sum(axis=1))
            keep = (rmin <= tol * (1 + _EPS)) | _radius_in_band(rmin - tol, rmax + tol, scale, p, n_max)
        else:
            rho = np.sqrt((((idx + 0.5) * side - center) ** 2).sum(axis=1))
            keep = _distance_to_radii(rho, scale, p, n_max) <= tol
        idx = idx[keep]
    return np.sort(morton_encode(idx, depth))


def gen_rotated_sequence(p, depth, n_max=None, rule="intersect"):
    """Concentric circles of radii ``(1/n**p)/2`` about ``(1/2, 1/2)``, ``n <= n_max``.

    The center point itself is part of the set (it is the limit of the
    radii).  ``n_max`` defaults to ``ceil(2**(depth/p))`` capped at 10**6.
    """
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if n_max is None:
        n_max = default_n_max(p, depth)
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    codes = _rasterize_radial(2, depth, (0.5, 0.5), 0.5, p, n_max, rule)
    meta = {"kind": "rotated_sequence", "p": p, "n_max": int(n_max),
            "center": [0.5, 0.5], "radius_scale": 0.5}
    return DyadicSet.from_leaf_codes(codes, 2, depth, meta, assume_unique=True)


def gen_sequence_set(p, depth, rule="intersect"):
    """The compact set ``{0} U {1/n**p : n >= 1}`` on the line at resolution ``2**-depth``."""
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    codes = _rasterize_radial(1, depth, (0.0,), 1.0, p, float("inf"), rule)
    meta = {"kind": "sequence", "p": p}
    return DyadicSet.from_leaf_codes(codes, 1, depth, meta, assume_unique=True)


def gen_pattern_fractal(pattern, depth, d):
    """Cubes whose child digit at every level lies in ``pattern``.

    Child digit ``c`` of a cube selects the sub-cube whose offset along axis
    ``i`` is bit ``i`` of ``c``; ``{0, 3}`` in the plane is the diagonal.
    """
    digits = np.unique(np.asarray(list(pattern), dtype=np.int64))
    if digits.size == 0:
        raise DomainError("pattern must be non-empty")
    if digits.min() < 0 or digits.max() >= (1 << d):
        raise DomainError(f"pattern digits must lie in [0, {(1 << d) - 1}]")
    codes = np.zeros(1, dtype=np.int64)
    for _ in range(depth):
        codes = ((codes[:, None] << d) | digits[None, :]).ravel()
    meta = {"kind": "pattern", "pattern": digits.tolist()}
    return DyadicSet.from_leaf_codes(np.sort(codes), d, depth, meta, assume_unique=True)


def gen_cube(d, depth):
    """The unit cube ``[0, 1]^d``."""
    out = gen_pattern_fractal(range(1 << d), depth, d)
    out.metadata["kind"] = "cube"
    return out


def gen_point(d, depth):
    """The single point at the origin."""
    out = gen_pattern_fractal([0], depth, d)
    out.metadata["kind"] = "point"
    return out


def gen_product(a, b):
    """Cartesian product of two sets built at the same depth."""
    if a.depth != b.depth:
        raise ConfigError(f"depth mismatch: {a.depth} vs {b.depth}")
    ia = a.indices(a.depth)
    ib = b.indices(b.depth)
    combined = np.empty((ia.shape[0] * ib.shape[0], a.d + b.d), dtype=np.int64)
    combined[:, : a.d] = np.repeat(ia, ib.shape[0], axis=0)
    combined[:, a.d:] = np.tile(ib, (ia.shape[0], 1))
    codes = morton_encode(combined, a.depth)
    meta = {"kind": "product", "factors": [a.metadata, b.metadata]}
    return DyadicSet.from_leaf_codes(codes, a.d + b.d, a.depth, meta)
