"""Capacity kernels, discrete energies and the covering lower bound.

Energies are double sums over leaf centers.  Pairs farther apart than the
kernel cutoff ``r**theta`` vanish, so the sum is organized over grid
buckets of that size and only neighbouring buckets are visited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError, ZeroEnergyError

__all__ = [
    "KernelSpec",
    "kernel_eval",
    "energy",
    "energy_naive",
    "capacity_lower_bound",
]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel ``phi^s_{r,theta}``, optionally multiplied by ``|x|**-weight_m``.

    The kernel is 1 below ``r``, ``(r/|x|)**s`` on ``[r, r**theta)`` and 0
    beyond.
    """

    r: float
    theta: float
    s: float
    weight_m: int = 0

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise DomainError(f"r must lie in (0, 1), got {self.r}")
        if not 0 < self.theta <= 1:
            raise DomainError(f"theta must lie in (0, 1], got {self.theta}")
        if self.s < 0:
            raise DomainError("s must be nonnegative")
        if self.weight_m < 0 or int(self.weight_m) != self.weight_m:
            raise DomainError("weight_m must be a nonnegative integer")

    @property
    def cutoff(self):
        return self.r**self.theta


def kernel_eval(dist, spec):
    """Piecewise kernel value, vectorized over ``dist``.

    Examples
    --------
    >>> spec = KernelSpec(r=0.1, theta=0.5, s=1.0)
    >>> float(kernel_eval(0.2, spec))
    0.5
    """
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < 0):
        raise DomainError("distances must be nonnegative")
    with np.errstate(divide="ignore"):
        mid = (spec.r / dist) ** spec.s
        val = np.where(dist < spec.r, 1.0, np.where(dist < spec.cutoff, mid, 0.0))
        if spec.weight_m:
            val = np.where(val > 0, val * dist ** (-float(spec.weight_m)), 0.0)
    return val if val.ndim else float(val)


@numba.njit(cache=True)
def _kernel_scalar(dist, r, cutoff, s, m):
    if dist >= cutoff:
        return 0.0
    k = 1.0 if dist < r else (r / dist) ** s
    if m > 0:
        k *= dist ** (-m)
    return k


@numba.njit(cache=True)
def _bucket_energy(idx, w, keys, starts, ends, nbr_offsets, grid, side, floor, r, cutoff, s, m):
    """Ordered double sum over bucket neighbourhoods.

    ``keys`` are the sorted unique bucket keys and ``starts/ends`` the
    matching point ranges (points are sorted by key).  Each row block is
    summed in a fixed order so the result is reproducible.
    """
    n_b, d = keys.shape[0], idx.shape[1]
    total = 0.0
    coord = np.empty(d, dtype=np.int64)
    for b in range(n_b):
        key = keys[b]
        rem = key
        for a in range(d - 1, -1, -1):
            coord[a] = rem % grid
            rem //= grid
        block = 0.0
        for o in range(nbr_offsets.shape[0]):
            nkey = 0
            ok = True
            for a in range(d):
                c = coord[a] + nbr_offsets[o, a]
                if c < 0 or c >= grid:
                    ok = False
                    break
                nkey = nkey * grid + c
            if not ok:
                continue
            j = np.searchsorted(keys, nkey)
            if j >= n_b or keys[j] != nkey:
                continue
            for p in range(starts[b], ends[b]):
                for q in range(starts[j], ends[j]):
                    d2 = 0.0
                    for a in range(d):
                        diff = float(idx[p, a] - idx[q, a])
                        d2 += diff * diff
                    dist = math.sqrt(d2) * side
                    if dist < floor:
                        dist = floor
                    block += w[p] * w[q] * _kernel_scalar(dist, r, cutoff, s, m)
        total += block
    return total


def energy(mu, spec):
    """``sum_i sum_j w_i w_j k(|c_i - c_j|)`` over leaf centers ``c``.

    Distances are floored at half the leaf side, so the diagonal terms are
    finite for weighted kernels.  Pairs farther than ``r**theta`` are never
    visited.
    """
    base = mu.base
    keep = mu.weights > 0
    if not keep.any():
        return 0.0
    idx = base.indices(base.depth)[keep].astype(np.int64)
    w = np.ascontiguousarray(mu.weights[keep], dtype=float)
    side = 2.0 ** -base.depth
    floor = side / 2.0
    # bucket edge in cells, at least the cutoff so neighbours suffice
    cells = max(1, int(math.ceil(spec.cutoff / side)))
    grid = max(1, int(math.ceil(2**base.depth / cells)))
    if grid ** base.d >= 2**62:
        raise DomainError("bucket grid too large for this depth")
    bcoord = idx // cells
    keys = np.zeros(idx.shape[0], dtype=np.int64)
    for a in range(base.d):
        keys = keys * grid + bcoord[:, a]
    order = np.argsort(keys, kind="stable")
    keys, idx, w = keys[order], np.ascontiguousarray(idx[order]), w[order]
    ukeys, starts = np.unique(keys, return_index=True)
    ends = np.append(starts[1:], keys.size)
    nbr = np.array(np.meshgrid(*[[-1, 0, 1]] * base.d, indexing="ij")).reshape(base.d, -1).T.copy()
    return float(
        _bucket_energy(
            idx, w, ukeys, starts.astype(np.int64), ends.astype(np.int64), nbr.astype(np.int64),
            grid, side, floor, spec.r, spec.cutoff, float(spec.s), float(spec.weight_m),
        )
    )


def energy_naive(mu, spec):
    """Reference ``O(N^2)`` double sum with no pruning (use on small measures)."""
    c = mu.base.centers(mu.depth)
    diff = c[:, None, :] - c[None, :, :]
    dist = np.maximum(np.sqrt((diff**2).sum(axis=-1)), 2.0 ** -mu.depth / 2)
    k = kernel_eval(dist, spec)
    return float(mu.weights @ k @ mu.weights)


def capacity_lower_bound(mu, spec):
    """``r**s / energy``: a lower bound for restricted covering sums of the support."""
    if spec.weight_m:
        raise DomainError("capacity bound uses the plain kernel (weight_m = 0)")
    if abs(mu.total_mass - 1.0) > 1e-9:
        raise DomainError(f"need a probability measure, total mass is {mu.total_mass}")
    e = energy(mu, spec)
    if e <= 0:
        raise ZeroEnergyError("energy vanished")
    return spec.r**spec.s / e
