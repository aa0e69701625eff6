"""Dyadic grid arithmetic and the sparse occupied-cube tree.

Cubes of level ``n`` are indexed by integer vectors ``k`` with
``0 <= k_i < 2**n`` and stand for ``prod_i [k_i 2^-n, (k_i + 1) 2^-n)``.
Internally a cube is stored as a Morton (bit-interleaved) code, so the
parent of a code is ``code >> d`` and the children of a code are the
contiguous block ``(code << d) + c`` for ``c`` in ``range(2**d)``.  Every
level of a :class:`DyadicSet` is a sorted array of such codes, which makes
parent/child lookups a matter of shifts and ``searchsorted``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, EmptySetError, RangeError

__all__ = [
    "DyadicCube",
    "DyadicSet",
    "BranchingProfile",
    "morton_encode",
    "morton_decode",
    "normalize_points",
    "build_from_points",
    "min_branching",
    "branching_profile",
    "dyadic_dimension",
    "save_leaves",
    "load_leaves",
]

# d * depth must leave room for the sign bit of int64
MAX_CODE_BITS = 62


def _check_bits(d, depth):
    if d < 1:
        raise DomainError(f"ambient dimension must be >= 1, got {d}")
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    if d * depth > MAX_CODE_BITS:
        raise DomainError(
            f"d*depth = {d * depth} exceeds {MAX_CODE_BITS} bits of Morton code"
        )


def morton_encode(index, level):
    """Interleave the bits of integer index vectors.

    Parameters
    ----------
    index : array_like, shape (k, d)
        Integer cube indices, each in ``[0, 2**level)``.
    level : int
        Dyadic level of the cubes.

    Returns
    -------
    np.ndarray of int64, shape (k,)
    """
    index = np.asarray(index, dtype=np.int64)
    if index.ndim == 1:
        index = index[None, :]
    d = index.shape[1]
    _check_bits(d, level)
    code = np.zeros(index.shape[0], dtype=np.int64)
    for b in range(level):
        for i in range(d):
            code |= ((index[:, i] >> b) & 1) << (b * d + i)
    return code


def morton_decode(code, level, d):
    """Inverse of :func:`morton_encode`; returns an ``(k, d)`` int64 array."""
    code = np.asarray(code, dtype=np.int64)
    index = np.zeros((code.shape[0], d), dtype=np.int64)
    for b in range(level):
        for i in range(d):
            index[:, i] |= ((code >> (b * d + i)) & 1) << b
    return index


@dataclass(frozen=True)
class DyadicCube:
    """A half-open cube of the standard dyadic grid inside ``[0, 1)^d``."""

    level: int
    index: tuple

    def __post_init__(self):
        if self.level < 0:
            raise DomainError("level must be nonnegative")
        side = 1 << self.level
        for k in self.index:
            if not 0 <= k < side:
                raise DomainError(f"index {self.index} outside level {self.level}")

    @property
    def ambient_dim(self):
        return len(self.index)

    @property
    def side(self):
        return 2.0 ** -self.level

    @property
    def diameter(self):
        return np.sqrt(self.ambient_dim) * self.side

    @property
    def lower(self):
        return np.asarray(self.index, dtype=float) * self.side

    @property
    def upper(self):
        return self.lower + self.side

    @property
    def center(self):
        return self.lower + 0.5 * self.side

    @property
    def code(self):
        return int(morton_encode([self.index], self.level)[0])

    def parent(self):
        if self.level == 0:
            return None
        return DyadicCube(self.level - 1, tuple(k >> 1 for k in self.index))

    def children(self):
        d = self.ambient_dim
        out = []
        for c in range(1 << d):
            out.append(
                DyadicCube(
                    self.level + 1,
                    tuple(2 * k + ((c >> i) & 1) for i, k in enumerate(self.index)),
                )
            )
        return out

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lower <= x) and np.all(x < self.upper))


def _group_starts(sorted_keys):
    """Start offsets of runs of equal values in a sorted array."""
    if sorted_keys.size == 0:
        return np.zeros(0, dtype=np.int64)
    flag = np.empty(sorted_keys.size, dtype=bool)
    flag[0] = True
    np.not_equal(sorted_keys[1:], sorted_keys[:-1], out=flag[1:])
    return np.flatnonzero(flag)


class DyadicSet:
    """Sparse tree of occupied dyadic cubes down to ``depth``.

    A cube of level ``n < depth`` is occupied iff it contains an occupied
    leaf.  Instances are immutable; build them with
    :meth:`from_leaf_codes`, :func:`build_from_points` or the generators.
    """

    def __init__(self, d, depth, levels, metadata=None):
        _check_bits(d, depth)
        if len(levels) != depth + 1:
            raise DomainError("need one code array per level 0..depth")
        self.d = int(d)
        self.depth = int(depth)
        self._levels = tuple(np.asarray(a, dtype=np.int64) for a in levels)
        for a in self._levels:
            a.setflags(write=False)
        self.metadata = dict(metadata or {})
        self._cache = {}

    @classmethod
    def from_leaf_codes(cls, codes, d, depth, metadata=None, assume_unique=False):
        codes = np.asarray(codes, dtype=np.int64)
        if not assume_unique:
            codes = np.unique(codes)
        levels = [None] * (depth + 1)
        levels[depth] = codes
        for n in range(depth - 1, -1, -1):
            # parents of a sorted unique array are sorted; dedupe runs
            p = levels[n + 1] >> d
            levels[n] = p[_group_starts(p)]
        return cls(d, depth, levels, metadata)

    @classmethod
    def from_leaf_indices(cls, index, d, depth, metadata=None):
        index = np.asarray(index, dtype=np.int64).reshape(-1, d)
        if index.size and (index.min() < 0 or index.max() >= (1 << depth)):
            raise DomainError("leaf index outside the level grid")
        return cls.from_leaf_codes(morton_encode(index, depth), d, depth, metadata)

    @classmethod
    def empty(cls, d, depth):
        return cls(d, depth, [np.zeros(0, dtype=np.int64)] * (depth + 1))

    # basic views -----------------------------------------------------

    @property
    def ambient_dim(self):
        return self.d

    @property
    def max_depth(self):
        return self.depth

    @property
    def is_empty(self):
        return self._levels[0].size == 0

    def codes(self, n):
        """Sorted Morton codes of the occupied cubes of level ``n``."""
        self._check_level(n, allow_depth=True)
        return self._levels[n]

    @property
    def leaves(self):
        return self._levels[self.depth]

    @property
    def n_leaves(self):
        return int(self.leaves.size)

    def counts(self):
        """Number of occupied cubes per level, levels ``0..depth``."""
        return np.array([a.size for a in self._levels], dtype=np.int64)

    def indices(self, n):
        key = ("idx", n)
        if key not in self._cache:
            self._cache[key] = morton_decode(self.codes(n), n, self.d)
        return self._cache[key]

    def lower_corners(self, n):
        return self.indices(n) * 2.0 ** -n

    def centers(self, n=None):
        n = self.depth if n is None else n
        return (self.indices(n) + 0.5) * 2.0 ** -n

    def side(self, n):
        return 2.0 ** -n

    def diameter(self, n):
        return np.sqrt(self.d) * 2.0 ** -n

    def _check_level(self, n, allow_depth=False):
        hi = self.depth if allow_depth else self.depth - 1
        if not 0 <= n <= hi:
            raise RangeError(f"level {n} outside [0, {hi}]")

    # tree navigation ---------------------------------------------------

    def parent_index(self, n):
        """For each cube of level ``n`` (>= 1), position of its parent in level ``n-1``."""
        if not 1 <= n <= self.depth:
            raise RangeError(f"level {n} has no parent level")
        key = ("par", n)
        if key not in self._cache:
            self._cache[key] = np.searchsorted(
                self._levels[n - 1], self._levels[n] >> self.d
            )
        return self._cache[key]

    def child_ranges(self, n):
        """``(start, stop)`` of the children of each level-``n`` cube in level ``n+1``."""
        self._check_level(n)
        key = ("chr", n)
        if key not in self._cache:
            child_parents = self._levels[n + 1] >> self.d
            start = np.searchsorted(child_parents, self._levels[n], side="left")
            stop = np.searchsorted(child_parents, self._levels[n], side="right")
            self._cache[key] = (start, stop)
        return self._cache[key]

    def child_counts(self, n):
        """Number of occupied children of each occupied level-``n`` cube."""
        start, stop = self.child_ranges(n)
        return stop - start

    def ancestor_index(self, n, m):
        """Position in level ``m <= n`` of the ancestor of each level-``n`` cube."""
        if m > n:
            raise RangeError("ancestor level must not exceed the cube level")
        return np.searchsorted(self._levels[m], self._levels[n] >> (self.d * (n - m)))

    def contains_codes(self, n, codes):
        """Boolean mask: which of ``codes`` (level ``n``) are occupied."""
        level = self._levels[n]
        codes = np.asarray(codes, dtype=np.int64)
        if level.size == 0:
            return np.zeros(codes.shape, dtype=bool)
        pos = np.minimum(np.searchsorted(level, codes), level.size - 1)
        return level[pos] == codes

    def truncate(self, depth):
        """The same set seen at a coarser resolution ``depth``."""
        if not 0 <= depth <= self.depth:
            raise RangeError(f"cannot truncate depth {self.depth} set to {depth}")
        return DyadicSet(self.d, depth, self._levels[: depth + 1], self.metadata)

    def leaf_cubes(self):
        return [DyadicCube(self.depth, tuple(int(v) for v in row)) for row in self.indices(self.depth)]

    def __eq__(self, other):
        if not isinstance(other, DyadicSet):
            return NotImplemented
        return (
            self.d == other.d
            and self.depth == other.depth
            and np.array_equal(self.leaves, other.leaves)
        )

    def __hash__(self):
        return hash((self.d, self.depth, self.leaves.tobytes()))

    def __repr__(self):
        return f"DyadicSet(d={self.d}, depth={self.depth}, leaves={self.n_leaves})"

    def check_invariants(self):
        """Raise ``AssertionError`` if the tree invariants are broken."""
        for n, a in enumerate(self._levels):
            assert np.all(np.diff(a) > 0), f"level {n} not strictly sorted"
            if a.size:
                assert a.min() >= 0 and a.max() < (1 << (self.d * n)), f"level {n} out of grid"
        for n in range(1, self.depth + 1):
            parents = self._levels[n] >> self.d
            assert np.all(self.contains_codes(n - 1, parents)), f"orphan at level {n}"
        for n in range(self.depth):
            assert np.all(self.child_counts(n) >= 1), f"childless cube at level {n}"
        assert (self._levels[0].size == 1) == (self.leaves.size > 0)


def normalize_points(points, margin=1e-9):
    """Affinely rescale a point cloud into ``[0, 1)^d``.

    A single uniform scale is used on every axis so distances are only
    multiplied by a constant.  Returns ``(scaled, meta)`` with ``meta``
    holding ``offset`` and ``scale`` such that ``scaled = (x - offset) * scale``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise EmptySetError("no points to normalize")
    lo = pts.min(axis=0)
    extent = float((pts.max(axis=0) - lo).max())
    scale = (1.0 - margin) / extent if extent > 0 else 1.0
    scaled = (pts - lo) * scale
    return scaled, {"offset": lo.tolist(), "scale": scale}


def build_from_points(points, depth, metadata=None):
    """Dyadic hull at resolution ``2**-depth`` of a point cloud in ``[0, 1)^d``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise EmptySetError("cannot build a dyadic set from zero points")
    if depth < 0:
        raise DomainError("depth must be >= 0")
    if not np.all(np.isfinite(pts)) or pts.min() < 0.0 or pts.max() >= 1.0:
        raise DomainError("all coordinates must lie in [0, 1)")
    idx = np.floor(pts * (1 << depth)).astype(np.int64)
    # guard against x*2^N rounding up to 2^N for x just below 1
    np.minimum(idx, (1 << depth) - 1, out=idx)
    return DyadicSet.from_leaf_codes(morton_encode(idx, depth), pts.shape[1], depth, metadata)


def min_branching(dset, n):
    """Fewest occupied children over the occupied cubes of level ``n``."""
    if dset.is_empty:
        raise EmptySetError("min_branching of an empty set")
    if not 0 <= n < dset.depth:
        raise RangeError(f"level {n} outside [0, {dset.depth - 1}]")
    return int(dset.child_counts(n).min())


@dataclass
class BranchingProfile:
    """Per-level minimum child counts and the derived branching exponent."""

    min_children: list
    burn_in: int
    dimension: float = field(default=0.0)

    def __post_init__(self):
        tail = self.min_children[self.burn_in:]
        self.dimension = float(np.log2(min(tail))) if tail else 0.0


def branching_profile(dset, burn_in=2):
    if dset.is_empty:
        raise EmptySetError("branching profile of an empty set")
    counts = [min_branching(dset, n) for n in range(dset.depth)]
    return BranchingProfile(counts, min(burn_in, max(dset.depth - 1, 0)))


def dyadic_dimension(dset, burn_in=2):
    """Worst per-level branching exponent ``min_n log2 N_n`` past ``burn_in``.

    ``N_n`` is the smallest number of occupied children among the occupied
    cubes of level ``n``.  The constant in front of the branching bound is
    taken to be 1, so the value is exactly the minimum over levels
    ``burn_in <= n < depth`` of ``log2 N_n``.
    """
    if dset.is_empty:
        raise EmptySetError("dyadic dimension of an empty set")
    if dset.depth < 2:
        raise RangeError("need depth >= 2 for a dyadic dimension")
    return branching_profile(dset, burn_in).dimension


def save_leaves(dset, path, header_comments=()):
    """Write the leaf-list format: ``d=<d> depth=<N>`` then one index per line."""
    path = Path(path)
    idx = dset.indices(dset.depth)
    with open(path, "w", newline="\n") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(f"d={dset.d} depth={dset.depth}\n")
        for row in idx:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def load_leaves(path):
    """Read a set written by :func:`save_leaves` and rebuild its tree."""
    header = None
    rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                fields = dict(tok.split("=") for tok in line.split())
                header = (int(fields["d"]), int(fields["depth"]))
                continue
            rows.append([int(v) for v in line.split(",")])
    if header is None:
        raise DomainError(f"{path}: missing 'd=<d> depth=<N>' header")
    d, depth = header
    index = np.array(rows, dtype=np.int64).reshape(-1, d)
    return DyadicSet.from_leaf_indices(index, d, depth)
