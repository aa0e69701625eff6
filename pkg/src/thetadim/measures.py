"""Discrete measures on dyadic leaves and the two-regime Frostman construction.

:func:`build_joint_frostman` follows the dyadic mass-distribution
argument: every occupied cube of the fine level ``m`` (the level of
``delta**(1/theta)``) starts with mass ``2**(-m t)``, split below level
``m`` evenly among occupied children.  Walking up to the coarse level
(the first whose cubes have diameter ``<= delta``), any cube carrying more
than ``2**(-level t)`` is scaled down to exactly that cap.  The result is
normalized to a probability measure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic_core import DyadicSet, _group_starts, dyadic_dimension, morton_encode
from .errors import DegenerateScaleError, DomainError, EmptySetError, ResolutionError

__all__ = [
    "DiscreteMeasure",
    "FrostmanTrace",
    "uniform_measure",
    "point_mass",
    "product_measure",
    "frostman_levels",
    "build_joint_frostman",
    "ball_mass",
    "ball_masses",
    "verify_frostman_profile",
    "save_measure",
    "load_measure",
]


class DiscreteMeasure:
    """Nonnegative weights on the occupied leaves of a :class:`DyadicSet`."""

    def __init__(self, base, weights):
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (base.n_leaves,):
            raise DomainError(f"need {base.n_leaves} weights, got shape {weights.shape}")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DomainError("weights must be finite and nonnegative")
        self.base = base
        self.weights = weights
        self.weights.setflags(write=False)
        self._level_mass = {}

    @property
    def total_mass(self):
        return float(math.fsum(self.weights))

    @property
    def depth(self):
        return self.base.depth

    @property
    def d(self):
        return self.base.d

    @property
    def is_zero(self):
        return self.base.is_empty or not np.any(self.weights > 0)

    def centers(self):
        return self.base.centers(self.base.depth)

    def level_mass(self, n):
        """Mass of each occupied cube of level ``n`` (aligned with ``base.codes(n)``)."""
        if n not in self._level_mass:
            if n == self.depth:
                self._level_mass[n] = np.asarray(self.weights)
            else:
                start = self.base.child_ranges(n)[0]
                self._level_mass[n] = np.add.reduceat(self.level_mass(n + 1), start)
        return self._level_mass[n]

    def coarsen(self, level):
        """The same measure with leaves merged into their level-``level`` ancestors."""
        return DiscreteMeasure(self.base.truncate(level), self.level_mass(level))

    def scaled(self, factor):
        return DiscreteMeasure(self.base, self.weights * factor)

    def normalized(self):
        total = self.total_mass
        if total <= 0:
            raise EmptySetError("cannot normalize the zero measure")
        return self.scaled(1.0 / total)

    def restrict(self, mask):
        """Keep only the leaves selected by ``mask`` (support shrinks accordingly)."""
        mask = np.asarray(mask, dtype=bool)
        codes = self.base.leaves[mask]
        base = DyadicSet.from_leaf_codes(codes, self.d, self.depth, self.base.metadata, assume_unique=True)
        return DiscreteMeasure(base, self.weights[mask])

    def __repr__(self):
        return f"DiscreteMeasure(d={self.d}, depth={self.depth}, leaves={self.base.n_leaves}, mass={self.total_mass:.6g})"


def uniform_measure(dset):
    """Equal weights on every occupied leaf, total mass 1."""
    if dset.is_empty:
        raise EmptySetError("uniform measure on an empty set")
    return DiscreteMeasure(dset, np.full(dset.n_leaves, 1.0 / dset.n_leaves))


def point_mass(dset, leaf_position=0):
    w = np.zeros(dset.n_leaves)
    w[leaf_position] = 1.0
    return DiscreteMeasure(dset, w)


def product_measure(mu_a, mu_b):
    """Product of two measures on sets of equal depth, on the product set."""
    if mu_a.depth != mu_b.depth:
        raise DomainError("product measure needs equal depths")
    ia = mu_a.base.indices(mu_a.depth)
    ib = mu_b.base.indices(mu_b.depth)
    idx = np.empty((ia.shape[0] * ib.shape[0], ia.shape[1] + ib.shape[1]), dtype=np.int64)
    idx[:, : ia.shape[1]] = np.repeat(ia, ib.shape[0], axis=0)
    idx[:, ia.shape[1]:] = np.tile(ib, (ia.shape[0], 1))
    w = np.outer(mu_a.weights, mu_b.weights).ravel()
    codes = morton_encode(idx, mu_a.depth)
    order = np.argsort(codes, kind="stable")
    base = DyadicSet.from_leaf_codes(codes[order], idx.shape[1], mu_a.depth, assume_unique=True)
    return DiscreteMeasure(base, w[order])


# ---------------------------------------------------------------------------
# Frostman construction


@dataclass
class FrostmanTrace:
    """Audit record of one :func:`build_joint_frostman` run.

    ``factors[j]`` is the scaling applied to every level-``j`` cube when
    passing from the measure capped down to level ``j+1`` to the one capped
    down to level ``j``; ``1.0`` means the cube was under its cap.
    ``level_masses[j]`` are the final (unnormalized) masses of the occupied
    level-``j`` cubes and ``caps[j] = 2**(-j t)``.
    """

    t: float
    alpha: float
    theta: float
    delta: float
    fine_level: int
    coarse_level: int
    normalization: float
    initial_mass: float
    caps: dict
    factors: dict
    level_masses: dict
    branching_products: np.ndarray
    cover_levels: dict
    d: int
    extra: dict = field(default_factory=dict)

    @property
    def ell(self):
        return self.fine_level - self.coarse_level

    def step_weights(self, k):
        """Level-``m`` masses of the measure capped down to level ``m - k``."""
        w = np.full(self.factors_index[self.fine_level].size, self.initial_mass)
        for j in range(self.fine_level - 1, self.fine_level - k - 1, -1):
            w = w * self.factors[j][self.factors_index[j]]
        return w

    def check_caps(self, rel_tol=1e-12):
        """Every cube of levels ``m-l..m`` is at or under ``2**(-level t)``."""
        return all(
            bool(np.all(self.level_masses[j] <= self.caps[j] * (1 + rel_tol)))
            for j in range(self.coarse_level, self.fine_level + 1)
        )

    def check_monotone_chain(self, rel_tol=1e-12):
        """Each capping step only lowers cube masses (level-``m`` cubes, hence all cubes)."""
        prev = self.step_weights(0)
        for k in range(1, self.ell + 1):
            cur = self.step_weights(k)
            if np.any(cur > prev * (1 + rel_tol)):
                return False
            prev = cur
        return True

    def check_total_mass_chain(self):
        """Total mass never increases from one step to the next."""
        totals = [math.fsum(self.step_weights(k)) for k in range(self.ell + 1)]
        return all(b <= a * (1 + 1e-12) for a, b in zip(totals, totals[1:])), totals

    def cover_sum(self):
        """``sum 2**(-level t)`` over the cubes selected as the saturated cover."""
        return math.fsum(codes.size * self.caps[j] for j, codes in self.cover_levels.items())

    def to_report(self):
        return {
            "t": self.t,
            "alpha": self.alpha,
            "theta": self.theta,
            "delta": self.delta,
            "fine_level": self.fine_level,
            "coarse_level": self.coarse_level,
            "ell": self.ell,
            "normalization": self.normalization,
            "caps_hold": self.check_caps(),
            "monotone_chain_holds": self.check_monotone_chain(),
            "capped_cubes_per_level": {
                str(j): int(np.count_nonzero(f < 1.0)) for j, f in self.factors.items()
            },
            "cover_size_per_level": {str(j): int(c.size) for j, c in self.cover_levels.items()},
            "cover_sum": self.cover_sum(),
            "min_branching_product": float(self.branching_products.min()),
            **self.extra,
        }


def frostman_levels(d, theta, delta):
    """``(m, m - l)``: the level with ``2**(-m-1) < delta**(1/theta) <= 2**-m`` and the
    coarsest level whose cubes have diameter ``<= delta``."""
    fine = delta ** (1.0 / theta)
    m = math.floor(-math.log2(fine) + 1e-12)
    coarse = math.ceil(0.5 * math.log2(d) - math.log2(delta) - 1e-12)
    return m, coarse


def build_joint_frostman(dset, t, alpha, theta, delta, check_alpha=True, burn_in=2):
    """Two-regime Frostman measure on ``dset`` for scale ``delta``.

    Returns ``(measure, trace)``.  The measure is a probability measure on
    the leaves; see :class:`FrostmanTrace` for what is recorded.
    """
    if dset.is_empty:
        raise EmptySetError("Frostman measure on an empty set")
    if not 0 < theta < 1:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not 0 < t <= dset.d:
        raise DomainError(f"t must lie in (0, {dset.d}], got {t}")
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    if check_alpha and dset.depth >= 2:
        dim_q = dyadic_dimension(dset, burn_in)
        if alpha > dim_q + 1e-12:
            raise DomainError(f"alpha={alpha} exceeds the dyadic dimension {dim_q:.4g}")
    m, coarse = frostman_levels(dset.d, theta, delta)
    if m > dset.depth:
        raise ResolutionError(
            f"fine level {m} exceeds set depth {dset.depth}",
            min_delta=2.0 ** (-(dset.depth + 1) * theta),
        )
    coarse = max(coarse, 0)
    if m - coarse < 1:
        raise DegenerateScaleError(
            f"delta={delta:.4g} and delta^(1/theta) share dyadic level (m={m}, coarse={coarse})"
        )

    n_fine = dset.codes(m).size
    initial = 2.0 ** (-m * t)
    w = np.full(n_fine, initial)
    caps = {m: initial}
    factors, anc_index = {}, {m: np.arange(n_fine)}
    for j in range(m - 1, coarse - 1, -1):
        anc = dset.ancestor_index(m, j)
        mass = np.bincount(anc, weights=w, minlength=dset.codes(j).size)
        cap = 2.0 ** (-j * t)
        factor = np.where(mass > cap, cap / np.where(mass > 0, mass, 1.0), 1.0)
        w = w * factor[anc]
        caps[j] = cap
        factors[j] = factor
        anc_index[j] = anc

    level_masses = {
        j: np.bincount(anc_index[j], weights=w, minlength=dset.codes(j).size)
        for j in range(coarse, m + 1)
    }
    normalization = float(math.fsum(w))

    # saturated cover: coarsest cube on each branch that sits exactly at its cap
    covered = np.zeros(n_fine, dtype=bool)
    cover_levels = {}
    for j in range(coarse, m + 1):
        at_cap = np.abs(level_masses[j] - caps[j]) <= 1e-12 * caps[j]
        hit = ~covered & at_cap[anc_index[j]]
        cover_levels[j] = np.unique(dset.codes(j)[anc_index[j][hit]])
        covered |= hit

    # split below level m evenly among occupied children
    leaf_w = w
    phi = np.ones(n_fine)
    for n in range(m, dset.depth):
        counts = dset.child_counts(n)
        parent = dset.parent_index(n + 1)
        leaf_w = (leaf_w / counts)[parent]
        phi = (phi * counts)[parent]
    measure = DiscreteMeasure(dset, leaf_w / normalization)

    trace = FrostmanTrace(
        t=t, alpha=alpha, theta=theta, delta=delta,
        fine_level=m, coarse_level=coarse,
        normalization=normalization, initial_mass=initial,
        caps=caps, factors=factors, level_masses=level_masses,
        branching_products=phi, cover_levels=cover_levels, d=dset.d,
        extra={"all_fine_cubes_covered": bool(covered.all())},
    )
    trace.factors_index = anc_index
    return measure, trace


# ---------------------------------------------------------------------------
# ball masses


def ball_masses(mu, centers, radii, chunk=256):
    """Mass of the leaves whose closed cube meets the open ball ``B(x, r)``.

    ``centers`` has shape ``(q, d)`` and ``radii`` shape ``(q,)``.  The tree
    is descended once per batch: cubes inside the ball contribute their
    whole mass, cubes missing it are dropped, the rest are refined.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (centers.shape[0],))
    out = np.zeros(centers.shape[0])
    if mu.base.is_empty:
        return out
    for lo in range(0, centers.shape[0], chunk):
        hi = min(lo + chunk, centers.shape[0])
        out[lo:hi] = _ball_batch(mu, centers[lo:hi], radii[lo:hi])
    return out


def _ball_batch(mu, x, r):
    base = mu.base
    q = x.shape[0]
    acc = np.zeros(q)
    qid = np.arange(q)
    pos = np.zeros(q, dtype=np.int64)
    for n in range(base.depth + 1):
        if qid.size == 0:
            break
        side = 2.0 ** -n
        lower = base.indices(n)[pos] * side
        xq = x[qid]
        near = np.maximum(np.maximum(lower - xq, xq - lower - side), 0.0)
        far = np.maximum(np.abs(xq - lower), np.abs(xq - lower - side))
        dmin = np.sqrt((near**2).sum(axis=1))
        dmax = np.sqrt((far**2).sum(axis=1))
        rq = r[qid]
        inside = dmax < rq
        meets = dmin < rq
        mass = mu.level_mass(n)[pos]
        whole = inside | (meets & (n == base.depth))
        np.add.at(acc, qid[whole], mass[whole])
        split = meets & ~whole
        if n == base.depth or not split.any():
            break
        start, stop = base.child_ranges(n)
        s0, s1 = start[pos[split]], stop[pos[split]]
        lens = s1 - s0
        qid = np.repeat(qid[split], lens)
        pos = np.repeat(s0 - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
    return acc


def ball_mass(mu, x, r):
    """Mass of the leaves whose cube meets the open ball ``B(x, r)``."""
    if r <= 0:
        raise DomainError("radius must be positive")
    return float(ball_masses(mu, np.asarray(x, dtype=float)[None, :], np.array([r]))[0])


def _sample_centers(mu, sample_count):
    """Deterministic centers: an even stride through the leaves plus the heaviest leaves."""
    base = mu.base
    support = np.flatnonzero(mu.weights > 0)
    if support.size == 0:
        return np.zeros((0, base.d))
    n_stride = max(1, sample_count // 2)
    stride = support[np.linspace(0, support.size - 1, min(n_stride, support.size)).astype(int)]
    heavy = support[np.argsort(-mu.weights[support], kind="stable")[: max(1, sample_count - stride.size)]]
    chosen = np.unique(np.concatenate([stride, heavy]))
    return base.centers(base.depth)[chosen]


def verify_frostman_profile(
    mu,
    split_radius,
    upper_radius,
    exponents,
    sample_count=64,
    n_radii=12,
    min_radius=None,
):
    """Empirical constants of a two-regime ball bound.

    The bound is ``split**(t - a) * r**a`` for ``r < split`` and ``r**t``
    for ``split <= r <= upper``, with ``exponents = (t, a)``.  The two usual
    profiles map as: ``(split, upper) = (delta**(1/theta), delta)`` with
    ``(t, alpha)``, or ``(delta, delta**theta)`` with ``(s, h)``.

    Radii are log-spaced from ``min_radius`` (default: the leaf side) to
    ``upper_radius``; centers are leaf centers chosen deterministically.
    Returns a dict with the maximal ratio ``mu(B)/bound`` per regime, the
    worst ``(x, r)`` and a ``diverging`` flag raised when the fine-regime
    ratio grows like a negative power of ``r`` as ``r`` shrinks.  A regime
    with no radii above the leaf side is reported with ``c = nan`` and
    ``resolved = False``; ``finite`` only looks at resolved regimes.
    """
    t, a = exponents
    r_lo = 2.0 ** -mu.depth if min_radius is None else min_radius
    n_fine = max(2, n_radii // 2)
    radii_fine = np.geomspace(r_lo, split_radius, n_fine, endpoint=False) if r_lo < split_radius else np.zeros(0)
    radii_coarse = np.geomspace(split_radius, upper_radius, max(2, n_radii - n_fine))
    centers = _sample_centers(mu, sample_count)
    report = {"n_centers": int(centers.shape[0]), "split_radius": split_radius,
              "upper_radius": upper_radius, "exponents": [t, a]}
    fine_curve = None
    for name, radii, bound in (
        ("fine", radii_fine, lambda r: split_radius ** (t - a) * r**a),
        ("coarse", radii_coarse, lambda r: r**t),
    ):
        if radii.size == 0 or centers.shape[0] == 0:
            report[name] = {"c": float("nan"), "resolved": False, "worst_center": None, "worst_radius": None}
            continue
        xs = np.repeat(centers, radii.size, axis=0)
        rs = np.tile(radii, centers.shape[0])
        ratio = (ball_masses(mu, xs, rs) / bound(rs)).reshape(centers.shape[0], radii.size)
        k = int(np.argmax(ratio))
        i, j = divmod(k, radii.size)
        report[name] = {
            "c": float(ratio.max()),
            "resolved": True,
            "worst_center": centers[i].tolist(),
            "worst_radius": float(radii[j]),
            "max_ratio_by_radius": ratio.max(axis=0).tolist(),
            "radii": radii.tolist(),
        }
        if name == "fine":
            fine_curve = (radii, ratio.max(axis=0))
    diverging = False
    if fine_curve is not None and fine_curve[0].size >= 2 and a > 0:
        slope = np.polyfit(np.log(fine_curve[0]), np.log(fine_curve[1]), 1)[0]
        report["fine_ratio_slope"] = float(slope)
        diverging = slope < -0.5 * a
    report["diverging"] = bool(diverging)
    report["finite"] = bool(all(np.isfinite(report[n]["c"]) for n in ("fine", "coarse") if report[n]["resolved"]))
    return report


# ---------------------------------------------------------------------------
# serialization


def save_measure(mu, path, header_comments=()):
    """Leaf index and weight per line after a ``d,depth,total_mass`` header."""
    idx = mu.base.indices(mu.depth)
    with open(path, "w", newline="\n") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(f"{mu.d},{mu.depth},{mu.total_mass:.17g}\n")
        for row, w in zip(idx, mu.weights):
            fh.write(",".join(str(int(v)) for v in row) + f",{w:.17g}\n")


def load_measure(path):
    header, rows, weights = None, [], []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if header is None:
                header = (int(parts[0]), int(parts[1]), float(parts[2]))
                continue
            rows.append([int(v) for v in parts[:-1]])
            weights.append(float(parts[-1]))
    d, depth, _ = header
    idx = np.array(rows, dtype=np.int64).reshape(-1, d)
    codes = morton_encode(idx, depth)
    order = np.argsort(codes)
    base = DyadicSet.from_leaf_codes(codes[order], d, depth, assume_unique=True)
    return DiscreteMeasure(base, np.asarray(weights)[order])


def save_trace(trace, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(trace.to_report(), fh, indent=2, sort_keys=True)
        fh.write("\n")
