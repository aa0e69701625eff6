"""Restricted covering sums over dyadic covers and dimension estimates.

For a coarse scale ``delta`` and ``theta`` in (0, 1], admissible covers
use cubes whose diameter lies in ``[delta**(1/theta), C*delta]``.  On a
:class:`~thetadim.dyadic_core.DyadicSet` those are the cubes of levels
``L_coarse..L_fine``, and the cheapest antichain cover is found by a
bottom-up tree recursion::

    cost(Q) = diam(Q)**s                             if level(Q) == L_fine
    cost(Q) = min(diam(Q)**s, sum(cost(children)))   if L_coarse <= level(Q) < L_fine

The total cost is the sum over the occupied cubes of level ``L_coarse``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    EmptySetError,
    NonBracketedError,
    OverLimitError,
    ResolutionError,
)

__all__ = [
    "CoveringQuery",
    "CoveringResult",
    "DimensionEstimate",
    "level_range",
    "cover_cost_levels",
    "optimal_cover_cost",
    "brute_force_cover_cost",
    "dyadic_schedule",
    "default_schedule",
    "dim_estimate",
    "theta_sweep",
    "box_counting_dimension",
]

# slack on floor/ceil of log2 so exact dyadic diameters land on their own level
_LOG_EPS = 1e-9
S_TOL = 1e-3
MAX_BISECT = 40


@dataclass(frozen=True)
class CoveringQuery:
    """Exponent ``s``, intermediate parameter ``theta`` and coarse scale ``delta``.

    ``upper_slack`` multiplies the upper diameter bound (``C * delta``).
    """

    s: float
    theta: float
    delta: float
    upper_slack: float = 1.0

    def __post_init__(self):
        if self.s < 0:
            raise DomainError(f"s must be >= 0, got {self.s}")
        if not 0 < self.theta <= 1:
            raise DomainError(f"theta must lie in (0, 1], got {self.theta}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.upper_slack < 1:
            raise DomainError("upper_slack must be >= 1")

    @property
    def fine_scale(self):
        return self.delta ** (1.0 / self.theta)


@dataclass
class CoveringResult:
    cost: float
    level_range: tuple
    cover_size: int
    clamped: bool = False
    chosen_cover: list | None = None


@dataclass
class DimensionEstimate:
    theta: float
    value: float
    per_scale: list
    aggregation: str
    diagnostics: dict = field(default_factory=dict)


def level_range(d, depth, theta, delta, upper_slack=1.0, clamp=False):
    """Dyadic levels whose cube diameters fall in ``[delta**(1/theta), C*delta]``.

    Returns ``(L_coarse, L_fine, clamped)``.  With ``clamp=True`` a fine
    level below the set resolution is replaced by ``depth`` and flagged;
    otherwise it raises :class:`ResolutionError`.
    """
    if not 0 < theta <= 1:
        raise DomainError(f"theta must lie in (0, 1], got {theta}")
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    half_log_d = 0.5 * math.log2(d)
    l_coarse = max(0, math.ceil(half_log_d - math.log2(upper_slack * delta) - _LOG_EPS))
    l_fine = math.floor(half_log_d - math.log2(delta) / theta + _LOG_EPS)
    clamped = False
    if l_fine > depth:
        if not clamp:
            min_delta = (math.sqrt(d) * 2.0 ** -(depth + 1)) ** theta
            raise ResolutionError(
                f"fine scale delta^(1/theta)={delta ** (1 / theta):.3g} is below the "
                f"depth-{depth} resolution; need delta > {min_delta:.6g}",
                min_delta=min_delta,
            )
        l_fine, clamped = depth, True
    if l_coarse > l_fine:
        raise ResolutionError(
            f"no dyadic level has diameter in [{delta ** (1 / theta):.3g}, "
            f"{upper_slack * delta:.3g}] (levels {l_coarse}>{l_fine})"
        )
    return l_coarse, l_fine, clamped


def cover_cost_levels(dset, s, l_coarse, l_fine, diameter_scale=1.0, return_cover=False):
    """Minimal ``sum diam**s`` over antichain covers with levels in ``[l_coarse, l_fine]``.

    ``diameter_scale`` multiplies every cube diameter (used to check the
    ``lambda**s`` scaling law).  Returns ``(cost, cover_size, cover)`` where
    ``cover`` maps level to chosen codes when ``return_cover`` is true.
    """
    if dset.is_empty:
        raise EmptySetError("covering cost of an empty set")
    if not 0 <= l_coarse <= l_fine <= dset.depth:
        raise ResolutionError(f"level range [{l_coarse}, {l_fine}] not inside [0, {dset.depth}]")
    root_d = math.sqrt(dset.d) * diameter_scale
    cost = np.full(dset.codes(l_fine).size, (root_d * 2.0 ** -l_fine) ** s)
    size = np.ones(cost.size, dtype=np.int64)
    take = {l_fine: None}
    for level in range(l_fine - 1, l_coarse - 1, -1):
        start = dset.child_ranges(level)[0]
        child_cost = np.add.reduceat(cost, start)
        child_size = np.add.reduceat(size, start)
        own = (root_d * 2.0 ** -level) ** s
        mask = own <= child_cost
        cost = np.where(mask, own, child_cost)
        size = np.where(mask, 1, child_size)
        take[level] = mask
    total = float(math.fsum(cost))
    n_cubes = int(size.sum())
    cover = None
    if return_cover:
        cover = {}
        active = np.arange(dset.codes(l_coarse).size)
        for level in range(l_coarse, l_fine + 1):
            mask = take[level]
            chosen = active if mask is None else active[mask[active]]
            cover[level] = dset.codes(level)[chosen]
            if level == l_fine:
                break
            rest = active if mask is None else active[~mask[active]]
            start, stop = dset.child_ranges(level)
            lens = stop[rest] - start[rest]
            active = np.repeat(start[rest] - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
    return total, n_cubes, cover


def optimal_cover_cost(dset, q, clamp=False, with_cover=False, diameter_scale=1.0):
    """Cheapest admissible dyadic cover for the query ``q`` (a :class:`CoveringQuery`)."""
    if dset.is_empty:
        raise EmptySetError("covering cost of an empty set")
    lc, lf, clamped = level_range(dset.d, dset.depth, q.theta, q.delta, q.upper_slack, clamp)
    cost, size, cover = cover_cost_levels(dset, q.s, lc, lf, diameter_scale, with_cover)
    chosen = None
    if cover is not None:
        from .dyadic_core import morton_decode

        chosen = [
            (level, tuple(int(v) for v in row))
            for level, codes in sorted(cover.items())
            for row in morton_decode(codes, level, dset.d)
        ]
    return CoveringResult(cost, (lc, lf), size, clamped, chosen)


def brute_force_cover_cost(dset, q=None, limit=64, levels=None, max_covers=2_000_000):
    """Exhaustive minimum over every antichain cover (oracle for the tree recursion).

    The cost of every cover of every coarse-level subtree is listed
    explicitly (Cartesian sums of the children's lists); the minimum is taken
    only at the end.  Refuses instances with more than ``limit`` cubes in the
    level range, or whose cover lists would exceed ``max_covers`` entries.
    """
    if dset.is_empty:
        raise EmptySetError("covering cost of an empty set")
    if levels is None:
        lc, lf, _ = level_range(dset.d, dset.depth, q.theta, q.delta, q.upper_slack)
    else:
        lc, lf = levels
    s = q.s
    n_in_range = int(sum(dset.codes(n).size for n in range(lc, lf + 1)))
    if n_in_range > limit:
        raise OverLimitError(f"{n_in_range} cubes in range exceeds limit {limit}")
    root_d = math.sqrt(dset.d)

    def covers(level, code):
        own = (root_d * 2.0 ** -level) ** s
        if level == lf:
            return np.array([own])
        kids = dset.codes(level + 1)
        lo = np.searchsorted(kids, code << dset.d)
        hi = np.searchsorted(kids, (code + 1) << dset.d)
        combo = np.zeros(1)
        for child in kids[lo:hi]:
            combo = np.add.outer(combo, covers(level + 1, int(child))).ravel()
            if combo.size > max_covers:
                raise OverLimitError("too many antichain covers to enumerate")
        return np.concatenate([[own], combo])

    return math.fsum(float(covers(lc, int(c)).min()) for c in dset.codes(lc))


# ---------------------------------------------------------------------------
# dimension estimation


def dyadic_schedule(d, k_min, k_max):
    """Coarse scales ``sqrt(d) * 2**-k`` for ``k = k_min..k_max`` (exact cube diameters)."""
    return [math.sqrt(d) * 2.0 ** -k for k in range(k_min, k_max + 1)]


def default_schedule(dset, theta, k_min=4, clamp=False, min_points=2, k_floor=2):
    """Dyadic schedule ``delta_k = sqrt(d) 2**-k`` whose fine scales fit the depth.

    Scales start at ``k_min``; the first few octaves are dropped because
    almost every coarse cube is occupied there.  If fewer than
    ``min_points`` admissible scales remain, ``k_min`` is lowered one octave
    at a time down to ``k_floor``; if that is still not enough a
    :class:`ResolutionError` is raised.  With ``clamp=True`` the schedule
    runs to ``k = depth`` and fine levels beyond the depth are clamped.
    """

    def admissible(k0):
        out = []
        for k in range(k0, dset.depth + 1):
            delta = math.sqrt(dset.d) * 2.0 ** -k
            if delta >= 1:
                continue
            try:
                level_range(dset.d, dset.depth, theta, delta)
            except ResolutionError:
                break
            out.append(delta)
        return out

    if clamp:
        return [x for x in dyadic_schedule(dset.d, k_min, dset.depth) if x < 1]
    k0 = k_min
    out = admissible(k0)
    while len(out) < min_points and k0 > k_floor:
        k0 -= 1
        out = admissible(k0)
    if len(out) < min_points:
        raise ResolutionError(
            f"theta={theta:g} needs fine scales below the depth-{dset.depth} resolution "
            f"(smallest usable theta is about {min_theta(dset.d, dset.depth, k_floor + min_points - 1):.3g})"
        )
    return out


def min_theta(d, depth, k):
    """Smallest ``theta`` for which ``delta = sqrt(d) 2**-k`` keeps its fine level within ``depth``."""
    half = 0.5 * math.log2(d)
    return (k - half) / (depth - half)


def _cost_at(dset, s, ranges):
    return np.array([cover_cost_levels(dset, s, lc, lf)[0] for lc, lf in ranges])


def _bisect(fn, lo, hi, tol=S_TOL, max_iter=MAX_BISECT):
    """Root of a function that is negative at ``lo`` and positive at ``hi``."""
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _crossing(dset, lc, lf, epsilon, s_max):
    """``s`` at which the optimal cover cost equals ``epsilon`` (cost decreases in s)."""
    f = lambda s: epsilon - cover_cost_levels(dset, s, lc, lf)[0]
    if f(0.0) >= 0:
        return 0.0
    if f(s_max) < 0:
        raise NonBracketedError(f"cost stays above epsilon={epsilon} for s <= {s_max}")
    return _bisect(f, 0.0, s_max)


def _regression_root(dset, ranges, log_delta, d):
    """``s`` at which the least-squares slope of log cost against log delta vanishes."""
    x = np.asarray(log_delta)
    w = (x - x.mean()) / ((x - x.mean()) ** 2).sum()

    def slope(s):
        return float(w @ np.log(_cost_at(dset, s, ranges)))

    lo, hi = 0.0, float(d)
    if slope(lo) >= 0:
        return lo, slope
    if slope(hi) <= 0:
        return hi, slope
    return _bisect(slope, lo, hi), slope


def dim_estimate(
    dset,
    theta,
    schedule=None,
    mode="regression",
    epsilon=1.0,
    upper_slack=1.0,
    clamp=False,
    tail=0.5,
    sensitivity=(0.1, 10.0),
):
    """Finite-scale estimate of the theta-intermediate dimension.

    For every coarse scale ``delta_k`` the exponent ``s_k`` at which the
    optimal restricted cover cost crosses ``epsilon`` is found by bisection.
    ``mode`` selects the reported value:

    ``"liminf"`` / ``"limsup"``
        minimum / maximum of ``s_k`` over the finer ``tail`` fraction of the
        schedule (proxies for the lower / upper dimension);
    ``"regression"``
        the exponent at which the least-squares slope of
        ``log cost(delta_k, s)`` against ``log delta_k`` is zero, i.e. the
        ``s`` at which the cost neither grows nor decays across the schedule.
    """
    if mode not in ("liminf", "limsup", "regression"):
        raise DomainError(f"unknown aggregation mode {mode!r}")
    if not 0 < theta <= 1:
        raise DomainError(f"theta must lie in (0, 1], got {theta}")
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    if dset.is_empty:
        raise EmptySetError("dimension of an empty set")
    if schedule is None:
        schedule = default_schedule(dset, theta, clamp=clamp)
        clamp = clamp or any(
            level_range(dset.d, dset.depth, theta, x, upper_slack, True)[2] for x in schedule
        )
    schedule = sorted((float(x) for x in schedule), reverse=True)
    if len(schedule) < 1:
        raise ResolutionError("empty schedule")
    ranges, flags = [], []
    for delta in schedule:
        lc, lf, clamped = level_range(dset.d, dset.depth, theta, delta, upper_slack, clamp)
        ranges.append((lc, lf))
        flags.append(clamped)

    s_max = 2.0 * dset.d
    per_scale = []
    for delta, (lc, lf), clamped in zip(schedule, ranges, flags):
        try:
            s_k = _crossing(dset, lc, lf, epsilon, s_max)
        except NonBracketedError:
            s_k = float("nan")
        cost_k = cover_cost_levels(dset, s_k, lc, lf)[0] if np.isfinite(s_k) else float("nan")
        size_k = cover_cost_levels(dset, s_k, lc, lf)[1] if np.isfinite(s_k) else 0
        per_scale.append(
            {"delta": delta, "s_cross": s_k, "cost_at_cross": cost_k,
             "cover_size": size_k, "levels": (lc, lf), "clamped": clamped}
        )

    crossings = np.array([row["s_cross"] for row in per_scale])
    n_tail = max(1, int(math.ceil(tail * len(crossings))))
    tail_vals = crossings[-n_tail:]
    diagnostics = {"depth": dset.depth, "clamped": any(flags), "epsilon": epsilon,
                   "upper_slack": upper_slack}
    if mode == "regression":
        if len(schedule) < 2:
            raise ResolutionError("regression needs at least two scales")
        value, slope = _regression_root(dset, ranges, [math.log(x) for x in schedule], dset.d)
        logc = np.log(_cost_at(dset, value, ranges))
        x = np.log(schedule)
        fit = np.polyfit(x, logc, 1)
        diagnostics["residuals"] = (logc - np.polyval(fit, x)).tolist()
    else:
        finite = tail_vals[np.isfinite(tail_vals)]
        if finite.size == 0:
            raise NonBracketedError("no finite crossing in the schedule tail")
        value = float(finite.min() if mode == "liminf" else finite.max())
    for eps in sensitivity:
        vals = []
        for lc, lf in ranges[-n_tail:]:
            try:
                vals.append(_crossing(dset, lc, lf, eps, s_max))
            except NonBracketedError:
                vals.append(float("nan"))
        diagnostics[f"tail_crossings_eps_{eps:g}"] = vals
    value = float(min(max(value, 0.0), dset.d))
    return DimensionEstimate(theta, value, per_scale, mode, diagnostics)


def _sweep_one(args):
    dset, theta, schedule, mode, kwargs = args
    return dim_estimate(dset, theta, schedule, mode, **kwargs)


def theta_sweep(dset, thetas, schedule=None, mode="regression", jobs=1, **kwargs):
    """:func:`dim_estimate` over a grid of ``theta``; output sorted by ``theta``."""
    thetas = sorted(float(t) for t in thetas)
    tasks = [(dset, t, schedule, mode, kwargs) for t in thetas]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    return list(zip(thetas, results))


def box_counting_dimension(dset, k_min=2, k_max=None):
    """Plain least-squares box-counting slope of ``log N_k`` against ``k log 2``."""
    if dset.is_empty:
        raise EmptySetError("box dimension of an empty set")
    k_max = dset.depth if k_max is None else k_max
    ks = np.arange(k_min, k_max + 1)
    counts = dset.counts()[ks]
    return float(np.polyfit(ks * math.log(2.0), np.log(counts), 1)[0])
