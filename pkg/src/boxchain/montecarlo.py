"""Sampling-based occupancy estimation and statistical verification.

Estimators simulate trials in fixed-size vectorized chunks, each chunk on
its own labeled substream, so results are reproducible and independent of
how chunks are scheduled across workers.  All sites of one check are
counted from the same trial paths (common random numbers), which shrinks
the variance of the differences the checks look at; the confidence
intervals used as margins are therefore conservative.

Each check can also run against a deliberately corrupted variant of the
dynamics (fault injection), which the faithful checks must detect.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .boxes import Box, unit_box
from .coupling import (
    PairClass,
    classify_pair,
    coupled_step,
    dominates_nonnegative,
    initial_coupled_state,
    reflect_origin,
    reflection_coupled_step,
)
from .intervals import (
    ContractionRule,
    EndpointResampleContraction,
    Interval,
    KillThenUniformContraction,
    SizeWeightedContraction,
    Span,
    UNIFORM,
    UniformContraction,
    size_pmf_weights,
    validate_expansion_param,
)
from .stream import Stream

__all__ = [
    "OccupancyEstimate",
    "CheckReport",
    "CoalescenceSummary",
    "MUTANTS",
    "wilson_interval",
    "hoeffding_interval",
    "estimate_occupancy",
    "estimate_occupancy_2d",
    "check_even",
    "check_monotone_1d",
    "check_monotone_l1",
    "coupling_marginal_test",
    "coupling_invariant_check",
    "reflection_identity_check",
    "coalescence_stats",
]

_CHUNK = 8192

# Deliberate fault injections used to confirm the checks have teeth.
MUTANTS = ("skip-antithetic-map", "unmirrored-reflection", "one-sided-expansion")


# ---------------------------------------------------------------------------
# confidence intervals


def wilson_interval(hits: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Wilson score interval; well behaved for extreme proportions."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    phat = hits / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (phat + z2n / 2.0) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2n / (4.0 * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def hoeffding_interval(hits: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Distribution-free interval from Hoeffding's inequality (conservative)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    alpha = 1.0 - confidence
    half = math.sqrt(math.log(2.0 / alpha) / (2.0 * trials))
    phat = hits / trials
    return max(0.0, phat - half), min(1.0, phat + half)


_CI_METHODS: dict[str, Callable[[int, int, float], tuple[float, float]]] = {
    "wilson": wilson_interval,
    "hoeffding": hoeffding_interval,
}


@dataclass(frozen=True)
class OccupancyEstimate:
    """Per-site estimate with a confidence interval at the stated level."""

    site: object
    trials: int
    hits: int
    estimate: float
    ci_lo: float
    ci_hi: float

    @property
    def half_width(self) -> float:
        return (self.ci_hi - self.ci_lo) / 2.0


@dataclass
class CheckReport:
    """Outcome of one statistical check; deterministic given seed and params."""

    claim: str
    passed: bool
    worst_margin: float
    params: dict = field(default_factory=dict)

    def as_row(self) -> tuple[str, str, str, str]:
        params = ";".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return self.claim, params, repr(self.worst_margin), "pass" if self.passed else "fail"


# ---------------------------------------------------------------------------
# vectorized chunk simulation, one dimension


def _unrank_offsets_vec(n: np.ndarray, i0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized decode of ranks into (left, right) offsets within hosts."""
    a_top = 2 * n + 1
    disc = a_top * a_top - 8 * i0
    s = np.floor(np.sqrt(disc.astype(np.float64))).astype(np.int64)
    s = np.where((s + 1) * (s + 1) <= disc, s + 1, s)
    s = np.where(s * s > disc, s - 1, s)
    a = np.clip((a_top - s) // 2, 0, n - 1)
    cum = a * n - a * (a - 1) // 2
    over = cum > i0
    a = np.where(over, a - 1, a)
    cum = a * n - a * (a - 1) // 2
    nxt = (a + 1) * n - (a + 1) * a // 2
    under = (nxt <= i0) & (a + 1 <= n - 1)
    a = np.where(under, a + 1, a)
    cum = a * n - a * (a - 1) // 2
    return a, a + (i0 - cum)


def _contract_chunk(
    left: np.ndarray,
    right: np.ndarray,
    alive: np.ndarray,
    rule: ContractionRule,
    stream: Stream,
) -> None:
    live = np.nonzero(alive)[0]
    if live.size == 0:
        return
    base = left[live]
    n = right[live] - base + 1
    if isinstance(rule, UniformContraction):
        total = n * (n + 1) // 2
        draw = stream.integers_upto(total)
        dead = draw == 0
        alive[live[dead]] = False
        keep = ~dead
        if keep.any():
            a, b = _unrank_offsets_vec(n[keep], draw[keep] - 1)
            kept = live[keep]
            left[kept] = base[keep] + a
            right[kept] = base[keep] + b
    elif isinstance(rule, KillThenUniformContraction):
        death = np.empty(live.size)
        for nv in np.unique(n):
            prob = rule.death_probability(rule.expansion_p, int(nv))
            if not 0 <= prob <= 1:
                raise ValueError(f"death probability {prob} outside [0, 1]")
            death[n == nv] = prob
        dead = stream.random_array(live.size) < death
        alive[live[dead]] = False
        keep = ~dead
        if keep.any():
            total = n[keep] * (n[keep] + 1) // 2
            draw = stream.integers_upto(total - 1) + 1
            a, b = _unrank_offsets_vec(n[keep], draw - 1)
            kept = live[keep]
            left[kept] = base[keep] + a
            right[kept] = base[keep] + b
    elif isinstance(rule, SizeWeightedContraction):
        u = stream.random_array(live.size)
        size = np.empty(live.size, np.int64)
        for nv in np.unique(n):
            mask = n == nv
            cum = np.cumsum(size_pmf_weights(rule.size_pmf, int(nv)))
            size[mask] = np.searchsorted(cum, u[mask], side="right")
        size = np.minimum(size, n)
        dead = size == 0
        alive[live[dead]] = False
        keep = ~dead
        if keep.any():
            pos = stream.integers_upto(n[keep] - size[keep])
            kept = live[keep]
            left[kept] = base[keep] + pos
            right[kept] = base[keep] + pos + size[keep] - 1
    elif isinstance(rule, EndpointResampleContraction):
        u = stream.integers_upto(n - 1)
        v = stream.integers_upto(n - 1)
        left[live] = base + np.minimum(u, v)
        right[live] = base + np.maximum(u, v)
    else:
        raise TypeError(f"unknown contraction rule {rule!r}")


def _expand_chunk(
    left: np.ndarray,
    right: np.ndarray,
    alive: np.ndarray,
    p: float,
    stream: Stream,
    one_sided: bool,
) -> None:
    live = np.nonzero(alive)[0]
    if live.size == 0:
        return
    if not one_sided:
        left[live] -= stream.geometric_array(p, live.size)
    right[live] += stream.geometric_array(p, live.size)


def _interval_chunk_counts(
    stream: Stream,
    count: int,
    initial: Span,
    t: int,
    rule: ContractionRule,
    p: float,
    sites: Sequence[int],
    one_sided: bool,
    by_time: bool,
) -> np.ndarray:
    """Hit counts per site, at the final time or at every time 1..t."""
    left = np.full(count, initial.left, np.int64)
    right = np.full(count, initial.right, np.int64)
    alive = np.ones(count, bool)
    rows = t if by_time else 1
    counts = np.zeros((max(rows, 1), len(sites)), np.int64)

    def record(row: int) -> None:
        for j, x in enumerate(sites):
            counts[row, j] = np.count_nonzero(alive & (left <= x) & (x <= right))

    if t == 0:
        record(0)
        return counts
    for step_index in range(t):
        _contract_chunk(left, right, alive, rule, stream)
        _expand_chunk(left, right, alive, p, stream, one_sided)
        if by_time:
            record(step_index)
    if not by_time:
        record(0)
    return counts


def _run_chunks(trials: int, worker: Callable[[int, int], np.ndarray], jobs: int) -> np.ndarray:
    layout = [
        (i, min(_CHUNK, trials - i * _CHUNK)) for i in range((trials + _CHUNK - 1) // _CHUNK)
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda ic: worker(*ic), layout))
    else:
        parts = [worker(i, c) for i, c in layout]
    out = parts[0]
    for part in parts[1:]:
        out = out + part
    return out


def estimate_occupancy(
    initial: Span,
    t: int,
    sites: Sequence[int],
    trials: int,
    *,
    rule: ContractionRule = UNIFORM,
    p: float = 0.5,
    seed: int = 0,
    confidence: float = 0.99,
    method: str = "wilson",
    jobs: int = 1,
    one_sided_expansion: bool = False,
) -> list[OccupancyEstimate]:
    """Estimate the occupancy probability of each site at time ``t``.

    All sites are counted from the same simulated paths.  Identical seeds
    give identical estimates regardless of ``jobs``.
    """
    validate_expansion_param(p)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    ci = _CI_METHODS[method]
    sites = [int(x) for x in sites]
    root = Stream(seed)

    def worker(index: int, count: int) -> np.ndarray:
        return _interval_chunk_counts(
            root.substream("mc-interval", index),
            count,
            initial,
            t,
            rule,
            p,
            sites,
            one_sided_expansion,
            False,
        )

    counts = _run_chunks(trials, worker, jobs)[0]
    out = []
    for x, hits in zip(sites, counts.tolist()):
        lo, hi = ci(hits, trials, confidence)
        out.append(OccupancyEstimate(x, trials, hits, hits / trials, lo, hi))
    return out


# ---------------------------------------------------------------------------
# vectorized chunk simulation, two dimensions


def _box_chunk_counts(
    stream: Stream,
    count: int,
    initial: Box,
    t: int,
    p: float,
    points: Sequence[tuple[int, int]],
) -> np.ndarray:
    (span0, span1) = initial.spans
    l0 = np.full(count, span0.left, np.int64)
    r0 = np.full(count, span0.right, np.int64)
    l1 = np.full(count, span1.left, np.int64)
    r1 = np.full(count, span1.right, np.int64)
    alive = np.ones(count, bool)
    for _ in range(t):
        live = np.nonzero(alive)[0]
        if live.size == 0:
            break
        n0 = r0[live] - l0[live] + 1
        n1 = r1[live] - l1[live] + 1
        k0 = n0 * (n0 + 1) // 2
        k1 = n1 * (n1 + 1) // 2
        draw = stream.integers_upto(k0 * k1)
        dead = draw == 0
        alive[live[dead]] = False
        keep = ~dead
        if keep.any():
            kept = live[keep]
            digit0, digit1 = np.divmod(draw[keep] - 1, k1[keep])
            a0, b0 = _unrank_offsets_vec(n0[keep], digit0)
            a1, b1 = _unrank_offsets_vec(n1[keep], digit1)
            base0 = l0[kept]
            base1 = l1[kept]
            l0[kept] = base0 + a0
            r0[kept] = base0 + b0
            l1[kept] = base1 + a1
            r1[kept] = base1 + b1
        live = np.nonzero(alive)[0]
        if live.size == 0:
            break
        l0[live] -= stream.geometric_array(p, live.size)
        r0[live] += stream.geometric_array(p, live.size)
        l1[live] -= stream.geometric_array(p, live.size)
        r1[live] += stream.geometric_array(p, live.size)
    counts = np.zeros(len(points), np.int64)
    for j, (x, y) in enumerate(points):
        counts[j] = np.count_nonzero(alive & (l0 <= x) & (x <= r0) & (l1 <= y) & (y <= r1))
    return counts


def estimate_occupancy_2d(
    initial: Box,
    t: int,
    points: Sequence[tuple[int, int]],
    trials: int,
    *,
    p: float = 0.5,
    seed: int = 0,
    confidence: float = 0.99,
    method: str = "wilson",
    jobs: int = 1,
) -> list[OccupancyEstimate]:
    """Occupancy estimates over a set of lattice points of the planar process."""
    validate_expansion_param(p)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if initial.dim != 2:
        raise ValueError("estimate_occupancy_2d needs a two-dimensional box")
    ci = _CI_METHODS[method]
    points = [(int(x), int(y)) for x, y in points]
    root = Stream(seed)

    def worker(index: int, count: int) -> np.ndarray:
        return _box_chunk_counts(root.substream("mc-box", index), count, initial, t, p, points)

    counts = _run_chunks(trials, worker, jobs)
    out = []
    for point, hits in zip(points, counts.tolist()):
        lo, hi = ci(hits, trials, confidence)
        out.append(OccupancyEstimate(point, trials, hits, hits / trials, lo, hi))
    return out


# ---------------------------------------------------------------------------
# statistical checks of the occupancy function


def _pair_gap(a: OccupancyEstimate, b: OccupancyEstimate) -> float:
    """How far the two estimates are beyond their combined CI half-widths."""
    return abs(a.estimate - b.estimate) - (a.half_width + b.half_width)


def check_even(
    t: int,
    p: float,
    x_range: int,
    trials: int,
    seed: int = 0,
    *,
    confidence: float = 0.99,
    jobs: int = 1,
    one_sided_expansion: bool = False,
) -> CheckReport:
    """Occupancy symmetry: estimates at x and -x must agree within CIs."""
    sites = list(range(-x_range, x_range + 1))
    comparisons = max(x_range, 1)
    per_site = 1.0 - (1.0 - confidence) / (2.0 * comparisons)
    estimates = {
        e.site: e
        for e in estimate_occupancy(
            Span(0, 0),
            t,
            sites,
            trials,
            p=p,
            seed=seed,
            confidence=per_site,
            jobs=jobs,
            one_sided_expansion=one_sided_expansion,
        )
    }
    worst = -math.inf
    for x in range(1, x_range + 1):
        worst = max(worst, _pair_gap(estimates[x], estimates[-x]))
    return CheckReport(
        claim="occupancy-even-1d",
        passed=worst <= 0,
        worst_margin=worst,
        params={"t": t, "p": p, "x_range": x_range, "trials": trials, "seed": seed},
    )


def check_monotone_1d(
    t: int,
    p: float,
    x_max: int,
    trials: int,
    seed: int = 0,
    *,
    confidence: float = 0.99,
    jobs: int = 1,
    one_sided_expansion: bool = False,
) -> CheckReport:
    """Occupancy decrease away from the origin on the right half line."""
    sites = list(range(0, x_max + 1))
    comparisons = max(x_max, 1)
    per_site = 1.0 - (1.0 - confidence) / (2.0 * comparisons)
    estimates = {
        e.site: e
        for e in estimate_occupancy(
            Span(0, 0),
            t,
            sites,
            trials,
            p=p,
            seed=seed,
            confidence=per_site,
            jobs=jobs,
            one_sided_expansion=one_sided_expansion,
        )
    }
    worst = -math.inf
    for x in range(x_max):
        near, far = estimates[x], estimates[x + 1]
        gap = far.estimate - near.estimate - (near.half_width + far.half_width)
        worst = max(worst, gap)
    return CheckReport(
        claim="occupancy-monotone-1d",
        passed=worst <= 0,
        worst_margin=worst,
        params={"t": t, "p": p, "x_max": x_max, "trials": trials, "seed": seed},
    )


def check_monotone_l1(
    d: int,
    t: int,
    p: float,
    radius: int,
    trials: int,
    seed: int = 0,
    *,
    confidence: float = 0.99,
    jobs: int = 1,
) -> CheckReport:
    """Planar occupancy must not increase with the L1 norm of the site."""
    if d != 2:
        raise ValueError(f"only d=2 is implemented, got d={d}")
    points = [
        (x, y)
        for x in range(-radius, radius + 1)
        for y in range(-radius, radius + 1)
        if abs(x) + abs(y) <= radius
    ]
    ordered = [
        (a, b)
        for a in points
        for b in points
        if a != b and abs(a[0]) + abs(a[1]) <= abs(b[0]) + abs(b[1])
    ]
    per_site = 1.0 - (1.0 - confidence) / (2.0 * max(len(ordered), 1))
    estimates = {
        e.site: e
        for e in estimate_occupancy_2d(
            unit_box(2), t, points, trials, p=p, seed=seed, confidence=per_site, jobs=jobs
        )
    }
    worst = -math.inf
    for near_pt, far_pt in ordered:
        near, far = estimates[near_pt], estimates[far_pt]
        gap = far.estimate - near.estimate - (near.half_width + far.half_width)
        worst = max(worst, gap)
    return CheckReport(
        claim="occupancy-monotone-l1-2d",
        passed=worst <= 0,
        worst_margin=worst,
        params={"d": d, "t": t, "p": p, "radius": radius, "trials": trials, "seed": seed},
    )


# ---------------------------------------------------------------------------
# coupling checks


def _coupled_occupancy_counts(
    t: int,
    p: float,
    trials: int,
    seed: int,
    sites: Sequence[int],
    skip_antithetic_map: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Occupancy counts of both coupled marginals at times 1..t."""
    root = Stream(seed)
    sites_arr = np.asarray(sites, np.int64)
    counts_minus = np.zeros((t, len(sites)), np.int64)
    counts_plus = np.zeros((t, len(sites)), np.int64)
    block = 8192
    for start in range(0, trials, block):
        size = min(block, trials - start)
        ml = np.zeros((t, size), np.int64)
        mr = np.zeros((t, size), np.int64)
        pl = np.zeros((t, size), np.int64)
        pr = np.zeros((t, size), np.int64)
        dead_minus = np.zeros((t, size), bool)
        dead_plus = np.zeros((t, size), bool)
        stream = root.substream("coupled-marginal", start // block)
        for i in range(size):
            state = initial_coupled_state()
            for time in range(t):
                state = coupled_step(state, p, stream, skip_antithetic_map=skip_antithetic_map)
                if state.minus is None:
                    dead_minus[time, i] = True
                else:
                    ml[time, i] = state.minus.left
                    mr[time, i] = state.minus.right
                if state.plus is None:
                    dead_plus[time, i] = True
                else:
                    pl[time, i] = state.plus.left
                    pr[time, i] = state.plus.right
        for time in range(t):
            alive_m = ~dead_minus[time]
            alive_p = ~dead_plus[time]
            for j, x in enumerate(sites_arr):
                counts_minus[time, j] += np.count_nonzero(
                    alive_m & (ml[time] <= x) & (x <= mr[time])
                )
                counts_plus[time, j] += np.count_nonzero(
                    alive_p & (pl[time] <= x) & (x <= pr[time])
                )
    return counts_minus, counts_plus


def _two_sample_pvalue(hits_a: int, n_a: int, hits_b: int, n_b: int) -> float:
    """Pearson chi-square on the 2x2 hit/miss table; 1.0 when degenerate."""
    a, b = hits_a, n_a - hits_a
    c, d = hits_b, n_b - hits_b
    if (a + c) == 0 or (b + d) == 0:
        return 1.0
    n = a + b + c + d
    num = n * (a * d - b * c) ** 2
    den = (a + b) * (c + d) * (a + c) * (b + d)
    return float(stats.chi2.sf(num / den, 1))


def coupling_marginal_test(
    t: int,
    p: float,
    trials: int,
    seed: int = 0,
    *,
    significance: float = 1e-3,
    x_window: int = 8,
    jobs: int = 1,
    skip_antithetic_map: bool = False,
) -> CheckReport:
    """Both coupled marginals must match standalone simulations in law.

    Occupancy profiles at times 1..t over a site window are compared by
    per-site two-sample chi-square tests at a union-bounded significance.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    sites = list(range(-x_window, x_window + 1))
    counts_minus, counts_plus = _coupled_occupancy_counts(
        t, p, trials, seed, sites, skip_antithetic_map
    )
    root = Stream(seed)

    def standalone(label: str, initial: Span) -> np.ndarray:
        def worker(index: int, count: int) -> np.ndarray:
            return _interval_chunk_counts(
                root.substream(label, index), count, initial, t, UNIFORM, p, sites, False, True
            )

        return _run_chunks(trials, worker, jobs)

    alone_minus = standalone("standalone-minus", Span(-1, -1))
    alone_plus = standalone("standalone-plus", Span(0, 0))
    tests = 2 * t * len(sites)
    alpha_each = significance / tests
    min_pvalue = 1.0
    for coupled, alone in ((counts_minus, alone_minus), (counts_plus, alone_plus)):
        for time in range(t):
            for j in range(len(sites)):
                pv = _two_sample_pvalue(
                    int(coupled[time, j]), trials, int(alone[time, j]), trials
                )
                min_pvalue = min(min_pvalue, pv)
    return CheckReport(
        claim="coupling-marginals",
        passed=min_pvalue >= alpha_each,
        worst_margin=alpha_each - min_pvalue,
        params={
            "t": t,
            "p": p,
            "trials": trials,
            "seed": seed,
            "significance": significance,
            "x_window": x_window,
        },
    )


def coupling_invariant_check(
    horizon: int,
    p: float,
    trials: int,
    seed: int = 0,
    *,
    skip_antithetic_map: bool = False,
) -> CheckReport:
    """Pathwise invariants of the antithetic coupling.

    Every visited pair must be empty, coalesced-identical, or antithetic;
    the plus side must contain the nonnegative sites of the minus side at
    every step; coalescence must be absorbing.
    """
    root = Stream(seed)
    violations = 0
    coalesced_runs = 0
    for run in range(trials):
        stream = root.substream("coupled-invariants", run)
        state = initial_coupled_state()
        for _ in range(horizon):
            state = coupled_step(state, p, stream, skip_antithetic_map=skip_antithetic_map)
            kind = classify_pair(state.minus, state.plus)
            ok = (
                kind is PairClass.BOTH_EMPTY
                or kind is PairClass.ANTITHETIC
                or (kind is PairClass.IDENTICAL and state.coalesced)
            )
            if state.coalesced and state.minus != state.plus:
                ok = False
            if not dominates_nonnegative(state.minus, state.plus):
                ok = False
            if not ok:
                violations += 1
                break
            if kind is PairClass.BOTH_EMPTY and not state.coalesced:
                break
        if state.coalesced:
            coalesced_runs += 1
    return CheckReport(
        claim="coupling-invariants",
        passed=violations == 0,
        worst_margin=float(violations),
        params={
            "horizon": horizon,
            "p": p,
            "trials": trials,
            "seed": seed,
            "coalesced_runs": coalesced_runs,
        },
    )


def reflection_identity_check(
    horizon: int,
    p: float,
    trials: int,
    seed: int = 0,
    *,
    swap_expansion_draws: bool = True,
) -> CheckReport:
    """The mirrored copy must equal the reflection of the first at all times.

    A run stops at its first violation, so a broken step never feeds an
    inconsistent pair back into the coupling.
    """
    root = Stream(seed)
    violations = 0
    for run in range(trials):
        stream = root.substream("reflection", run)
        zeta: Interval = Span(0, 0)
        eta: Interval = Span(0, 0)
        for _ in range(horizon):
            zeta, eta = reflection_coupled_step(
                zeta, eta, p, stream, swap_expansion_draws=swap_expansion_draws
            )
            if eta != reflect_origin(zeta):
                violations += 1
                break
            if zeta is None:
                break
    return CheckReport(
        claim="reflection-identity",
        passed=violations == 0,
        worst_margin=float(violations),
        params={"horizon": horizon, "p": p, "trials": trials, "seed": seed},
    )


@dataclass(frozen=True)
class CoalescenceSummary:
    """Censored first coalescence-or-absorption time distribution."""

    p: float
    horizon: int
    trials: int
    seed: int
    first_event_times: dict[int, int]
    coalesced: int
    absorbed: int
    censored: int

    @property
    def resolved_fraction(self) -> float:
        return (self.coalesced + self.absorbed) / self.trials


def coalescence_stats(
    p: float,
    horizon: int,
    trials: int,
    seed: int = 0,
) -> CoalescenceSummary:
    """Empirical distribution of the first coalescence-or-absorption time.

    Runs still coupled and alive at the horizon are censored; no claim is
    made about finiteness of the coupling time.
    """
    root = Stream(seed)
    first_times: dict[int, int] = {}
    coalesced = 0
    absorbed = 0
    censored = 0
    for run in range(trials):
        stream = root.substream("coalescence", run)
        state = initial_coupled_state()
        resolved = False
        for time in range(1, horizon + 1):
            state = coupled_step(state, p, stream)
            if state.coalesced or (state.minus is None and state.plus is None):
                first_times[time] = first_times.get(time, 0) + 1
                if state.coalesced:
                    coalesced += 1
                else:
                    absorbed += 1
                resolved = True
                break
        if not resolved:
            censored += 1
    return CoalescenceSummary(
        p=p,
        horizon=horizon,
        trials=trials,
        seed=seed,
        first_event_times=dict(sorted(first_times.items())),
        coalesced=coalesced,
        absorbed=absorbed,
        censored=censored,
    )
