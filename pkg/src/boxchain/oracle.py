"""Exact propagation of the interval process law with certified truncation.

The full state distribution (a finitely supported map from intervals to
mass) is pushed through the contraction and expansion kernels.  The
contraction kernel is finite, so it is exact; the expansion kernel has
unbounded geometric tails, so shifts beyond ``n_max`` per side are dropped
and their probability is accumulated in ``lost``.  Every reported
occupancy value then becomes a certified bracket [lo, lo + lost].

Two arithmetic modes are supported: 64-bit floats for large sweeps (with a
grid-based fast path for the uniform rule) and exact rationals for small
horizons, where mass conservation holds identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np

from .coupling import (
    PairClass,
    antithetic_image,
    antithetic_mirror,
    classify_pair,
    coupled_expansion_amounts,
    right_offset,
)
from .intervals import (
    EMPTY,
    ContractionRule,
    EndpointResampleContraction,
    Interval,
    KillThenUniformContraction,
    SizeWeightedContraction,
    Span,
    UNIFORM,
    UniformContraction,
    contains,
    count_nonempty_subintervals,
    size_pmf_weights,
    unrank_subinterval,
    validate_expansion_param,
)

__all__ = [
    "Mass",
    "TruncationPolicy",
    "StateDist",
    "OccupancyBounds",
    "contraction_outcome_pmf",
    "contraction_pushforward",
    "expansion_pushforward",
    "evolve",
    "occupancy_bounds",
    "occupancy_table",
    "CouplingTransitionReport",
    "coupling_transition_check",
]

Mass = Union[float, Fraction]


@dataclass(frozen=True)
class TruncationPolicy:
    """Retain geometric shifts 0..n_max per side per expansion step."""

    n_max: int

    def __post_init__(self) -> None:
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")

    def per_step_loss_bound(self, p: float) -> float:
        """Mass discarded per expansion step is at most this."""
        return 1.0 - (1.0 - float(p) ** (self.n_max + 1)) ** 2


@dataclass
class StateDist:
    """Finitely supported distribution over intervals plus tracked lost mass."""

    weights: dict[Interval, Mass]
    lost: Mass
    exact: bool = False

    @classmethod
    def point_mass(cls, interval: Interval, exact: bool = False) -> "StateDist":
        one: Mass = Fraction(1) if exact else 1.0
        zero: Mass = Fraction(0) if exact else 0.0
        return cls({interval: one}, zero, exact)

    def total(self) -> Mass:
        return sum(self.weights.values()) + self.lost

    def mass_of(self, interval: Interval) -> Mass:
        zero: Mass = Fraction(0) if self.exact else 0.0
        return self.weights.get(interval, zero)


@dataclass(frozen=True)
class OccupancyBounds:
    """Certified bracket on the probability that ``site`` is occupied."""

    site: int
    lo: Mass
    hi: Mass


# ---------------------------------------------------------------------------
# contraction


def contraction_outcome_pmf(span: Span, rule: ContractionRule, exact: bool = False) -> dict[Interval, Mass]:
    """Exact one-state contraction law under ``rule``, by direct enumeration.

    Serves as the independent reference distribution for the samplers.
    """
    n = span.size
    out: dict[Interval, Mass] = {}
    if isinstance(rule, UniformContraction):
        total = count_nonempty_subintervals(n)
        unit: Mass = Fraction(1, total + 1) if exact else 1.0 / (total + 1)
        out[EMPTY] = unit
        for left in range(span.left, span.right + 1):
            for right in range(left, span.right + 1):
                out[Span(left, right)] = unit
        return out
    if isinstance(rule, SizeWeightedContraction):
        weights = size_pmf_weights(rule.size_pmf, n)
        probs = [Fraction(w) if exact else w for w in weights]
        out[EMPTY] = probs[0]
        for k in range(1, n + 1):
            slots = n - k + 1
            share = probs[k] / slots
            for left in range(span.left, span.left + slots):
                out[Span(left, left + k - 1)] = share
        return out
    if isinstance(rule, KillThenUniformContraction):
        death = rule.death_probability(rule.expansion_p, n)
        if not 0 <= death <= 1:
            raise ValueError(f"death probability {death} outside [0, 1]")
        death_mass: Mass = Fraction(death) if exact else float(death)
        total = count_nonempty_subintervals(n)
        survive = (1 - death_mass) / total
        out[EMPTY] = death_mass
        for left in range(span.left, span.right + 1):
            for right in range(left, span.right + 1):
                out[Span(left, right)] = survive
        return out
    if isinstance(rule, EndpointResampleContraction):
        denom = n * n
        for left in range(span.left, span.right + 1):
            for right in range(left, span.right + 1):
                count = 1 if left == right else 2
                out[Span(left, right)] = Fraction(count, denom) if exact else count / denom
        return out
    raise TypeError(f"unknown contraction rule {rule!r}")


def _contract_generic(dist: StateDist, rule: ContractionRule) -> StateDist:
    zero: Mass = Fraction(0) if dist.exact else 0.0
    out: dict[Interval, Mass] = {}
    for interval, weight in dist.weights.items():
        if interval is None:
            out[EMPTY] = out.get(EMPTY, zero) + weight
            continue
        for outcome, prob in contraction_outcome_pmf(interval, rule, dist.exact).items():
            out[outcome] = out.get(outcome, zero) + weight * prob
    return StateDist(out, dist.lost, dist.exact)


def _grid_from_dist(dist: StateDist) -> Optional[tuple[np.ndarray, int, float]]:
    spans = [(iv.left, iv.right, float(w)) for iv, w in dist.weights.items() if iv is not None]
    empty_mass = float(dist.weights.get(EMPTY, 0.0))
    if not spans:
        return None
    origin = min(left for left, _, _ in spans)
    top = max(right for _, right, _ in spans)
    size = top - origin + 1
    grid = np.zeros((size, size))
    for left, right, w in spans:
        grid[left - origin, right - origin] += w
    return grid, origin, empty_mass


def _dist_from_grid(grid: np.ndarray, origin: int, empty_mass: float, lost: float) -> StateDist:
    weights: dict[Interval, Mass] = {}
    if empty_mass > 0.0:
        weights[EMPTY] = empty_mass
    rows, cols = np.nonzero(grid)
    for i, j in zip(rows.tolist(), cols.tolist()):
        weights[Span(i + origin, j + origin)] = float(grid[i, j])
    return StateDist(weights, lost, exact=False)


def _contract_uniform_grid(grid: np.ndarray, empty_mass: float) -> tuple[np.ndarray, float]:
    size = grid.shape[0]
    idx = np.arange(size)
    lengths = idx[None, :] - idx[:, None] + 1
    valid = lengths >= 1
    slots = np.where(valid, lengths * (lengths + 1) // 2, 0)
    shares = np.where(valid, grid / (slots + 1), 0.0)
    died = float(shares.sum())
    acc = np.cumsum(shares, axis=0)
    acc = np.flip(np.cumsum(np.flip(acc, axis=1), axis=1), axis=1)
    return np.where(valid, acc, 0.0), empty_mass + died


def _expand_grid(grid: np.ndarray, p: float, n_max: int) -> tuple[np.ndarray, int, float]:
    """Returns (expanded grid, origin shift, lost increment)."""
    kernel = (1.0 - p) * p ** np.arange(n_max + 1)
    retained = float(kernel.sum())
    size = grid.shape[0]
    tall = np.zeros((size + 2 * n_max, size))
    for a in range(n_max + 1):
        tall[n_max - a : n_max - a + size, :] += kernel[a] * grid
    out = np.zeros((size + 2 * n_max, size + 2 * n_max))
    for b in range(n_max + 1):
        out[:, n_max + b : n_max + b + size] += kernel[b] * tall
    live = float(grid.sum())
    return out, n_max, live * (1.0 - retained * retained)


def contraction_pushforward(dist: StateDist, rule: ContractionRule) -> StateDist:
    """Exact mixture over all contraction outcomes of every source state."""
    if not dist.exact and isinstance(rule, UniformContraction):
        packed = _grid_from_dist(dist)
        if packed is None:
            return StateDist(dict(dist.weights), dist.lost, dist.exact)
        grid, origin, empty_mass = packed
        grid, empty_mass = _contract_uniform_grid(grid, empty_mass)
        return _dist_from_grid(grid, origin, empty_mass, float(dist.lost))
    return _contract_generic(dist, rule)


def expansion_pushforward(dist: StateDist, p, policy: TruncationPolicy) -> StateDist:
    """Convolve every span with two truncated geometrics; track the tails."""
    validate_expansion_param(p)
    n_max = policy.n_max
    if not dist.exact:
        packed = _grid_from_dist(dist)
        if packed is None:
            return StateDist(dict(dist.weights), dist.lost, dist.exact)
        grid, origin, empty_mass = packed
        grid, shift, lost_inc = _expand_grid(grid, float(p), n_max)
        return _dist_from_grid(grid, origin - shift, empty_mass, float(dist.lost) + lost_inc)
    p = Fraction(p)
    kernel = [(1 - p) * p**a for a in range(n_max + 1)]
    retained_sq = (1 - p ** (n_max + 1)) ** 2
    zero = Fraction(0)
    out: dict[Interval, Mass] = {}
    lost = dist.lost
    for interval, weight in dist.weights.items():
        if interval is None:
            out[EMPTY] = out.get(EMPTY, zero) + weight
            continue
        lost += weight * (1 - retained_sq)
        for a, qa in enumerate(kernel):
            for b, qb in enumerate(kernel):
                key = Span(interval.left - a, interval.right + b)
                out[key] = out.get(key, zero) + weight * qa * qb
    return StateDist(out, lost, exact=True)


def evolve(
    initial: Interval,
    horizon: int,
    rule: ContractionRule = UNIFORM,
    p=0.5,
    policy: TruncationPolicy = TruncationPolicy(40),
    exact: bool = False,
) -> StateDist:
    """Law of the process after ``horizon`` steps from a point mass.

    ``lost`` is nondecreasing in the horizon and bounds the bracket width
    of every occupancy value.
    """
    validate_expansion_param(p)
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if exact:
        p = Fraction(p)
    if not exact and isinstance(rule, UniformContraction) and initial is not None:
        # Grid fast path: stay in array form across all steps.
        grid = np.array([[1.0]])
        origin = initial.left
        extent = initial.size
        if extent > 1:
            grid = np.zeros((extent, extent))
            grid[0, extent - 1] = 1.0
        empty_mass = 0.0
        lost = 0.0
        for _ in range(horizon):
            grid, empty_mass = _contract_uniform_grid(grid, empty_mass)
            grid, shift, lost_inc = _expand_grid(grid, float(p), policy.n_max)
            origin -= shift
            lost += lost_inc
        return _dist_from_grid(grid, origin, empty_mass, lost)
    dist = StateDist.point_mass(initial, exact=exact)
    for _ in range(horizon):
        dist = contraction_pushforward(dist, rule)
        dist = expansion_pushforward(dist, p, policy)
    return dist


# ---------------------------------------------------------------------------
# occupancy


def occupancy_bounds(dist: StateDist, site: int) -> OccupancyBounds:
    """lo = mass of spans containing ``site``; hi = lo + lost."""
    zero: Mass = Fraction(0) if dist.exact else 0.0
    lo = zero
    for interval, weight in dist.weights.items():
        if contains(interval, site):
            lo += weight
    return OccupancyBounds(site, lo, lo + dist.lost)


def occupancy_table(dist: StateDist, sites: Iterable[int]) -> list[OccupancyBounds]:
    """Occupancy brackets for many sites in one pass."""
    sites = list(sites)
    if dist.exact or len(dist.weights) < 512:
        return [occupancy_bounds(dist, x) for x in sites]
    lefts = np.array([iv.left for iv in dist.weights if iv is not None])
    rights = np.array([iv.right for iv in dist.weights if iv is not None])
    masses = np.array([w for iv, w in dist.weights.items() if iv is not None])
    out = []
    for x in sites:
        lo = float(masses[(lefts <= x) & (x <= rights)].sum())
        out.append(OccupancyBounds(x, lo, lo + float(dist.lost)))
    return out


# ---------------------------------------------------------------------------
# exhaustive check of the coupled one-step transition


@dataclass(frozen=True)
class CouplingTransitionReport:
    """Worst-case gaps between the coupled one-step laws and the standard ones."""

    host: Span
    p: Fraction
    surface_len: int
    max_minus_discrepancy: Fraction
    max_plus_discrepancy: Fraction
    tail_bound: Fraction


def _max_gap(law: dict[Interval, Fraction], reference: dict[Interval, Fraction]) -> Fraction:
    keys = set(law) | set(reference)
    zero = Fraction(0)
    return max((abs(law.get(k, zero) - reference.get(k, zero)) for k in keys), default=zero)


def coupling_transition_check(host: Span, p, surface_len: int) -> CouplingTransitionReport:
    """Enumerate every coupled one-step transition from an antithetic pair.

    All contraction indices are crossed with all surface run lengths below
    ``surface_len``; the induced marginal laws are compared against the
    standard one-step law with the same truncation.  The minus marginal
    matches identically; the plus marginal can differ only by redistributed
    tail mass.
    """
    plus_host = antithetic_mirror(host)
    if classify_pair(host, plus_host) is not PairClass.ANTITHETIC:
        raise ValueError(f"host {host} does not sit in the antithetic class")
    if surface_len < 1:
        raise ValueError("surface_len must be >= 1")
    p = Fraction(p)
    validate_expansion_param(p)
    runs = surface_len  # run lengths 0..surface_len-1 are fully resolved
    kernel = [(1 - p) * p**a for a in range(runs)]
    policy = TruncationPolicy(runs - 1)
    oracle_minus = evolve(host, 1, UNIFORM, p, policy, exact=True)
    oracle_plus = evolve(plus_host, 1, UNIFORM, p, policy, exact=True)

    total = count_nonempty_subintervals(host.size)
    unit = Fraction(1, total + 1)
    zero = Fraction(0)
    minus_law: dict[Interval, Fraction] = {}
    plus_law: dict[Interval, Fraction] = {}

    def put(law: dict[Interval, Fraction], key: Interval, mass: Fraction) -> None:
        law[key] = law.get(key, zero) + mass

    for index in range(total + 1):
        tilde_minus = unrank_subinterval(host, index)
        tilde_plus = antithetic_image(host, tilde_minus)
        if tilde_minus is None:
            put(minus_law, EMPTY, unit)
            put(plus_law, EMPTY, unit)
            continue
        if tilde_plus == tilde_minus:
            # Shared expansion: one pair of draws applied to the common core.
            for a, qa in enumerate(kernel):
                for b, qb in enumerate(kernel):
                    outcome = Span(tilde_minus.left - a, tilde_minus.right + b)
                    put(minus_law, outcome, unit * qa * qb)
                    put(plus_law, outcome, unit * qa * qb)
            continue
        offset = right_offset(tilde_minus, tilde_plus)
        for n_right, q_right in enumerate(kernel):
            for n_left, q_left in enumerate(kernel):
                mass = unit * q_right * q_left
                _, m_left, m_right, p_left, p_right = coupled_expansion_amounts(
                    n_right, n_left, offset
                )
                put(minus_law, Span(tilde_minus.left - m_left, tilde_minus.right + m_right), mass)
                put(plus_law, Span(tilde_plus.left - p_left, tilde_plus.right + p_right), mass)

    enum_lost = 1 - sum(minus_law.values())
    tail_bound = enum_lost + oracle_minus.lost + oracle_plus.lost
    return CouplingTransitionReport(
        host=host,
        p=p,
        surface_len=surface_len,
        max_minus_discrepancy=_max_gap(minus_law, oracle_minus.weights),
        max_plus_discrepancy=_max_gap(plus_law, oracle_plus.weights),
        tail_bound=tail_bound,
    )
