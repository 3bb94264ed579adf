"""Integer-interval states and their contract/expand Markov dynamics.

One step of the process replaces the current interval by a random
sub-interval (possibly the empty set, which is absorbing) and then pushes
the surviving endpoints outward by independent geometric amounts.  Several
contraction rules are supported; the expansion is always geometric.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt
from typing import Callable, Optional, Union

from .stream import Stream

__all__ = [
    "Span",
    "Interval",
    "EMPTY",
    "size_of",
    "contains",
    "validate_expansion_param",
    "UniformContraction",
    "UNIFORM",
    "SizeWeightedContraction",
    "KillThenUniformContraction",
    "EndpointResampleContraction",
    "ContractionRule",
    "uniform_death_probability",
    "geometric_pmf",
    "geometric_sample",
    "count_nonempty_subintervals",
    "unrank_subinterval",
    "rank_subinterval",
    "contract",
    "expand",
    "step",
    "simulate_path",
]


@dataclass(frozen=True, order=True, slots=True)
class Span:
    """A nonempty integer interval {left, ..., right}."""

    left: int
    right: int

    def __post_init__(self) -> None:
        if self.left > self.right:
            raise ValueError(f"span requires left <= right, got [{self.left}, {self.right}]")

    @property
    def size(self) -> int:
        return self.right - self.left + 1

    def __contains__(self, site: int) -> bool:
        return self.left <= site <= self.right

    def __repr__(self) -> str:
        return f"Span({self.left}, {self.right})"


# The absorbed empty state is encoded structurally as None, never as a
# numeric sentinel.
Interval = Optional[Span]
EMPTY: Interval = None


def size_of(interval: Interval) -> int:
    return 0 if interval is None else interval.size


def contains(interval: Interval, site: int) -> bool:
    return interval is not None and interval.left <= site <= interval.right


def validate_expansion_param(p) -> None:
    """Expansion parameters must lie strictly between 0 and 1."""
    if not 0 < p < 1:
        raise ValueError(f"expansion parameter must lie in (0, 1), got {p!r}")


# ---------------------------------------------------------------------------
# contraction rules


def uniform_death_probability(p: float, n: int) -> float:
    """Death weight that reproduces the uniform rule: one slot out of K+1."""
    return 1.0 / (n * (n + 1) // 2 + 1)


@dataclass(frozen=True)
class UniformContraction:
    """Equal mass on every sub-interval of the current state, empty included."""


@dataclass(frozen=True)
class SizeWeightedContraction:
    """Draw the new size k from ``size_pmf(k, n)``, then place it uniformly.

    ``size_pmf`` must be a pmf over k = 0..n for every n >= 1; k = 0 maps to
    the empty set.
    """

    size_pmf: Callable[[int, int], float]


@dataclass(frozen=True)
class KillThenUniformContraction:
    """Die with probability ``death_probability(p, n)``, else uniform over
    the nonempty sub-intervals.

    ``expansion_p`` is forwarded as the first argument of the callable; the
    default callable ignores it and reproduces the uniform rule exactly.
    """

    death_probability: Callable[[float, int], float] = uniform_death_probability
    expansion_p: float = 0.5


@dataclass(frozen=True)
class EndpointResampleContraction:
    """Resample both endpoints i.i.d. uniformly (with replacement) from the
    current sites; the result spans the two draws and is never empty."""


ContractionRule = Union[
    UniformContraction,
    SizeWeightedContraction,
    KillThenUniformContraction,
    EndpointResampleContraction,
]

UNIFORM = UniformContraction()


# ---------------------------------------------------------------------------
# elementary operations


def geometric_pmf(p, n: int):
    """P(N = n) = (1 - p) * p**n for n >= 0.

    Exact when ``p`` is a Fraction.
    """
    validate_expansion_param(p)
    if n < 0:
        raise ValueError(f"geometric pmf requires n >= 0, got {n}")
    return (1 - p) * p**n


def geometric_sample(p: float, stream: Stream) -> int:
    """One draw with pmf (1 - p) * p**n; consumes a single uniform."""
    validate_expansion_param(p)
    return stream.geometric(p)


def count_nonempty_subintervals(n: int) -> int:
    """Number of nonempty integer sub-intervals of an interval of size n."""
    if n < 1:
        raise ValueError(f"count_nonempty_subintervals requires n >= 1, got {n}")
    return n * (n + 1) // 2


def _offsets_from_rank(n: int, i0: int) -> tuple[int, int]:
    """Decode rank i0 in [0, n(n+1)/2) to (left, right) offsets, ordered by
    (left, right)."""
    # cum(a) = number of sub-intervals whose left offset is < a.
    a_top = 2 * n + 1
    disc = a_top * a_top - 8 * i0
    a = (a_top - isqrt(disc)) // 2
    if a > n - 1:
        a = n - 1
    while a * n - a * (a - 1) // 2 > i0:
        a -= 1
    while (a + 1) * n - (a + 1) * a // 2 <= i0:
        a += 1
    cum = a * n - a * (a - 1) // 2
    return a, a + (i0 - cum)


def unrank_subinterval(host: Span, index: int) -> Interval:
    """Index 0 is the empty set; indices 1..n(n+1)/2 enumerate the nonempty
    sub-intervals of ``host`` sorted by (left, right)."""
    if host is None:
        raise ValueError("unrank_subinterval requires a nonempty host")
    total = count_nonempty_subintervals(host.size)
    if not 0 <= index <= total:
        raise ValueError(f"index {index} out of range 0..{total} for host {host}")
    if index == 0:
        return EMPTY
    a, b = _offsets_from_rank(host.size, index - 1)
    return Span(host.left + a, host.left + b)


def rank_subinterval(host: Span, interval: Interval) -> int:
    """Inverse of :func:`unrank_subinterval`."""
    if host is None:
        raise ValueError("rank_subinterval requires a nonempty host")
    if interval is None:
        return 0
    n = host.size
    a = interval.left - host.left
    b = interval.right - host.left
    if not 0 <= a <= b <= n - 1:
        raise ValueError(f"{interval} is not a sub-interval of {host}")
    cum = a * n - a * (a - 1) // 2
    return cum + (b - a) + 1


def size_pmf_weights(size_pmf: Callable[[int, int], float], n: int) -> list[float]:
    """Evaluate and validate a size pmf over k = 0..n."""
    weights = [float(size_pmf(k, n)) for k in range(n + 1)]
    if any(w < 0 for w in weights):
        raise ValueError(f"size pmf has negative weights for n={n}")
    total = sum(weights)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"size pmf sums to {total} over k=0..{n}, expected 1")
    return weights


def _draw_size(size_pmf: Callable[[int, int], float], n: int, stream: Stream) -> int:
    weights = size_pmf_weights(size_pmf, n)
    u = stream.random()
    acc = 0.0
    for k, w in enumerate(weights):
        acc += w
        if u < acc:
            return k
    return n


def contract(state: Interval, rule: ContractionRule, stream: Stream) -> Interval:
    """One contraction phase under ``rule``; the empty state is absorbing."""
    if state is None:
        return EMPTY
    n = state.size
    if isinstance(rule, UniformContraction):
        total = count_nonempty_subintervals(n)
        return unrank_subinterval(state, stream.randbelow(total + 1))
    if isinstance(rule, SizeWeightedContraction):
        k = _draw_size(rule.size_pmf, n, stream)
        if k == 0:
            return EMPTY
        left = state.left + stream.randbelow(n - k + 1)
        return Span(left, left + k - 1)
    if isinstance(rule, KillThenUniformContraction):
        death = rule.death_probability(rule.expansion_p, n)
        if not 0 <= death <= 1:
            raise ValueError(f"death probability {death} outside [0, 1]")
        if stream.random() < death:
            return EMPTY
        total = count_nonempty_subintervals(n)
        return unrank_subinterval(state, 1 + stream.randbelow(total))
    if isinstance(rule, EndpointResampleContraction):
        u = state.left + stream.randbelow(n)
        v = state.left + stream.randbelow(n)
        return Span(min(u, v), max(u, v))
    raise TypeError(f"unknown contraction rule {rule!r}")


def expand(core: Interval, p: float, stream: Stream) -> Interval:
    """Push both endpoints outward by independent geometric(p) amounts.

    Draw order is left then right.
    """
    validate_expansion_param(p)
    if core is None:
        return EMPTY
    grow_left = stream.geometric(p)
    grow_right = stream.geometric(p)
    return Span(core.left - grow_left, core.right + grow_right)


def step(state: Interval, rule: ContractionRule, p: float, stream: Stream) -> Interval:
    """One full transition: contraction followed by expansion."""
    return expand(contract(state, rule, stream), p, stream)


def simulate_path(
    initial: Interval,
    horizon: int,
    rule: ContractionRule,
    p: float,
    stream: Stream,
) -> list[Interval]:
    """States at times 0..horizon, starting from ``initial``."""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    path = [initial]
    state = initial
    for _ in range(horizon):
        state = step(state, rule, p, stream)
        path.append(state)
    return path
