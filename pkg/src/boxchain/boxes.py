"""Axis-aligned lattice boxes and their contract/expand dynamics in d >= 1.

The contraction draws one global index uniformly over all nonempty
sub-boxes plus a single empty slot.  Drawing per-axis sub-intervals
conditioned on joint non-emptiness would distort that measure, so the
decode goes through a mixed-radix split of a single draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .intervals import EMPTY, Span, count_nonempty_subintervals, unrank_subinterval, validate_expansion_param
from .stream import Stream

__all__ = [
    "Box",
    "HyperRect",
    "EMPTY_BOX",
    "count_nonempty_subrects",
    "contract_uniform",
    "expand_faces",
    "step_rect",
    "simulate_path_rect",
    "l1_norm",
]


@dataclass(frozen=True, order=True, slots=True)
class Box:
    """A nonempty product of integer spans, one per axis."""

    spans: tuple[Span, ...]

    def __post_init__(self) -> None:
        if len(self.spans) < 1:
            raise ValueError("a box needs at least one axis")

    @property
    def dim(self) -> int:
        return len(self.spans)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.size for s in self.spans)

    def __contains__(self, point: Sequence[int]) -> bool:
        if len(point) != len(self.spans):
            raise ValueError(f"point {point} has wrong dimension for {self}")
        return all(x in span for x, span in zip(point, self.spans))


HyperRect = Optional[Box]
EMPTY_BOX: HyperRect = None


def unit_box(dim: int) -> Box:
    """The box {0}^dim."""
    return Box(tuple(Span(0, 0) for _ in range(dim)))


def count_nonempty_subrects(sizes: Sequence[int]) -> int:
    """Product over axes of n_i (n_i + 1) / 2."""
    total = 1
    for n in sizes:
        total *= count_nonempty_subintervals(n)
    return total


def contract_uniform(state: HyperRect, stream: Stream) -> HyperRect:
    """Uniform draw over all nonempty sub-boxes plus one empty outcome."""
    if state is None:
        return EMPTY_BOX
    axis_counts = [count_nonempty_subintervals(n) for n in state.sizes]
    total = 1
    for c in axis_counts:
        total *= c
    index = stream.randbelow(total + 1)
    if index == 0:
        return EMPTY_BOX
    # Mixed-radix decode, last axis fastest.
    digits = []
    rem = index - 1
    for c in reversed(axis_counts):
        rem, digit = divmod(rem, c)
        digits.append(digit)
    digits.reverse()
    spans = tuple(
        unrank_subinterval(span, digit + 1) for span, digit in zip(state.spans, digits)
    )
    return Box(spans)


def expand_faces(core: HyperRect, p: float, stream: Stream) -> HyperRect:
    """Shift each of the 2d faces outward by an independent geometric(p).

    Draw order is axis by axis, low face then high face.
    """
    validate_expansion_param(p)
    if core is None:
        return EMPTY_BOX
    spans = []
    for span in core.spans:
        low = stream.geometric(p)
        high = stream.geometric(p)
        spans.append(Span(span.left - low, span.right + high))
    return Box(tuple(spans))


def step_rect(state: HyperRect, p: float, stream: Stream) -> HyperRect:
    """One full transition: uniform contraction then face expansion."""
    return expand_faces(contract_uniform(state, stream), p, stream)


def simulate_path_rect(initial: HyperRect, horizon: int, p: float, stream: Stream) -> list[HyperRect]:
    """States at times 0..horizon, starting from ``initial``."""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    path = [initial]
    state = initial
    for _ in range(horizon):
        state = step_rect(state, p, stream)
        path.append(state)
    return path


def l1_norm(point: Sequence[int]) -> int:
    return sum(abs(int(x)) for x in point)
