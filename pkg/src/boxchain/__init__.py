"""Markov dynamics of randomly contracting, geometrically expanding lattice regions.

The one-dimensional process lives on integer intervals: each step picks a
uniform random sub-interval (possibly the absorbing empty set) and pushes
the surviving endpoints outward by independent geometric amounts.  The
d-dimensional variant does the same with axis-aligned boxes and their
faces.  The package simulates these dynamics, propagates their law exactly
with certified truncation error, and verifies the symmetry and
monotonicity of the occupancy function both statistically and through two
executable couplings.
"""

from .boxes import (
    Box,
    EMPTY_BOX,
    HyperRect,
    contract_uniform,
    count_nonempty_subrects,
    expand_faces,
    l1_norm,
    simulate_path_rect,
    step_rect,
    unit_box,
)
from .coupling import (
    BernoulliSurface,
    CoupledState,
    PairClass,
    antithetic_image,
    antithetic_mirror,
    classify_pair,
    coupled_contraction,
    coupled_expansion,
    coupled_expansion_amounts,
    coupled_step,
    dominates_nonnegative,
    endpoint_gap,
    initial_coupled_state,
    reflect_origin,
    reflection_coupled_step,
    relabel_site,
    right_offset,
    run_coupled,
    run_reflection,
    unrelabel_site,
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
    contract,
    count_nonempty_subintervals,
    expand,
    geometric_pmf,
    geometric_sample,
    rank_subinterval,
    simulate_path,
    size_of,
    step,
    unrank_subinterval,
)
from .montecarlo import (
    CheckReport,
    CoalescenceSummary,
    OccupancyEstimate,
    check_even,
    check_monotone_1d,
    check_monotone_l1,
    coalescence_stats,
    coupling_invariant_check,
    coupling_marginal_test,
    estimate_occupancy,
    estimate_occupancy_2d,
    hoeffding_interval,
    reflection_identity_check,
    wilson_interval,
)
from .oracle import (
    CouplingTransitionReport,
    OccupancyBounds,
    StateDist,
    TruncationPolicy,
    contraction_outcome_pmf,
    contraction_pushforward,
    coupling_transition_check,
    evolve,
    expansion_pushforward,
    occupancy_bounds,
    occupancy_table,
)
from .stream import Stream

__version__ = "0.1.0"
