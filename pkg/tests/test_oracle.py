from fractions import Fraction

import pytest

from boxchain import (
    EMPTY,
    EndpointResampleContraction,
    Span,
    StateDist,
    TruncationPolicy,
    UNIFORM,
    contraction_pushforward,
    coupling_transition_check,
    evolve,
    expansion_pushforward,
    occupancy_bounds,
    occupancy_table,
)


def closed_form_t1(p, x):
    """One step from the point at the origin: survive the contraction with
    probability 1/2, then reach x by a one-sided geometric tail."""
    return 0.5 * p ** abs(x)


def test_contraction_point_mass():
    dist = StateDist.point_mass(Span(0, 0))
    out = contraction_pushforward(dist, UNIFORM)
    assert out.weights[EMPTY] == pytest.approx(0.5)
    assert out.weights[Span(0, 0)] == pytest.approx(0.5)
    assert out.lost == 0


def test_contraction_empty_absorbing_and_mass_preserved():
    dist = StateDist({EMPTY: 0.25, Span(0, 1): 0.75}, 0.0)
    out = contraction_pushforward(dist, UNIFORM)
    assert out.weights[EMPTY] == pytest.approx(0.25 + 0.75 / 4)
    assert out.total() == pytest.approx(1.0, abs=1e-12)


def test_contraction_rational_exact():
    dist = StateDist.point_mass(Span(0, 2), exact=True)
    out = contraction_pushforward(dist, UNIFORM)
    assert out.weights[EMPTY] == Fraction(1, 7)
    assert out.weights[Span(0, 2)] == Fraction(1, 7)
    assert out.total() == 1


def test_contraction_grid_matches_generic():
    weights = {Span(-2, 1): 0.3, Span(0, 0): 0.5, Span(1, 3): 0.2}
    float_out = contraction_pushforward(StateDist(dict(weights), 0.0), UNIFORM)
    exact_in = StateDist({k: Fraction(v).limit_denominator() for k, v in weights.items()}, Fraction(0), exact=True)
    exact_out = contraction_pushforward(exact_in, UNIFORM)
    assert set(float_out.weights) == set(exact_out.weights)
    for key, value in exact_out.weights.items():
        assert float_out.weights[key] == pytest.approx(float(value), abs=1e-12)


def test_expansion_zero_truncation():
    p = 0.5
    dist = StateDist.point_mass(Span(0, 0))
    out = expansion_pushforward(dist, p, TruncationPolicy(0))
    assert set(out.weights) == {Span(0, 0)}
    assert out.weights[Span(0, 0)] == pytest.approx((1 - p) ** 2)
    assert out.lost == pytest.approx(1 - (1 - p) ** 2)


def test_expansion_weight_formula():
    p = 0.3
    n_max = 12
    out = expansion_pushforward(StateDist.point_mass(Span(0, 0)), p, TruncationPolicy(n_max))
    for a in (0, 1, 5):
        for b in (0, 2, 12):
            want = (1 - p) ** 2 * p ** (a + b)
            assert out.weights[Span(-a, b)] == pytest.approx(want, rel=1e-12)
    assert out.total() == pytest.approx(1.0, abs=1e-12)


def test_expansion_keeps_empty():
    dist = StateDist({EMPTY: 1.0}, 0.0)
    out = expansion_pushforward(dist, 0.5, TruncationPolicy(10))
    assert out.weights == {EMPTY: 1.0}
    assert out.lost == 0.0


def test_evolve_horizon_zero():
    dist = evolve(Span(0, 0), 0)
    assert dist.weights == {Span(0, 0): 1.0}
    assert dist.lost == 0.0


def test_evolve_t1_death_mass_and_brackets():
    dist = evolve(Span(0, 0), 1, p=0.5, policy=TruncationPolicy(40))
    assert dist.weights[EMPTY] == pytest.approx(0.5, abs=1e-12)
    for x in range(-10, 11):
        b = occupancy_bounds(dist, x)
        truth = closed_form_t1(0.5, x)
        assert b.lo <= truth + 1e-15 <= b.hi + 1e-15
        assert b.hi - b.lo <= 1e-12
    assert occupancy_bounds(dist, 10**6).lo == 0.0


def test_evolve_rational_t1_width_is_lost():
    dist = evolve(Span(0, 0), 1, p=Fraction(1, 2), policy=TruncationPolicy(40), exact=True)
    assert dist.total() == 1
    for x in range(-5, 6):
        b = occupancy_bounds(dist, x)
        assert b.hi - b.lo == dist.lost
        truth = Fraction(1, 2) * Fraction(1, 2) ** abs(x)
        assert b.lo <= truth <= b.hi


def test_evolve_lost_bounded_by_per_step_bound():
    p = 0.6
    policy = TruncationPolicy(12)
    for t in range(5):
        dist = evolve(Span(0, 0), t, p=p, policy=policy)
        assert dist.lost <= t * policy.per_step_loss_bound(p) + 1e-12


def test_evolve_mass_conserved_float():
    dist = evolve(Span(0, 0), 4, p=0.7, policy=TruncationPolicy(25))
    assert dist.total() == pytest.approx(1.0, abs=1e-12)


def test_evolve_lost_nondecreasing():
    previous = -1.0
    for t in range(4):
        dist = evolve(Span(0, 0), t, p=0.5, policy=TruncationPolicy(10))
        assert dist.lost >= previous
        previous = dist.lost


def test_evolve_float_matches_rational_small():
    policy = TruncationPolicy(6)
    float_dist = evolve(Span(0, 1), 2, p=0.5, policy=policy)
    exact_dist = evolve(Span(0, 1), 2, p=Fraction(1, 2), policy=policy, exact=True)
    assert set(float_dist.weights) == set(exact_dist.weights)
    for key, value in exact_dist.weights.items():
        assert float_dist.weights[key] == pytest.approx(float(value), abs=1e-12)
    assert float_dist.lost == pytest.approx(float(exact_dist.lost), abs=1e-12)


def test_grid_path_matches_rational_authority_deeper():
    # Three full steps, ~1100 reachable states: the array fast path must
    # reproduce the exact-rational law to float precision everywhere.
    policy = TruncationPolicy(8)
    exact_dist = evolve(Span(0, 0), 3, p=Fraction(1, 2), policy=policy, exact=True)
    grid_dist = evolve(Span(0, 0), 3, p=0.5, policy=policy)
    assert set(grid_dist.weights) == set(exact_dist.weights)
    assert len(exact_dist.weights) > 1000
    for key, value in exact_dist.weights.items():
        assert grid_dist.weights[key] == pytest.approx(float(value), abs=1e-13)
    assert grid_dist.lost == pytest.approx(float(exact_dist.lost), abs=1e-13)


def test_expansion_mixed_empty_and_span():
    p = 0.5
    dist = StateDist({EMPTY: 0.5, Span(0, 0): 0.5}, 0.0)
    out = expansion_pushforward(dist, p, TruncationPolicy(0))
    assert out.weights[EMPTY] == pytest.approx(0.5)
    assert out.weights[Span(0, 0)] == pytest.approx(0.5 * (1 - p) ** 2)
    assert out.lost == pytest.approx(0.5 * (1 - (1 - p) ** 2))


def test_evolve_supports_other_rules():
    dist = evolve(Span(0, 0), 2, rule=EndpointResampleContraction(), p=0.5,
                  policy=TruncationPolicy(8))
    assert EMPTY not in dist.weights  # this rule never kills
    assert dist.total() == pytest.approx(1.0, abs=1e-12)


def test_generic_float_path_matches_rational():
    # Non-uniform rules take the dict-based route in both modes.
    policy = TruncationPolicy(5)
    rule = EndpointResampleContraction()
    float_dist = evolve(Span(0, 1), 2, rule=rule, p=0.5, policy=policy)
    exact_dist = evolve(Span(0, 1), 2, rule=rule, p=Fraction(1, 2), policy=policy, exact=True)
    assert set(float_dist.weights) == set(exact_dist.weights)
    for key, value in exact_dist.weights.items():
        assert float_dist.weights[key] == pytest.approx(float(value), abs=1e-12)


def test_occupancy_symmetry_exact_even_in_float():
    dist = evolve(Span(0, 0), 3, p=0.5, policy=TruncationPolicy(20))
    for x in range(0, 25):
        lo_pos = occupancy_bounds(dist, x).lo
        lo_neg = occupancy_bounds(dist, -x).lo
        assert lo_pos == pytest.approx(lo_neg, abs=2 * dist.lost + 1e-13)


def test_occupancy_table_matches_pointwise():
    dist = evolve(Span(0, 0), 2, p=0.5, policy=TruncationPolicy(30))
    sites = list(range(-12, 13))
    table = occupancy_table(dist, sites)
    for entry in table:
        direct = occupancy_bounds(dist, entry.site)
        assert entry.lo == pytest.approx(direct.lo, abs=1e-12)
        assert entry.hi == pytest.approx(direct.hi, abs=1e-12)


def test_truncation_policy_validation():
    with pytest.raises(ValueError):
        TruncationPolicy(-1)
    assert TruncationPolicy(3).per_step_loss_bound(0.5) == pytest.approx(1 - (1 - 0.5**4) ** 2)


# ---------------------------------------------------------------------------
# exhaustive coupled-transition audit


def test_coupling_transition_check_point_host():
    report = coupling_transition_check(Span(-1, -1), Fraction(1, 2), 14)
    assert report.max_minus_discrepancy == 0
    assert report.max_plus_discrepancy <= 2 * Fraction(1, 2) ** 14


def test_coupling_transition_check_wider_hosts():
    for host in (Span(-2, -1), Span(-3, 0)):
        report = coupling_transition_check(host, Fraction(1, 2), 14)
        assert report.max_minus_discrepancy == 0
        assert report.max_plus_discrepancy <= 2 * Fraction(1, 2) ** 14
        assert report.max_plus_discrepancy <= report.tail_bound


def test_coupling_transition_check_rejects_bad_host():
    with pytest.raises(ValueError):
        coupling_transition_check(Span(0, 0), Fraction(1, 2), 8)
