import numpy as np
import pytest

from otrlab.greedy import total_cost
from otrlab.instance import InputSequence, NetworkSpec, derive_seed, sample_sequence
from otrlab.offline import Assignment, opt_fractional
from otrlab.online import (
    capacity_breaches,
    expected_cost,
    quantile_arc,
    quantile_arcs,
    route_online,
    user_uniforms,
)
from otrlab.scenario import TdPolicy, TiPolicy, violation_check

THETAS = (1.0, 9.0, 20.0)


def ti(probs, alpha=1.0):
    return TiPolicy(THETAS, np.asarray(probs, dtype=float), alpha)


def test_worked_example_quantile():
    assert quantile_arc([0.5, 0.5], 0.6) == 1
    assert quantile_arc([0.5, 0.5], 0.5) == 1  # ranges are half-open
    assert quantile_arc([0.5, 0.5], 0.4999) == 0


def test_degenerate_distribution():
    for u in (0.0, 0.3, 0.999999):
        assert quantile_arc([1.0, 0.0, 0.0], u) == 0


def test_zero_probability_arcs_never_chosen():
    P = np.tile([0.3, 0.0, 0.7], (1000, 1))
    u = np.linspace(0, 1, 1000, endpoint=False)
    assert 1 not in set(quantile_arcs(P, u).tolist())


def test_rounding_slack_falls_back_to_last_positive_arc():
    # cumulative sum stops short of 1; a draw above it must not pick the zero arc
    P = np.array([[0.3, 0.7 - 1e-15, 0.0]])
    assert quantile_arcs(P, np.array([1.0 - 1e-16]))[0] == 1


def test_uniforms_depend_only_on_seed_and_index():
    a = user_uniforms(5, 100)
    b = user_uniforms(5, 50)
    assert np.array_equal(a[:50], b)
    assert not np.array_equal(a, user_uniforms(6, 100))


def test_route_online_deterministic(highway):
    seq = sample_sequence(highway.profile, 120, 3)
    pol = ti([[0.2, 0.3, 0.5], [0.5, 0.5, 0.0], [1.0, 0.0, 0.0]])
    a = route_online(pol, highway.network, seq, 11)
    b = route_online(pol, highway.network, seq, 11)
    assert a.mode == "integral" and np.array_equal(a.x, b.x)
    # users with theta = 20 always take arc 1
    assert np.all(a.arcs[seq.theta_array == 20.0] == 0)


def test_td_single_interval_matches_ti(highway):
    seq = sample_sequence(highway.profile, 120, 4)
    pol = ti([[0.2, 0.3, 0.5], [0.5, 0.25, 0.25], [0.9, 0.1, 0.0]])
    for seed in range(5):
        a = route_online(pol, highway.network, seq, seed)
        b = route_online(pol.as_td(), highway.network, seq, seed)
        assert np.array_equal(a.x, b.x)


def test_td_lookup_uses_interval(highway):
    probs = np.zeros((2, 3, 3))
    probs[0, :, 0] = 1.0
    probs[1, :, 2] = 1.0
    pol = TdPolicy(THETAS, (0.0, 10.0), probs, 1.0)
    seq = sample_sequence(highway.profile, 60, 1)
    arcs = route_online(pol, highway.network, seq, 0).arcs
    assert np.array_equal(arcs, np.where(seq.tau_array < 10.0, 0, 2))


def test_unknown_theta_rejected(highway):
    seq = InputSequence((0.0, 1.0), (1.0, 5.0), (1.0, 5.0))
    pol = ti(np.full((3, 3), 1 / 3))
    with pytest.raises(ValueError):
        route_online(pol, highway.network, seq, 0)
    with pytest.raises(ValueError):
        expected_cost(pol, highway.network, seq)


def test_td_rejects_arrival_before_first_interval():
    from otrlab.scenario import interval_index

    with pytest.raises(ValueError):
        interval_index(np.array([-1.0, 2.0]), (0.0, 5.0))


def test_expected_cost_examples():
    net = NetworkSpec((20.0, 24.0), (5, 5))
    one = InputSequence((0.0,), (1.0,), (1.0,))
    pol = TiPolicy((1.0,), np.array([[0.5, 0.5]]), 1.0)
    assert expected_cost(pol, net, one) == 22.0
    pure = TiPolicy((1.0,), np.array([[1.0, 0.0]]), 1.0)
    seq = InputSequence((0.0, 1.0, 2.0), (1.0, 1.0, 1.0), (1.0,))
    assert expected_cost(pure, net, seq) == total_cost(Assignment.from_arcs([0, 0, 0], 2), net, seq)


def test_allocation_frequencies_match_policy():
    probs = np.array([[0.2, 0.3, 0.5], [0.5, 0.25, 0.25], [0.05, 0.9, 0.05]])
    pol = ti(probs)
    n = 100_000
    rng = np.random.default_rng(0)
    theta = rng.choice(THETAS, size=n)
    seq = InputSequence(tuple(np.arange(n, dtype=float)), tuple(theta), THETAS)
    net = NetworkSpec((1.0, 2.0, 3.0), (n, n, n))
    arcs = route_online(pol, net, seq, 2024).arcs
    for g, th in enumerate(THETAS):
        freq = np.bincount(arcs[theta == th], minlength=3) / np.sum(theta == th)
        assert np.all(np.abs(freq - probs[g]) <= 0.01)


def monte_carlo_gap(policy, network, sequence, n_seeds=10_000):
    costs = [total_cost(route_online(policy, network, sequence, s), network, sequence) for s in range(n_seeds)]
    exp = expected_cost(policy, network, sequence)
    return abs(np.mean(costs) - exp) / exp


def test_monte_carlo_matches_expected_cost(highway):
    seq = sample_sequence(highway.profile, 120, derive_seed(1, 0))
    pol = ti([[0.0, 0.0, 1.0], [0.35, 0.28, 0.37], [0.44, 0.56, 0.0]])
    assert monte_carlo_gap(pol, highway.network, seq, 2000) <= 0.01


def test_expected_cost_within_alpha_when_no_violation(highway):
    seq = sample_sequence(highway.profile, 120, 9)
    opt = opt_fractional(highway.network, seq).value
    pol = ti([[0.0, 0.0, 1.0], [0.3, 0.3, 0.4], [0.45, 0.55, 0.0]], alpha=5.0)
    violated, _ = violation_check(pol, 5.0, highway.network, seq, opt)
    if not violated:
        assert expected_cost(pol, highway.network, seq) <= 5.0 * opt + 1e-9


def test_capacity_breaches_are_reported():
    net = NetworkSpec((5.0, 6.0), (1, 1))
    seq = InputSequence.uniform_vot([0.0, 1.0, 2.0])
    br = capacity_breaches(Assignment.from_arcs([0, 0, 1], 2), net, seq)
    assert br == [(0, 1, 2.0), (0, 2, 2.0)]
    assert capacity_breaches(Assignment.from_arcs([0, 1, 1], 2), net, seq) == [(1, 2, 2.0)]


def test_policy_arc_count_must_match(highway):
    pol = TiPolicy(THETAS, np.full((3, 2), 0.5), 1.0)
    with pytest.raises(ValueError):
        route_online(pol, highway.network, sample_sequence(highway.profile, 5, 0), 0)
