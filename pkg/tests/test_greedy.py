import numpy as np
import pytest

from criteria import dominance_outcomes, optimality_outcomes
from oracles import enumerate_feasible, fuzz_identical_vot, greedy_sim
from otrlab import kernels
from otrlab.greedy import (
    NoCapacityError,
    OccupancyTimeline,
    empirical_ratio,
    greedy_route,
    total_cost,
)
from otrlab.instance import InputSequence, NetworkSpec, derive_seed, sample_sequence
from otrlab.offline import Assignment, capacity_load


@pytest.fixture(scope="module")
def fuzz_cases():
    return fuzz_identical_vot(200, seed=1)


def test_greedy_optimal_whenever_it_completes(fuzz_cases):
    res = optimality_outcomes(fuzz_cases)
    assert "suboptimal" not in res
    assert res.count("optimal") >= 190


def test_greedy_dominates_arc_one_whenever_it_completes(fuzz_cases):
    res = dominance_outcomes(fuzz_cases)
    assert "dominated" not in res


@pytest.mark.parametrize(
    "tau, t",
    [
        ([0.0, 1.0, 3.0, 4.0], [1.0, 3.0]),  # departures coincide with arrivals
        ([0.0, 2.45, 6.42, 6.57], [3.0, 6.0]),  # generic times
    ],
)
def test_greedy_can_block_on_feasible_instance(tau, t):
    # greedy keeps arc 1 busy at the wrong moment; sending the first user to
    # arc 2 would have left room for everyone
    assert enumerate_feasible(tau, t, [1, 1]) != []
    net = NetworkSpec(tuple(t), (1, 1))
    with pytest.raises(NoCapacityError) as err:
        greedy_route(net, InputSequence.uniform_vot(tau))
    assert err.value.user == 3


def test_single_user():
    asg = greedy_route(NetworkSpec((5.0, 10.0), (1, 1)), InputSequence.uniform_vot([0.0]))
    assert asg.arcs.tolist() == [0] and asg.mode == "integral"


def test_two_vot_pair():
    net = NetworkSpec((20.0, 24.0), (1, 1))
    seq = InputSequence((0.0, 0.1), (1.0, 20.0), (1.0, 20.0))
    asg = greedy_route(net, seq)
    assert asg.arcs.tolist() == [0, 1]
    assert total_cost(asg, net, seq) == 500.0
    assert empirical_ratio(500.0, 424.0) == pytest.approx(1.1792452830188679)


def test_identical_users_reuse_arc_one():
    net = NetworkSpec((5.0, 10.01), (1, 1))
    seq = InputSequence.uniform_vot([0.0, 10.0, 10.001])
    asg = greedy_route(net, seq)
    assert asg.arcs.tolist() == [0, 0, 1]
    assert total_cost(asg, net, seq) == pytest.approx(20.01)


def test_departure_instant_blocks():
    # closed windows: a user arriving exactly at a departure sees the arc full
    net = NetworkSpec((5.0, 10.0), (1, 1))
    asg = greedy_route(net, InputSequence.uniform_vot([0.0, 5.0]))
    assert asg.arcs.tolist() == [0, 1]


def test_blocked_user_reported():
    net = NetworkSpec((5.0, 6.0), (1, 1))
    with pytest.raises(NoCapacityError) as err:
        greedy_route(net, InputSequence.uniform_vot([0.0, 1.0, 2.0]))
    assert err.value.user == 2


def test_matches_reference_simulation(highway):
    for k in range(10):
        seq = sample_sequence(highway.profile, 120, derive_seed(8, k))
        got = greedy_route(highway.network, seq).arcs.tolist()
        assert got == greedy_sim(seq.tau, highway.network.travel_times, highway.network.capacities)


def test_greedy_is_feasible_and_deterministic(highway):
    seq = sample_sequence(highway.profile, 120, 77)
    a = greedy_route(highway.network, seq)
    b = greedy_route(highway.network, seq)
    assert np.array_equal(a.x, b.x)
    assert np.all(capacity_load(a.x, highway.network, seq) <= highway.network.c[:, None])
    tl = OccupancyTimeline.from_assignment(a, highway.network, seq)
    for k, tau in enumerate(seq.tau):
        for arc in range(3):
            assert tl.count(arc, tau) <= highway.network.capacities[arc]
    assert tl.totals().tolist() == a.arc_counts().tolist()


def test_greedy_backends_agree(highway):
    seq = sample_sequence(highway.profile, 500, 3)
    a = kernels._greedy_arcs_nb(seq.tau_array, highway.network.t, highway.network.c)
    b = kernels._greedy_arcs_np(seq.tau_array, highway.network.t, highway.network.c)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_total_cost():
    net = NetworkSpec((20.0, 24.0), (5, 5))
    seq = InputSequence.uniform_vot([0.0, 1.0])
    assert total_cost(Assignment.from_arcs([0, 0], 2), net, seq) == 40.0
    one = InputSequence.uniform_vot([0.0])
    assert total_cost(Assignment(np.array([[0.5, 0.5]])), net, one) == 22.0
    with pytest.raises(ValueError):
        total_cost(np.ones((3, 2)) / 2, net, seq)


def test_empirical_ratio_edges():
    assert empirical_ratio(7.5, 7.5) == 1.0
    assert empirical_ratio(0.0, 5.0) == 0.0
    with pytest.raises(ValueError):
        empirical_ratio(1.0, 0.0)
