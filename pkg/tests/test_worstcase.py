import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from criteria import check_three_arc, check_two_vot
from otrlab.greedy import greedy_route, total_cost
from otrlab.offline import opt_integral_bruteforce
from otrlab.worstcase import three_arc_bound, three_arc_instance, two_vot_instance, two_vot_ratio


def greedy_ratio(net, seq):
    return total_cost(greedy_route(net, seq), net, seq) / opt_integral_bruteforce(net, seq).value


def test_three_arc_instance_shape():
    net, seq, bound = three_arc_instance(130.0)
    assert net.travel_times == (5.0, 10.01, 130.0)
    assert net.capacities == (1, 1, 10)
    assert seq.tau == (0.0, 0.15, 5.2, 10.1)
    assert set(seq.theta) == {1.0}
    assert bound == pytest.approx(1 + 119.99 / 30.02, rel=1e-12)
    assert bound == pytest.approx(4.99700199866755, rel=1e-12)


def test_three_arc_bound_tends_to_one():
    assert three_arc_bound(10.01 + 1e-9) == pytest.approx(1.0, abs=1e-9)


def test_three_arc_rejects_small_t3():
    with pytest.raises(ValueError):
        three_arc_instance(10.01)
    with pytest.raises(ValueError):
        three_arc_instance(3.0)


def test_three_arc_greedy_path():
    net, seq, _ = three_arc_instance(130.0)
    assert greedy_route(net, seq).arcs.tolist() == [0, 1, 0, 2]
    assert opt_integral_bruteforce(net, seq).value == pytest.approx(2 * 5 + 2 * 10.01)


def test_three_arc_tightness():
    ok, detail = check_three_arc()
    assert ok, detail


def test_two_vot_pair():
    net, seq, bound = two_vot_instance(1.0, 20.0, 20.0, 24.0, 0.1)
    assert net.capacities == (1, 1)
    assert seq.tau == (0.0, 0.1) and seq.theta == (1.0, 20.0)
    assert bound == 500 / 424
    assert total_cost(greedy_route(net, seq), net, seq) == 500.0
    assert opt_integral_bruteforce(net, seq).value == 424.0


def test_two_vot_tightness():
    ok, detail = check_two_vot()
    assert ok, detail


def test_two_vot_ratio_values():
    assert two_vot_ratio(1, 1, 5, 10) == 1.0
    assert two_vot_ratio(1, 20, 20, 24) == 500 / 424
    assert two_vot_ratio(1, 1e9, 20, 24) == pytest.approx(24 / 20, rel=1e-6)


@pytest.mark.parametrize(
    "args",
    [(0, 1, 1, 2), (2, 1, 1, 2), (1, 2, 0, 2), (1, 2, 3, 2)],
)
def test_two_vot_preconditions(args):
    with pytest.raises(ValueError):
        two_vot_ratio(*args)


def test_two_vot_eps_range():
    with pytest.raises(ValueError):
        two_vot_instance(1, 2, 5, 6, 5.0)
    with pytest.raises(ValueError):
        two_vot_instance(1, 2, 5, 6, 0.0)


pos = st.floats(0.01, 100.0)


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, pos, st.floats(0.01, 100.0))
def test_two_vot_scale_invariance(a, b, c, d, s):
    lo, hi = sorted((a, b))
    t1, t2 = sorted((c, d))
    r = two_vot_ratio(lo, hi, t1, t2)
    assert two_vot_ratio(s * lo, s * hi, t1, t2) == pytest.approx(r, rel=1e-12)
    assert two_vot_ratio(lo, hi, s * t1, s * t2) == pytest.approx(r, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, pos, st.floats(0.0, 50.0))
def test_two_vot_monotone(a, b, c, d, bump):
    lo, hi = sorted((a, b))
    t1, t2 = sorted((c, d))
    r = two_vot_ratio(lo, hi, t1, t2)
    assert two_vot_ratio(lo, hi + bump, t1, t2) >= r - 1e-12
    assert two_vot_ratio(lo, hi, t1, t2 + bump) >= r - 1e-12


@settings(max_examples=60, deadline=None)
@given(
    st.floats(1.0, 50.0),
    st.floats(1.0, 50.0),
    st.floats(1.0, 30.0),
    st.floats(0.0, 30.0),
    st.floats(0.05, 0.95),
)
def test_generated_instances_tight_for_greedy(th_a, th_b, t1, dt, frac):
    lo, hi = sorted((th_a, th_b))
    net, seq, bound = two_vot_instance(lo, hi, t1, t1 + dt, frac * t1)
    assert greedy_ratio(net, seq) >= bound - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(10.02, 1e5))
def test_three_arc_instances_tight_for_greedy(t3):
    net, seq, bound = three_arc_instance(t3)
    assert greedy_ratio(net, seq) >= bound - 1e-9
