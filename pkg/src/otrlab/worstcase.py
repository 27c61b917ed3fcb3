"""Adversarial instances on which greedy routing is provably suboptimal.

Both constructions are tight for greedy: its ratio against the integral
offline optimum equals the closed-form bound returned alongside the instance.
"""
from __future__ import annotations

from .instance import InputSequence, NetworkSpec

THREE_ARC_T1 = 5.0
THREE_ARC_T2 = 10.01
THREE_ARC_ARRIVALS = (0.0, 0.15, 5.2, 10.1)


def three_arc_bound(t3: float, t1: float = THREE_ARC_T1, t2: float = THREE_ARC_T2) -> float:
    return 1.0 + (t3 - t2) / (2 * t1 + 2 * t2)


def three_arc_instance(t3: float):
    """Three arcs ``t = [5, 10.01, t3]``, ``c = [1, 1, 10]``, four unit-VOT users.

    Greedy puts the first user on arc 1, after which the arrivals force the
    last user onto arc 3 (cost ``2 t1 + t2 + t3``), while the optimum swaps
    the first two users and pays ``2 t1 + 2 t2``.  Only this branch of the
    adversary is generated; the other branches target algorithms that do not
    start on arc 1.
    """
    if not t3 > THREE_ARC_T2:
        raise ValueError(f"t3 must exceed {THREE_ARC_T2}, got {t3}")
    net = NetworkSpec((THREE_ARC_T1, THREE_ARC_T2, float(t3)), (1, 1, 10))
    seq = InputSequence.uniform_vot(THREE_ARC_ARRIVALS, 1.0)
    return net, seq, three_arc_bound(t3)


def _check_two_vot(theta_lo, theta_hi, t1, t2):
    if not 0 < theta_lo <= theta_hi:
        raise ValueError("need 0 < theta_lo <= theta_hi")
    if not 0 < t1 <= t2:
        raise ValueError("need 0 < t1 <= t2")


def two_vot_ratio(theta_lo: float, theta_hi: float, t1: float, t2: float) -> float:
    """Greedy's ratio when a cheap user takes the fast arc just before an expensive one."""
    _check_two_vot(theta_lo, theta_hi, t1, t2)
    return (theta_hi * t2 + theta_lo * t1) / (theta_hi * t1 + theta_lo * t2)


def two_vot_instance(theta_lo: float, theta_hi: float, t1: float, t2: float, eps: float):
    _check_two_vot(theta_lo, theta_hi, t1, t2)
    if not 0 < eps < t1:
        raise ValueError("need 0 < eps < t1")
    net = NetworkSpec((float(t1), float(t2)), (1, 1))
    alphabet = tuple(sorted({float(theta_lo), float(theta_hi)}))
    seq = InputSequence((0.0, float(eps)), (float(theta_lo), float(theta_hi)), alphabet)
    return net, seq, two_vot_ratio(theta_lo, theta_hi, t1, t2)
