"""Online allocation from a learned policy by quantile-range rounding."""
from __future__ import annotations

import numpy as np

from . import kernels
from .instance import InputSequence, NetworkSpec, splitmix64
from .offline import Assignment, capacity_load, weighted_cost


def user_uniforms(seed: int, n: int) -> np.ndarray:
    """Uniform draw for each user index; depends only on ``(seed, i)``."""
    return kernels.hash_uniforms(np.uint64(splitmix64(seed)), n)


def quantile_arc(p, u: float) -> int:
    """Arc whose range ``[P_{a-1}, P_a)`` contains ``u``; the last range is closed at 1."""
    return int(quantile_arcs(np.asarray(p, dtype=float)[None, :], np.array([u]))[0])


def quantile_arcs(P: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(P, axis=1)
    arcs = (cum <= u[:, None]).sum(axis=1)
    # rounding in cumsum can leave u beyond the last edge; fall back to the
    # last arc that actually carries probability
    last = P.shape[1] - 1 - np.argmax((P > 0)[:, ::-1], axis=1)
    return np.minimum(arcs, last)


def route_online(policy, network: NetworkSpec, sequence: InputSequence, seed: int) -> Assignment:
    """Integral allocation that ignores occupancy, as the policy prescribes."""
    if policy.n_arcs != network.n_arcs:
        raise ValueError(f"policy has {policy.n_arcs} arcs, network {network.n_arcs}")
    P = policy.user_probs(sequence)
    arcs = quantile_arcs(P, user_uniforms(seed, sequence.n))
    return Assignment.from_arcs(arcs, network.n_arcs)


def expected_cost(policy, network: NetworkSpec, sequence: InputSequence) -> float:
    return weighted_cost(policy.user_probs(sequence), network, sequence)


def capacity_breaches(assignment: Assignment, network: NetworkSpec, sequence: InputSequence) -> list[tuple[int, int, float]]:
    """(arc, user, occupancy) for every arrival instant where occupancy exceeds capacity."""
    load = capacity_load(assignment.x, network, sequence)
    over = load > network.c[:, None] + 1e-9
    return [(int(a), int(k), float(load[a, k])) for a, k in zip(*np.nonzero(over))]
