"""Greedy online routing and cost/ratio evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .instance import InputSequence, NetworkSpec
from .offline import Assignment, weighted_cost


class NoCapacityError(RuntimeError):
    def __init__(self, user: int):
        super().__init__(f"no arc below capacity for user {user}")
        self.user = user


@dataclass
class OccupancyTimeline:
    """Closed windows ``[start, end]`` per arc, as (start, end, mass) triples."""

    windows: list[list[tuple[float, float, float]]]

    @classmethod
    def from_assignment(cls, assignment: Assignment, network: NetworkSpec, sequence: InputSequence):
        wins = [[] for _ in range(network.n_arcs)]
        for i, (tau, row) in enumerate(zip(sequence.tau, assignment.x)):
            for a in np.flatnonzero(row > 0):
                wins[a].append((tau, tau + network.travel_times[a], float(row[a])))
        return cls(wins)

    def count(self, arc: int, time: float) -> float:
        return sum(m for s, e, m in self.windows[arc] if s <= time <= e)

    def totals(self) -> np.ndarray:
        """Users (mass) ever routed on each arc."""
        return np.array([sum(m for _, _, m in w) for w in self.windows])


def greedy_route(network: NetworkSpec, sequence: InputSequence) -> Assignment:
    """Send each arrival to the cheapest arc that is below capacity at that instant."""
    arcs, blocked = kernels.greedy_arcs(sequence.tau_array, network.t, network.c)
    if blocked >= 0:
        raise NoCapacityError(int(blocked))
    return Assignment.from_arcs(arcs, network.n_arcs)


def total_cost(assignment: Assignment, network: NetworkSpec, sequence: InputSequence) -> float:
    x = assignment.x if isinstance(assignment, Assignment) else np.asarray(assignment, dtype=float)
    if x.shape != (sequence.n, network.n_arcs):
        raise ValueError(f"assignment shape {x.shape} != ({sequence.n}, {network.n_arcs})")
    return weighted_cost(x, network, sequence)


def empirical_ratio(alg_cost: float, opt_value: float) -> float:
    if not opt_value > 0:
        raise ValueError(f"offline optimum must be positive, got {opt_value}")
    return alg_cost / opt_value
