"""Offline optimum: the fractional LP relaxation and an exhaustive integral oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .instance import InputSequence, NetworkSpec, window_matrix
from .lp import LinearProgram, solve

MAX_BRUTEFORCE_USERS = 12


@dataclass
class Assignment:
    """Row ``i`` of ``x`` is user i's distribution over arcs."""

    x: np.ndarray
    mode: str = "fractional"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 2:
            raise ValueError("assignment matrix must be 2-d (users x arcs)")
        if self.mode not in ("integral", "fractional"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.x.size and (np.any(self.x < -1e-9) or np.any(np.abs(self.x.sum(axis=1) - 1.0) > 1e-9)):
            raise ValueError("every row must be a probability vector")
        if self.mode == "integral" and not np.all((self.x == 0.0) | (self.x == 1.0)):
            raise ValueError("integral assignment with non-binary entries")

    @classmethod
    def from_arcs(cls, arcs, n_arcs: int) -> Assignment:
        arcs = np.asarray(arcs, dtype=np.int64)
        x = np.zeros((arcs.size, n_arcs))
        x[np.arange(arcs.size), arcs] = 1.0
        return cls(x, "integral")

    @property
    def arcs(self) -> np.ndarray:
        """Arc index per user (integral mode), else the modal arc."""
        return np.argmax(self.x, axis=1)

    @property
    def n_users(self) -> int:
        return self.x.shape[0]

    def arc_counts(self) -> np.ndarray:
        return self.x.sum(axis=0)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "x": self.x.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Assignment:
        return cls(np.array(d["x"], dtype=float), d["mode"])


@dataclass
class OptResult:
    value: float
    assignment: Assignment | None
    status: str

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "status": self.status,
            "assignment": None if self.assignment is None else self.assignment.x.tolist(),
        }


def weighted_cost(x: np.ndarray, network: NetworkSpec, sequence: InputSequence) -> float:
    return float(sequence.theta_array @ (np.asarray(x) @ network.t))


def capacity_load(x: np.ndarray, network: NetworkSpec, sequence: InputSequence) -> np.ndarray:
    """Occupancy at every arrival instant: shape (n_arcs, n_users)."""
    tau = sequence.tau_array
    x = np.asarray(x, dtype=float)
    return np.stack([window_matrix(tau, t) @ x[:, a] for a, t in enumerate(network.travel_times)])


def is_feasible(x, network: NetworkSpec, sequence: InputSequence, tol: float = 1e-9) -> bool:
    load = capacity_load(x, network, sequence)
    return bool(np.all(load <= network.c[:, None] + tol))


def build_fractional_lp(network: NetworkSpec, sequence: InputSequence) -> LinearProgram:
    """Relaxed routing LP; variable ``i * M + a`` is ``x_{ia}``.

    Rows: ``n`` assignment equalities, then for each arc (outer) and each
    arrival instant (inner) one capacity row.  Occupancy is piecewise
    constant between arrivals, so checking at arrival instants suffices.
    """
    n, M = sequence.n, network.n_arcs
    tau = sequence.tau_array
    c = np.outer(sequence.theta_array, network.t).ravel()
    A_eq = np.kron(np.eye(n), np.ones((1, M)))
    blocks = []
    for a in range(M):
        W = window_matrix(tau, network.travel_times[a])
        rows = np.zeros((n, n * M))
        rows[:, a::M] = W
        blocks.append(rows)
    A = np.vstack([A_eq] + blocks)
    senses = ["=="] * n + ["<="] * (n * M)
    b = np.concatenate([np.ones(n), np.repeat(network.c.astype(float), n)])
    return LinearProgram(c, A, senses, b)


def _binding_capacity_rows(network: NetworkSpec, sequence: InputSequence) -> np.ndarray:
    """Indices of capacity rows in :func:`build_fractional_lp` worth keeping.

    The window at instant k is the user range [lo_k, k] with lo nondecreasing,
    so row k is implied by row k+1 whenever lo_k == lo_{k+1}; rows whose
    window holds at most c_a users are implied by the equalities.
    """
    n = sequence.n
    tau = sequence.tau_array
    keep = []
    for a, (t, cap) in enumerate(zip(network.travel_times, network.capacities)):
        lo = np.searchsorted(tau + t, tau, side="left")
        size = np.arange(n) - lo + 1
        last = np.ones(n, dtype=bool)
        last[:-1] = lo[:-1] != lo[1:]
        keep.append(n + a * n + np.flatnonzero(last & (size > cap)))
    return np.concatenate(keep)


def opt_fractional(network: NetworkSpec, sequence: InputSequence) -> OptResult:
    """Optimal value of the relaxed routing LP (a lower bound on the integral optimum)."""
    lp = build_fractional_lp(network, sequence)
    n, M = sequence.n, network.n_arcs
    rows = np.concatenate([np.arange(n), _binding_capacity_rows(network, sequence)])
    sol = solve(lp.subset(rows))
    if not sol.optimal:
        return OptResult(np.nan, None, sol.status)
    x = np.clip(sol.x.reshape(n, M), 0.0, None)
    x /= x.sum(axis=1, keepdims=True)
    return OptResult(weighted_cost(x, network, sequence), Assignment(x, "fractional"), "optimal")


def opt_integral_bruteforce(network: NetworkSpec, sequence: InputSequence) -> OptResult:
    """Exact integral optimum by exhaustive search (``n <= 12``)."""
    n = sequence.n
    if n > MAX_BRUTEFORCE_USERS:
        raise ValueError(f"brute force limited to {MAX_BRUTEFORCE_USERS} users, got {n}")
    best, arcs = kernels.bruteforce_arcs(
        sequence.tau_array, sequence.theta_array, network.t, network.c
    )
    if not np.isfinite(best):
        return OptResult(np.nan, None, "infeasible")
    asg = Assignment.from_arcs(arcs, network.n_arcs)
    return OptResult(weighted_cost(asg.x, network, sequence), asg, "optimal")
