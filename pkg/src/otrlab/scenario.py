"""Scenario-program learning of allocation policies and their risk bounds.

A policy assigns every user *class* a distribution over arcs.  For the
time-independent (TI) policy the class is the user's value of time; for the
time-dependent (TD) policy it is the pair (arrival interval, value of time).
Both learning problems are the same LP over the variable vector

    [alpha, p[class 0, arc 0], ..., p[class 0, arc M-1], p[class 1, arc 0], ...]

with, per training instance k, one ratio row ``cost_k(p) / OPT_k <= alpha``
and one capacity row per (arc, arrival instant).  A capacity row only sees
how many users of each class sit in the window, so the rows are stored as
class-count vectors, deduplicated across instances, and fed to the
active-set driver in :mod:`otrlab.lp`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .instance import InputSequence, NetworkSpec
from .lp import LinearProgram, lexicographic_active_set, solve_active_set, LE, EQ
from .offline import capacity_load, weighted_cost

SUPPORT_TOL = 1e-7
VIOLATION_TOL = 1e-9


class LearningError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------


def _theta_key(v: float) -> str:
    return repr(float(v))


@dataclass
class TiPolicy:
    thetas: tuple[float, ...]
    probs: np.ndarray  # (|Theta|, M)
    alpha_star: float
    degenerate: bool = False

    kind = "TI"

    @property
    def boundaries(self) -> tuple[float, ...]:
        return (0.0,)

    @property
    def n_arcs(self) -> int:
        return self.probs.shape[-1]

    def user_probs(self, sequence: InputSequence) -> np.ndarray:
        """Per-user allocation probabilities, shape (n, M)."""
        return self.probs[_vot_index(sequence, self.thetas)]

    def as_td(self, boundaries: Sequence[float] = (0.0,)) -> TdPolicy:
        q = len(boundaries)
        return TdPolicy(self.thetas, tuple(boundaries), np.repeat(self.probs[None], q, axis=0), self.alpha_star)

    def to_dict(self) -> dict:
        return {
            "kind": "TI",
            "theta": list(self.thetas),
            "boundaries": [0.0],
            "probs": {_theta_key(th): self.probs[g].tolist() for g, th in enumerate(self.thetas)},
            "alpha_star": self.alpha_star,
            "degenerate": self.degenerate,
        }


@dataclass
class TdPolicy:
    thetas: tuple[float, ...]
    boundaries: tuple[float, ...]
    probs: np.ndarray  # (q, |Theta|, M)
    alpha_star: float
    degenerate: bool = False

    kind = "TD"

    def __post_init__(self):
        b = self.boundaries
        if not b or b[0] != 0.0 or any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("interval boundaries must start at 0 and increase strictly")

    @property
    def n_arcs(self) -> int:
        return self.probs.shape[-1]

    def user_probs(self, sequence: InputSequence) -> np.ndarray:
        j = interval_index(sequence.tau_array, self.boundaries)
        return self.probs[j, _vot_index(sequence, self.thetas)]

    def to_dict(self) -> dict:
        return {
            "kind": "TD",
            "theta": list(self.thetas),
            "boundaries": list(self.boundaries),
            "probs": {
                _theta_key(th): self.probs[:, g].tolist() for g, th in enumerate(self.thetas)
            },
            "alpha_star": self.alpha_star,
            "degenerate": self.degenerate,
        }


def policy_from_dict(d: dict) -> TiPolicy | TdPolicy:
    thetas = tuple(float(v) for v in d["theta"])
    if d["kind"] == "TI":
        probs = np.array([d["probs"][_theta_key(th)] for th in thetas], dtype=float)
        return TiPolicy(thetas, probs, float(d["alpha_star"]), bool(d.get("degenerate", False)))
    if d["kind"] == "TD":
        probs = np.array([d["probs"][_theta_key(th)] for th in thetas], dtype=float)
        return TdPolicy(
            thetas,
            tuple(float(v) for v in d["boundaries"]),
            np.transpose(probs, (1, 0, 2)).copy(),
            float(d["alpha_star"]),
            bool(d.get("degenerate", False)),
        )
    raise ValueError(f"unknown policy kind {d['kind']!r}")


def save_policy(policy, path):
    with open(path, "w") as fh:
        json.dump(policy.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_policy(path):
    with open(path) as fh:
        return policy_from_dict(json.load(fh))


def interval_index(tau: np.ndarray, boundaries: Sequence[float]) -> np.ndarray:
    """Index j with ``boundaries[j] <= tau < boundaries[j+1]``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < boundaries[0]):
        raise ValueError("arrival before the first interval")
    return np.searchsorted(np.asarray(boundaries, dtype=float), tau, side="right") - 1


def _vot_index(sequence: InputSequence, thetas: Sequence[float]) -> np.ndarray:
    lookup = {float(v): g for g, v in enumerate(thetas)}
    try:
        return np.array([lookup[v] for v in sequence.theta], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"value of time {exc.args[0]} unknown to the policy") from None


# ---------------------------------------------------------------------------
# scenario program
# ---------------------------------------------------------------------------


class ScenarioProgram:
    """The learning LP for one training set and one class map."""

    def __init__(self, network: NetworkSpec, training, opts, thetas, boundaries=None):
        training = list(training)
        opts = np.asarray(opts, dtype=float)
        if not training:
            raise ValueError("empty training set")
        if len(training) != opts.size:
            raise ValueError("need exactly one OPT value per training instance")
        if np.any(~(opts > 0)):
            raise ValueError("OPT values must be positive")
        self.network = network
        self.thetas = tuple(float(v) for v in thetas)
        self.boundaries = None if boundaries is None else tuple(float(v) for v in boundaries)
        q = 1 if boundaries is None else len(boundaries)
        self.q = q
        self.K = len(training)
        M = network.n_arcs
        self.M = M
        self.G = q * len(self.thetas)
        self.n_vars = 1 + self.G * M
        t = network.t

        self.ratio_A = np.zeros((self.K, self.n_vars))
        self.ratio_A[:, 0] = -1.0
        cap_rows, cap_rhs, cap_group = [], [], []
        self.n_users = []
        for k, (seq, opt) in enumerate(zip(training, opts)):
            cls = self.classes(seq)
            theta = seq.theta_array
            w = np.bincount(cls, weights=theta, minlength=self.G)
            self.ratio_A[k, 1:] = np.outer(w, t).ravel() / opt
            rows = self._capacity_rows(seq, cls)
            cap_rows.append(rows)
            cap_rhs.append(np.repeat(network.c.astype(float), seq.n))
            cap_group.append(np.full(rows.shape[0], k))
            self.n_users.append(seq.n)
        self.cap_A = np.vstack(cap_rows)
        self.cap_b = np.concatenate(cap_rhs)
        self.cap_group = np.concatenate(cap_group)

        self.eq_A = np.zeros((self.G, self.n_vars))
        for g in range(self.G):
            self.eq_A[g, 1 + g * M : 1 + (g + 1) * M] = 1.0

        # deduplicated pool of capacity rows that can bind
        nontrivial = self.cap_A.sum(axis=1) > self.cap_b
        keys = np.hstack([self.cap_A[nontrivial], self.cap_b[nontrivial, None]])
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        self.pool_A = uniq[:, :-1]
        self.pool_b = uniq[:, -1]
        owners = np.zeros((uniq.shape[0], self.K), dtype=bool)
        owners[inverse, self.cap_group[nontrivial]] = True
        self.pool_owners = owners

        self.secondary = np.zeros(self.n_vars)
        self.secondary[1:] = np.tile(np.arange(1, M + 1, dtype=float), self.G)
        self.objective = np.zeros(self.n_vars)
        self.objective[0] = 1.0

    def classes(self, seq: InputSequence) -> np.ndarray:
        v = _vot_index(seq, self.thetas)
        if self.boundaries is None:
            return v
        j = interval_index(seq.tau_array, self.boundaries)
        return j * len(self.thetas) + v

    def _capacity_rows(self, seq: InputSequence, cls: np.ndarray) -> np.ndarray:
        # window at instant l is the user range [lo_l, l]; class counts come
        # from prefix sums
        n, M, G = seq.n, self.M, self.G
        tau = seq.tau_array
        onehot = np.zeros((n + 1, G))
        onehot[np.arange(1, n + 1), cls] = 1.0
        prefix = np.cumsum(onehot, axis=0)
        out = np.zeros((M * n, self.n_vars))
        for a, t in enumerate(self.network.travel_times):
            lo = np.searchsorted(tau + t, tau, side="left")
            counts = prefix[np.arange(1, n + 1)] - prefix[lo]
            out[a * n : (a + 1) * n, 1 + a :: M] = counts
        return out

    def to_lp(self) -> LinearProgram:
        """The full program with every row materialised, grouped by instance."""
        A = np.vstack([self.eq_A, self.ratio_A, self.cap_A])
        senses = np.concatenate(
            [np.full(self.G, EQ), np.full(self.K, LE), np.full(self.cap_A.shape[0], LE)]
        ).astype(np.int8)
        b = np.concatenate([np.ones(self.G), np.zeros(self.K), self.cap_b])
        groups = np.concatenate([np.full(self.G, -1), np.arange(self.K), self.cap_group])
        return LinearProgram(self.objective, A, senses, b, groups=groups)

    def _reduced_lp(self, exclude: int | None):
        keep_ratio = np.ones(self.K, dtype=bool)
        keep_pool = np.ones(self.pool_b.size, dtype=bool)
        if exclude is not None:
            keep_ratio[exclude] = False
            others = self.pool_owners.copy()
            others[:, exclude] = False
            keep_pool = others.any(axis=1)
        ratio_idx = np.flatnonzero(keep_ratio)
        pool_idx = np.flatnonzero(keep_pool)
        A = np.vstack([self.eq_A, self.ratio_A[ratio_idx], self.pool_A[pool_idx]])
        m_eq, m_r = self.G, ratio_idx.size
        senses = np.concatenate(
            [np.full(m_eq, EQ), np.full(m_r + pool_idx.size, LE)]
        ).astype(np.int8)
        b = np.concatenate([np.ones(m_eq), np.zeros(m_r), self.pool_b[pool_idx]])
        lp = LinearProgram(self.objective, A, senses, b)
        lazy = np.ones(lp.n_rows, dtype=bool)
        lazy[:m_eq] = False
        # row ids: ratio rows -> k, pool rows -> K + pool index
        ids = np.concatenate([np.full(m_eq, -1), ratio_idx, self.K + pool_idx])
        return lp, lazy, ids

    def solve(self, exclude: int | None = None, warm: np.ndarray | None = None):
        """Lexicographic optimum, optionally without instance ``exclude``.

        ``warm`` holds row ids (see ``_reduced_lp``) to seed the working set.
        Returns ``(x, active_ids)``.
        """
        lp, lazy, ids = self._reduced_lp(exclude)
        if warm is None:
            first = 0 if exclude != 0 else 1
            warm = np.concatenate([[first], self.K + np.flatnonzero(self.pool_owners[:, first])])
        initial = np.flatnonzero(np.isin(ids, warm))
        sol = lexicographic_active_set(lp, lazy, self.secondary, initial=initial, max_add=200)
        if not sol.optimal:
            raise LearningError(f"scenario LP is {sol.status}")
        return sol.x, ids[sol.active_rows]

    def polish(self, x: np.ndarray, exclude: int | None = None) -> tuple[np.ndarray, float]:
        """Project p back onto the simplices and recompute alpha exactly.

        Alpha is the worst ratio over the instances kept in the program, so
        ``exclude`` must match the one passed to :meth:`solve`.
        """
        p = np.clip(x[1:].reshape(self.G, self.M), 0.0, None)
        p /= p.sum(axis=1, keepdims=True)
        ratios = self.ratio_A[:, 1:] @ p.ravel()
        if exclude is not None:
            ratios = np.delete(ratios, exclude)
        alpha = float(np.max(ratios)) if ratios.size else 0.0
        return p, alpha

    def is_degenerate(self, x: np.ndarray) -> bool:
        """Probe whether the lexicographic optimum is still a non-singleton face."""
        lp, lazy, _ = self._reduced_lp(None)
        z1 = float(self.objective @ x)
        z2 = float(self.secondary @ x)
        pinned = lp.add_rows(
            np.vstack([self.objective, self.secondary]),
            "<=",
            [z1 + 1e-9 * max(1.0, abs(z1)), z2 + 1e-9 * max(1.0, abs(z2))],
        )
        lazy2 = np.concatenate([lazy, [False, False]])
        probe = np.cos(np.arange(self.n_vars) * 1.618033988749895)
        lo = solve_active_set(pinned, lazy2, objective=probe, max_add=200)
        hi = solve_active_set(pinned, lazy2, objective=-probe, max_add=200)
        return bool(np.max(np.abs(lo.x - hi.x)) > SUPPORT_TOL)


def _alphabet(training) -> tuple[float, ...]:
    seen = set()
    for seq in training:
        seen.update(seq.vot_alphabet)
    return tuple(sorted(seen))


def build_ti_lp(network: NetworkSpec, training, opts) -> LinearProgram:
    return ScenarioProgram(network, training, opts, _alphabet(training)).to_lp()


def build_td_lp(network: NetworkSpec, training, opts, boundaries) -> LinearProgram:
    return ScenarioProgram(network, training, opts, _alphabet(training), boundaries).to_lp()


def _learn(prog: ScenarioProgram, check_degenerate: bool):
    x, active = prog.solve()
    p, alpha = prog.polish(x)
    degenerate = prog.is_degenerate(x) if check_degenerate else False
    return p, alpha, degenerate, active


def learn_ti(network: NetworkSpec, training, opts, check_degenerate: bool = True) -> TiPolicy:
    prog = ScenarioProgram(network, training, opts, _alphabet(training))
    p, alpha, degen, _ = _learn(prog, check_degenerate)
    return TiPolicy(prog.thetas, p, alpha, degen)


def learn_td(network: NetworkSpec, training, opts, boundaries, check_degenerate: bool = True) -> TdPolicy:
    prog = ScenarioProgram(network, training, opts, _alphabet(training), boundaries)
    p, alpha, degen, _ = _learn(prog, check_degenerate)
    return TdPolicy(prog.thetas, tuple(prog.boundaries), p.reshape(prog.q, len(prog.thetas), prog.M), alpha, degen)


def support_constraints(network: NetworkSpec, training, opts, policy_kind: str = "TI", boundaries=None) -> list[int]:
    """Training instances whose removal changes the lexicographic optimum."""
    kind = policy_kind.upper()
    if kind == "TD" and boundaries is None:
        raise ValueError("TD support counting needs interval boundaries")
    prog = ScenarioProgram(network, training, opts, _alphabet(training), boundaries if kind == "TD" else None)
    x_full, active = prog.solve()
    p_full, a_full = prog.polish(x_full)
    support = []
    for k in range(prog.K):
        owned_only_by_k = prog.pool_owners[:, k] & (prog.pool_owners.sum(axis=1) == 1)
        touches = (active == k) | np.isin(active - prog.K, np.flatnonzero(owned_only_by_k))
        if not touches.any():
            # no active row of k was needed; the optimum survives its removal
            continue
        x, _ = prog.solve(exclude=k, warm=active)
        p, a = prog.polish(x, exclude=k)
        if abs(a - a_full) > SUPPORT_TOL * max(1.0, a_full) or np.max(np.abs(p - p_full)) > SUPPORT_TOL:
            support.append(k)
    return support


def count_support_constraints(network: NetworkSpec, training, opts, policy_kind: str = "TI", boundaries=None) -> int:
    return len(support_constraints(network, training, opts, policy_kind, boundaries))


# ---------------------------------------------------------------------------
# risk bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskInterval:
    eps_lower: float
    eps_upper: float
    support_count: int
    beta: float
    n_samples: int
    beta_split: str = "pooled"

    def contains(self, v: float) -> bool:
        return self.eps_lower <= v <= self.eps_upper

    def to_dict(self) -> dict:
        return {
            "eps_lower": self.eps_lower,
            "eps_upper": self.eps_upper,
            "support_count": self.support_count,
            "beta": self.beta,
            "n_samples": self.n_samples,
            "beta_split": self.beta_split,
        }


def risk_coefficients(K: int, k: int, beta: float, beta_split: str = "pooled"):
    """Log-magnitudes and exponents of the risk polynomial's terms.

    Returns ``(log_pos, exp_pos, log_neg, exp_neg)``: the single positive
    term ``C(K, k) t^(K-k)`` and the negative terms
    ``w1 C(i, k) t^(i-k)`` for ``i = k..K-1`` and ``w2 C(i, k) t^(i-k)`` for
    ``i = K+1..4K``.  With ``beta_split="per-sample"`` the weights are
    ``beta/(2K)`` and ``beta/(6K)``; with ``"pooled"`` they are ``beta/2``
    and ``beta/6``.
    """
    if beta_split == "per-sample":
        w1, w2 = beta / (2 * K), beta / (6 * K)
    elif beta_split == "pooled":
        w1, w2 = beta / 2, beta / 6
    else:
        raise ValueError(f"unknown beta_split {beta_split!r}")
    lgam = math.lgamma

    def lbinom(n, r):
        return lgam(n + 1) - lgam(r + 1) - lgam(n - r + 1)

    i1 = np.arange(k, K)
    i2 = np.arange(K + 1, 4 * K + 1)
    lb1 = np.array([lbinom(int(i), k) for i in i1])
    lb2 = np.array([lbinom(int(i), k) for i in i2])
    log_neg = np.concatenate([math.log(w1) + lb1, math.log(w2) + lb2])
    exp_neg = np.concatenate([i1 - k, i2 - k]).astype(float)
    return lbinom(K, k), float(K - k), log_neg, exp_neg


def _log_gap(log_t, coef):
    """log(positive term) - log(sum of negative terms) at ``t = exp(log_t)``."""
    log_pos, exp_pos, log_neg, exp_neg = coef
    terms = log_neg + exp_neg * log_t
    m = terms.max()
    return log_pos + exp_pos * log_t - (m + math.log(np.exp(terms - m).sum()))


def risk_interval(K: int, s_star: int, beta: float, d: int, beta_split: str = "pooled") -> RiskInterval:
    """Two-sided risk bounds from the support count ``s_star``.

    The polynomial is negative at t -> 0+ and t -> inf and positive between
    its two nonnegative roots ``t_lo <= t_hi``; the bounds are
    ``eps_upper = 1 - t_lo`` and ``eps_lower = max(0, 1 - t_hi)``.  The sign
    is evaluated in log space; each root is bisected for 200 steps.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if K <= d:
        raise ValueError(f"need more samples than decision variables (K={K}, d={d})")
    if not 0 <= s_star <= K:
        raise ValueError("support count outside [0, K]")
    t_lo, t_hi = risk_roots(K, s_star, beta, beta_split)
    return RiskInterval(
        eps_lower=max(0.0, 1.0 - t_hi),
        eps_upper=min(1.0, 1.0 - t_lo),
        support_count=s_star,
        beta=beta,
        n_samples=K,
        beta_split=beta_split,
    )


def risk_roots(K: int, k: int, beta: float, beta_split: str = "pooled") -> tuple[float, float]:
    coef = risk_coefficients(K, k, beta, beta_split)
    gap = lambda t: _log_gap(math.log(t), coef)  # noqa: E731
    # locate an interior point where the polynomial is positive
    grid = np.linspace(0.0, 2.0, 4001)[1:]
    vals = np.array([gap(t) for t in grid])
    j = int(np.argmax(vals))
    if vals[j] <= 0.0:
        raise ArithmeticError(f"risk polynomial has no positive region for k={k}, K={K}")
    t_mid = float(grid[j])

    def bisect(a, b, a_positive):
        for _ in range(200):
            mid = 0.5 * (a + b)
            if (gap(mid) > 0.0) == a_positive:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    if k >= K:
        t_lo = 0.0  # constant term is positive, so the lower root sits at 0
    else:
        t_lo = bisect(0.0, t_mid, False) if gap(1e-300) <= 0.0 else 0.0
    hi = max(2.0 * t_mid, 1.0)
    while gap(hi) > 0.0:
        hi *= 2.0
    t_hi = bisect(t_mid, hi, True)
    return t_lo, t_hi


# ---------------------------------------------------------------------------
# out-of-sample constraint checks
# ---------------------------------------------------------------------------


@dataclass
class ViolationDetails:
    ratio: float
    ratio_violated: bool
    capacity_breaches: list[tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "ratio_violated": self.ratio_violated,
            "capacity_breaches": [list(b) for b in self.capacity_breaches],
        }


def violation_check(policy, alpha_ref: float, network: NetworkSpec, sequence: InputSequence, opt_value: float):
    """Does ``sequence`` violate the policy's ratio row or any capacity row?

    The ratio row is checked in the normalised form used by the learner,
    ``cost / OPT - alpha_ref > tol``; capacity rows compare the fractional
    load at every arrival instant with ``c_a``.  Returns
    ``(violated, ViolationDetails)``.
    """
    P = policy.user_probs(sequence)
    ratio = weighted_cost(P, network, sequence) / opt_value
    ratio_bad = ratio - alpha_ref > VIOLATION_TOL
    load = capacity_load(P, network, sequence)
    over = load - network.c[:, None] > VIOLATION_TOL
    breaches = [(int(a), int(k), float(load[a, k])) for a, k in zip(*np.nonzero(over))]
    details = ViolationDetails(float(ratio), bool(ratio_bad), breaches)
    return bool(ratio_bad or breaches), details


def decision_dimension(policy_kind: str, n_thetas: int, n_arcs: int, n_intervals: int = 1) -> int:
    d = n_thetas * (n_arcs - 1)
    return d * n_intervals if policy_kind.upper() == "TD" else d
