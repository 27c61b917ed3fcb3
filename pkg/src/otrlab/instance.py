"""Networks, arrival sequences, arrival profiles and the Poisson sampler."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 output function on a Python int."""
    z = (x + GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Child seed for stream ``index`` of ``master``.

    ``splitmix64(splitmix64(master) + GOLDEN * (index + 1))`` modulo 2**64.
    The same mixing is used by :func:`otrlab.kernels.hash_uniforms`, so
    ``hash_uniforms(splitmix64(s), n)[i]`` is the top 53 bits of
    ``derive_seed(s, i)`` scaled to [0, 1).
    """
    return splitmix64((splitmix64(master & MASK64) + GOLDEN64 * (index + 1)) & MASK64)


@dataclass(frozen=True)
class NetworkSpec:
    """Parallel network; arc ``a`` has travel time ``t[a]`` and capacity ``c[a]``."""

    travel_times: tuple[float, ...]
    capacities: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "travel_times", tuple(float(x) for x in self.travel_times))
        object.__setattr__(self, "capacities", tuple(int(x) for x in self.capacities))
        if len(self.travel_times) != len(self.capacities):
            raise ValueError("travel_times and capacities differ in length")

    @classmethod
    def from_pairs(cls, arcs: Sequence[tuple[float, int]]) -> NetworkSpec:
        return cls(tuple(a[0] for a in arcs), tuple(a[1] for a in arcs))

    @property
    def n_arcs(self) -> int:
        return len(self.travel_times)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.travel_times, dtype=float)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.capacities, dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "arcs": [
                {"travel_time": t, "capacity": c}
                for t, c in zip(self.travel_times, self.capacities)
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> NetworkSpec:
        return cls.from_pairs([(a["travel_time"], a["capacity"]) for a in d["arcs"]])


@dataclass(frozen=True)
class InputSequence:
    """Users in arrival order: times ``tau`` and values of time ``theta``."""

    tau: tuple[float, ...]
    theta: tuple[float, ...]
    vot_alphabet: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(float(x) for x in self.tau))
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        object.__setattr__(self, "vot_alphabet", tuple(float(x) for x in self.vot_alphabet))
        if len(self.tau) != len(self.theta):
            raise ValueError("tau and theta differ in length")

    @property
    def n(self) -> int:
        return len(self.tau)

    @property
    def tau_array(self) -> np.ndarray:
        return np.asarray(self.tau, dtype=float)

    @property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    def vot_index(self) -> np.ndarray:
        """Position of each user's value of time within ``vot_alphabet``."""
        lookup = {v: k for k, v in enumerate(self.vot_alphabet)}
        try:
            return np.array([lookup[v] for v in self.theta], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"value of time {exc.args[0]} not in alphabet") from None

    def to_dict(self) -> dict:
        return {
            "vot_alphabet": list(self.vot_alphabet),
            "users": [{"arrival_time": a, "vot": v} for a, v in zip(self.tau, self.theta)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> InputSequence:
        users = d["users"]
        return cls(
            tuple(u["arrival_time"] for u in users),
            tuple(u["vot"] for u in users),
            tuple(d["vot_alphabet"]),
        )

    @classmethod
    def uniform_vot(cls, tau: Sequence[float], theta: float = 1.0) -> InputSequence:
        """Identical-VOT sequence, handy for the single-class problem."""
        return cls(tuple(tau), (theta,) * len(tau), (theta,))


@dataclass(frozen=True)
class ArrivalProfile:
    """VOT mix plus a piecewise-constant Poisson rate.

    ``rate_schedule`` is a list of ``(interval_start, rate)``; the last
    interval is open-ended.
    """

    vot_probs: tuple[tuple[float, float], ...]
    rate_schedule: tuple[tuple[float, float], ...]

    def __post_init__(self):
        vp = self.vot_probs
        if isinstance(vp, dict):
            vp = vp.items()
        object.__setattr__(self, "vot_probs", tuple((float(k), float(p)) for k, p in vp))
        object.__setattr__(
            self, "rate_schedule", tuple((float(s), float(r)) for s, r in self.rate_schedule)
        )

    @property
    def thetas(self) -> tuple[float, ...]:
        return tuple(k for k, _ in self.vot_probs)

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.vot_probs])

    @property
    def boundaries(self) -> tuple[float, ...]:
        return tuple(s for s, _ in self.rate_schedule)

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(r for _, r in self.rate_schedule)

    def problems(self) -> list[str]:
        out = []
        p = self.probs
        if len(p) == 0:
            out.append("empty VOT distribution")
        elif abs(p.sum() - 1.0) > 1e-12:
            out.append("VOT probabilities do not sum to 1")
        if (p < 0).any():
            out.append("negative VOT probability")
        if any(k <= 0 for k in self.thetas):
            out.append("nonpositive value of time")
        if not self.rate_schedule:
            out.append("empty rate schedule")
        else:
            b = self.boundaries
            if b[0] != 0.0:
                out.append("first interval must start at 0")
            if any(y <= x for x, y in zip(b, b[1:])):
                out.append("interval starts not strictly increasing")
            if any(r <= 0 for r in self.rates):
                out.append("nonpositive arrival rate")
        return out

    def to_dict(self) -> dict:
        return {
            "vot_probs": [{"vot": k, "prob": p} for k, p in self.vot_probs],
            "rate_schedule": [{"interval_start": s, "rate": r} for s, r in self.rate_schedule],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ArrivalProfile:
        return cls(
            tuple((e["vot"], e["prob"]) for e in d["vot_probs"]),
            tuple((e["interval_start"], e["rate"]) for e in d["rate_schedule"]),
        )


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    network: NetworkSpec
    profile: ArrivalProfile
    n_users: int

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "network": self.network.to_dict(),
            "profile": self.profile.to_dict(),
            "n_users": self.n_users,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioPreset:
        return cls(
            d.get("name", "custom"),
            NetworkSpec.from_dict(d["network"]),
            ArrivalProfile.from_dict(d["profile"]),
            int(d["n_users"]),
        )


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(network: NetworkSpec, sequence: InputSequence | None = None) -> ValidationReport:
    """Collect every violated invariant; never raises."""
    v = []
    t, c = network.travel_times, network.capacities
    if len(t) < 2:
        v.append("fewer than 2 arcs")
    if any(x <= 0 for x in t):
        v.append("nonpositive travel time")
    if any(x < 1 for x in c):
        v.append("capacity below 1")
    if any(b < a for a, b in zip(t, t[1:])):
        v.append("arcs not sorted")
    if sequence is not None:
        tau, theta = sequence.tau, sequence.theta
        if tau and tau[0] != 0.0:
            v.append("first arrival not at time 0")
        if any(x < 0 for x in tau):
            v.append("negative arrival time")
        if any(b == a for a, b in zip(tau, tau[1:])):
            v.append("tied arrival times")
        if any(b < a for a, b in zip(tau, tau[1:])):
            v.append("arrival times decreasing")
        if any(x <= 0 for x in theta):
            v.append("nonpositive value of time")
        alphabet = set(sequence.vot_alphabet)
        if any(x not in alphabet for x in theta):
            v.append("value of time outside alphabet")
    return ValidationReport(v)


def sample_sequence(profile: ArrivalProfile, n: int, seed: int) -> InputSequence:
    """Draw ``n`` users from the piecewise-rate Poisson process.

    The first user arrives at 0.  An inter-arrival drawn at rate ``lambda_j``
    that would cross ``mu_{j+1}`` is discarded; the clock jumps to
    ``mu_{j+1}`` and a fresh draw is made at ``lambda_{j+1}``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    problems = profile.problems()
    if problems:
        raise ValueError("invalid arrival profile: " + "; ".join(problems))
    rng = np.random.default_rng(seed & MASK64)
    starts = profile.boundaries
    rates = profile.rates
    q = len(starts)
    tau = np.empty(n)
    tau[0] = 0.0
    clock, j = 0.0, 0
    k = 1
    while k < n:
        cand = clock + rng.exponential(1.0 / rates[j])
        if j + 1 < q and cand >= starts[j + 1]:
            clock = starts[j + 1]
            j += 1
            continue
        if cand <= tau[k - 1]:
            raise RuntimeError(f"tied arrival at index {k}; refusing to emit a degenerate sequence")
        tau[k] = cand
        clock = cand
        k += 1
    thetas = np.array(profile.thetas)
    theta = thetas[rng.choice(len(thetas), size=n, p=profile.probs)]
    return InputSequence(tuple(tau.tolist()), tuple(theta.tolist()), profile.thetas)


def occupancy_count(assignment, network: NetworkSpec, sequence: InputSequence, arc: int, time: float) -> float:
    """Mass on ``arc`` at ``time``, counting user i over [tau_i, tau_i + t_a]."""
    if not 0 <= arc < network.n_arcs:
        raise IndexError(f"arc {arc} out of range for {network.n_arcs} arcs")
    x = np.asarray(assignment.x if hasattr(assignment, "x") else assignment, dtype=float)
    tau = sequence.tau_array
    inside = (tau <= time) & (tau + network.travel_times[arc] >= time)
    return float(x[inside, arc].sum())


def window_matrix(tau: np.ndarray, travel_time: float) -> np.ndarray:
    """``W[k, i] = 1`` iff ``tau_k`` lies in ``[tau_i, tau_i + travel_time]``."""
    return ((tau[None, :] <= tau[:, None]) & (tau[None, :] + travel_time >= tau[:, None])).astype(float)


# --- presets -----------------------------------------------------------------

HIGHWAY_NETWORK = NetworkSpec((20.0, 24.0, 130.0), (20, 24, 100))
BAY_AREA_VOT = ((1.0, 0.32), (9.0, 0.39), (20.0, 0.29))
INTERVAL_WIDTH = 14.0

_RATES = {
    "highway": (1.2, 2.0, 2.25, 2.5, 2.25),
    "scenario1": (2.0, 2.0, 2.0, 2.0, 2.0),
    "scenario2": (2.0, 2.5, 2.0, 2.5, 2.0),
    "scenario3": (2.0, 2.25, 2.0, 2.25, 2.0),
    "scenario4": (2.0, 2.25, 2.0, 2.5, 2.0),
    "scenario5": (2.0, 2.5, 2.0, 2.25, 2.0),
}

PRESET_NAMES = tuple(_RATES)


def get_preset(name: str) -> ScenarioPreset:
    try:
        rates = _RATES[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    schedule = tuple((INTERVAL_WIDTH * j, r) for j, r in enumerate(rates))
    return ScenarioPreset(name, HIGHWAY_NETWORK, ArrivalProfile(BAY_AREA_VOT, schedule), 120)


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
