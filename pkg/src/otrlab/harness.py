"""End-to-end experiment: sample, learn, bound the risk, evaluate on test data."""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .greedy import NoCapacityError, greedy_route, total_cost
from .instance import InputSequence, ScenarioPreset, derive_seed, get_preset, sample_sequence
from .offline import opt_fractional
from .online import capacity_breaches, expected_cost, route_online
from .scenario import (
    decision_dimension,
    learn_td,
    learn_ti,
    risk_interval,
    support_constraints,
    violation_check,
)

log = logging.getLogger(__name__)

N_BINS = 11
ALGORITHMS = ("greedy", "ti", "td")

# child streams of the master seed
STREAM_TRAIN, STREAM_TEST, STREAM_ROUND_TI, STREAM_ROUND_TD = range(4)
MAX_RESAMPLES = 10_000


class StageError(RuntimeError):
    """An error tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException | str):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


@dataclass
class SampledSet:
    sequences: list[InputSequence]
    opts: list[float]
    seeds: list[int]
    resamples: int


def sample_feasible(preset: ScenarioPreset, k: int, stream_seed: int) -> SampledSet:
    """``k`` sequences whose fractional optimum exists.

    Child ``j`` of ``stream_seed`` seeds the j-th attempt; infeasible draws
    are skipped and counted, so the first ``k`` feasible attempts are kept.
    """
    seqs, opts, seeds = [], [], []
    j = skipped = 0
    while len(seqs) < k:
        if skipped > MAX_RESAMPLES:
            raise RuntimeError(f"gave up after {skipped} infeasible draws")
        seed = derive_seed(stream_seed, j)
        j += 1
        seq = sample_sequence(preset.profile, preset.n_users, seed)
        res = opt_fractional(preset.network, seq)
        if res.status != "optimal":
            skipped += 1
            log.info("seed %d infeasible (%s); resampling", seed, res.status)
            continue
        seqs.append(seq)
        opts.append(res.value)
        seeds.append(seed)
    return SampledSet(seqs, opts, seeds, skipped)


def histogram(values) -> dict:
    """Counts over ``N_BINS`` equal bins spanning [min, max] (last bin closed)."""
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return {"edges": [], "counts": []}
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        hi = lo + 1.0  # single value: one populated bin of unit width
    counts, edges = np.histogram(v, bins=N_BINS, range=(lo, hi))
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def _mean(values) -> float:
    v = [x for x in values if x is not None]
    return float(np.mean(v)) if v else float("nan")


@dataclass
class ExperimentReport:
    scenario: str
    k_train: int
    k_test: int
    n_users: int
    master_seed: int
    beta: float
    beta_split: str
    boundaries: list[float]
    resamples: dict
    policies: dict
    risk: dict
    records: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "k_train": self.k_train,
            "k_test": self.k_test,
            "n_users": self.n_users,
            "master_seed": self.master_seed,
            "beta": self.beta,
            "beta_split": self.beta_split,
            "boundaries": self.boundaries,
            "resamples": self.resamples,
            "policies": self.policies,
            "risk": self.risk,
            "records": self.records,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @property
    def alpha_ti(self) -> float:
        return self.policies["TI"]["alpha_star"]

    @property
    def alpha_td(self) -> float:
        return self.policies["TD"]["alpha_star"]

    def mean_ratio(self, alg: str) -> float:
        return self.summary["mean_ratio"][alg]

    def violation_fraction(self, kind: str) -> float:
        return self.summary["violation_fraction"][kind]

    def write(self, out_dir) -> list[str]:
        """Write report.json, instances.csv and one histogram CSV per algorithm."""
        os.makedirs(out_dir, exist_ok=True)
        paths = [os.path.join(out_dir, "report.json")]
        with open(paths[0], "w") as fh:
            fh.write(self.to_json())
        cols = [
            "index", "seed", "opt_fractional",
            "greedy_cost", "greedy_ratio_vs_fractional_opt", "greedy_infeasible",
            "ti_cost", "ti_ratio_vs_fractional_opt", "ti_expected_cost", "ti_violated", "ti_breaches",
            "td_cost", "td_ratio_vs_fractional_opt", "td_expected_cost", "td_violated", "td_breaches",
        ]
        path = os.path.join(out_dir, "instances.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.records:
                w.writerow([_flat(r, c) for c in cols])
        paths.append(path)
        for alg in ALGORITHMS:
            h = self.summary["histograms"][alg]
            path = os.path.join(out_dir, f"hist_{alg}.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["bin_lo", "bin_hi", "count"])
                for lo, hi, n in zip(h["edges"], h["edges"][1:], h["counts"]):
                    w.writerow([repr(lo), repr(hi), n])
            paths.append(path)
        return paths


def _flat(record: dict, col: str):
    if col in record:
        v = record[col]
    else:
        alg, _, key = col.partition("_")
        v = record[alg][key]
    return repr(v) if isinstance(v, float) else v


def _resolve(preset) -> ScenarioPreset:
    if isinstance(preset, ScenarioPreset):
        return preset
    return get_preset(preset)


def run_experiment(
    preset,
    k_train: int = 100,
    k_test: int = 100,
    master_seed: int = 0,
    beta: float = 1e-6,
    beta_split: str = "pooled",
) -> ExperimentReport:
    """Run the whole study for one preset; every failure names its stage."""
    preset = _resolve(preset)
    net = preset.network
    thetas = preset.profile.thetas
    bounds = list(preset.profile.boundaries)
    d_ti = decision_dimension("TI", len(thetas), net.n_arcs)
    d_td = decision_dimension("TD", len(thetas), net.n_arcs, len(bounds))
    if k_train <= max(d_ti, d_td):
        raise StageError(
            "config",
            f"k_train={k_train} must exceed the decision dimension (TI {d_ti}, TD {d_td})",
        )
    if k_test < 1:
        raise StageError("config", "k_test must be positive")

    try:
        train = sample_feasible(preset, k_train, derive_seed(master_seed, STREAM_TRAIN))
        test = sample_feasible(preset, k_test, derive_seed(master_seed, STREAM_TEST))
    except Exception as exc:
        raise StageError("sample", exc) from exc

    try:
        ti = learn_ti(net, train.sequences, train.opts)
        td = learn_td(net, train.sequences, train.opts, bounds)
    except Exception as exc:
        raise StageError("train", exc) from exc

    try:
        sup_ti = support_constraints(net, train.sequences, train.opts, "TI")
        sup_td = support_constraints(net, train.sequences, train.opts, "TD", bounds)
        risk_ti = risk_interval(k_train, len(sup_ti), beta, d_ti, beta_split)
        risk_td = risk_interval(k_train, len(sup_td), beta, d_td, beta_split)
    except Exception as exc:
        raise StageError("risk", exc) from exc

    try:
        records = [
            _evaluate(k, seq, opt, seed, net, ti, td, master_seed)
            for k, (seq, opt, seed) in enumerate(zip(test.sequences, test.opts, test.seeds))
        ]
    except Exception as exc:
        raise StageError("eval", exc) from exc

    risk = {
        "TI": {**risk_ti.to_dict(), "decision_dimension": d_ti, "support": sup_ti},
        "TD": {**risk_td.to_dict(), "decision_dimension": d_td, "support": sup_td},
    }
    return ExperimentReport(
        scenario=preset.name,
        k_train=k_train,
        k_test=k_test,
        n_users=preset.n_users,
        master_seed=master_seed,
        beta=beta,
        beta_split=beta_split,
        boundaries=bounds,
        resamples={"train": train.resamples, "test": test.resamples},
        policies={"TI": ti.to_dict(), "TD": td.to_dict()},
        risk=risk,
        records=records,
        summary=summarize(records, risk),
    )


def _evaluate(k, seq, opt, seed, net, ti, td, master_seed) -> dict:
    rec = {"index": k, "seed": seed, "opt_fractional": opt}
    try:
        g = total_cost(greedy_route(net, seq), net, seq)
        rec["greedy"] = {"cost": g, "ratio_vs_fractional_opt": g / opt, "infeasible": False}
    except NoCapacityError:
        rec["greedy"] = {"cost": None, "ratio_vs_fractional_opt": None, "infeasible": True}
    for name, pol, stream in (("ti", ti, STREAM_ROUND_TI), ("td", td, STREAM_ROUND_TD)):
        asg = route_online(pol, net, seq, derive_seed(derive_seed(master_seed, stream), k))
        cost = total_cost(asg, net, seq)
        violated, details = violation_check(pol, pol.alpha_star, net, seq, opt)
        rec[name] = {
            "cost": cost,
            "ratio_vs_fractional_opt": cost / opt,
            "expected_cost": expected_cost(pol, net, seq),
            "violated": violated,
            "ratio_violated": details.ratio_violated,
            "capacity_rows_violated": len(details.capacity_breaches),
            "breaches": len(capacity_breaches(asg, net, seq)),
        }
    rec["greedy_infeasible"] = rec["greedy"]["infeasible"]
    return rec


def summarize(records: list[dict], risk: dict) -> dict:
    ratios = {a: [r[a]["ratio_vs_fractional_opt"] for r in records] for a in ALGORITHMS}
    n = len(records)
    frac = {
        kind: sum(r[kind.lower()]["violated"] for r in records) / n for kind in ("TI", "TD")
    }
    return {
        "mean_ratio": {a: _mean(v) for a, v in ratios.items()},
        "histograms": {a: histogram(v) for a, v in ratios.items()},
        "violation_fraction": frac,
        "within_risk_bounds": {
            kind: risk[kind]["eps_lower"] <= frac[kind] <= risk[kind]["eps_upper"] for kind in frac
        },
        "greedy_infeasible": sum(r["greedy"]["infeasible"] for r in records),
        "breach_events": {k: sum(r[k]["breaches"] for r in records) for k in ("ti", "td")},
    }
