"""Command line entry point.

Every subcommand works on one data directory (``--out``; inputs are read
from ``--data``, which defaults to the same directory)::

    otrlab gen --preset highway --out run/       # preset.json, train.json, test.json
    otrlab opt --out run/                        # opt.json
    otrlab train --out run/                      # policy_ti.json, policy_td.json
    otrlab risk --out run/                       # risk.json
    otrlab eval --out run/                       # eval.json
    otrlab worstcase --out run/                  # worstcase.json
    otrlab report --preset highway --out run/    # report.json + CSVs
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import _accel
from .greedy import greedy_route, total_cost
from .harness import (
    STREAM_TEST,
    STREAM_TRAIN,
    StageError,
    _evaluate,
    run_experiment,
    sample_feasible,
    summarize,
)
from .instance import (
    PRESET_NAMES,
    InputSequence,
    ScenarioPreset,
    derive_seed,
    dump_json,
    get_preset,
    load_json,
)
from .offline import opt_fractional, opt_integral_bruteforce
from .scenario import (
    decision_dimension,
    learn_td,
    learn_ti,
    load_policy,
    risk_interval,
    save_policy,
    support_constraints,
)
from .worstcase import three_arc_instance, two_vot_instance

log = logging.getLogger("otrlab")


def _preset(args) -> ScenarioPreset:
    if args.config:
        return ScenarioPreset.from_dict(load_json(args.config))
    return get_preset(args.preset or "highway")


def _data(args, name):
    return os.path.join(args.data or args.out, name)


def _load_set(path):
    d = load_json(path)
    return [InputSequence.from_dict(s) for s in d["sequences"]], d


def _load_preset(args) -> ScenarioPreset:
    path = _data(args, "preset.json")
    if args.config or args.preset or not os.path.exists(path):
        return _preset(args)
    return ScenarioPreset.from_dict(load_json(path))


def _load_opts(args):
    path = _data(args, "opt.json")
    if os.path.exists(path):
        d = load_json(path)
        return d["train"], d["test"]
    return None, None


def cmd_gen(args):
    preset = _preset(args)
    train = sample_feasible(preset, args.k_train, derive_seed(args.seed, STREAM_TRAIN))
    test = sample_feasible(preset, args.k_test, derive_seed(args.seed, STREAM_TEST))
    dump_json(preset.to_dict(), os.path.join(args.out, "preset.json"))
    for name, s in (("train", train), ("test", test)):
        dump_json(
            {
                "master_seed": args.seed,
                "seeds": s.seeds,
                "resamples": s.resamples,
                "sequences": [q.to_dict() for q in s.sequences],
            },
            os.path.join(args.out, f"{name}.json"),
        )
    print(f"wrote {len(train.sequences)} training and {len(test.sequences)} test sequences to {args.out}")


def cmd_opt(args):
    preset = _load_preset(args)
    out = {}
    for name in ("train", "test"):
        seqs, _ = _load_set(_data(args, f"{name}.json"))
        vals = []
        for k, s in enumerate(seqs):
            res = opt_fractional(preset.network, s)
            if res.status != "optimal":
                raise RuntimeError(f"{name} sequence {k} has no feasible routing ({res.status})")
            vals.append(res.value)
        out[name] = vals
    dump_json(out, os.path.join(args.out, "opt.json"))
    print(f"fractional optimum for {len(out['train'])} + {len(out['test'])} sequences")


def _train_inputs(args):
    preset = _load_preset(args)
    seqs, _ = _load_set(_data(args, "train.json"))
    opts, _ = _load_opts(args)
    if opts is None:
        opts = [opt_fractional(preset.network, s).value for s in seqs]
    return preset, seqs, opts


def cmd_train(args):
    preset, seqs, opts = _train_inputs(args)
    ti = learn_ti(preset.network, seqs, opts)
    td = learn_td(preset.network, seqs, opts, preset.profile.boundaries)
    save_policy(ti, os.path.join(args.out, "policy_ti.json"))
    save_policy(td, os.path.join(args.out, "policy_td.json"))
    print(f"alpha* TI {ti.alpha_star:.6f}  TD {td.alpha_star:.6f}")


def cmd_risk(args):
    preset, seqs, opts = _train_inputs(args)
    net = preset.network
    bounds = preset.profile.boundaries
    thetas = preset.profile.thetas
    out = {}
    for kind in ("TI", "TD"):
        d = decision_dimension(kind, len(thetas), net.n_arcs, len(bounds))
        sup = support_constraints(net, seqs, opts, kind, bounds if kind == "TD" else None)
        r = risk_interval(len(seqs), len(sup), args.beta, d)
        out[kind] = {**r.to_dict(), "decision_dimension": d, "support": sup}
        print(f"{kind}: s*={len(sup)}  eps in [{r.eps_lower:.6f}, {r.eps_upper:.6f}]")
    dump_json(out, os.path.join(args.out, "risk.json"))


def cmd_eval(args):
    preset = _load_preset(args)
    net = preset.network
    seqs, meta = _load_set(_data(args, "test.json"))
    _, opts = _load_opts(args)
    if opts is None:
        opts = [opt_fractional(net, s).value for s in seqs]
    ti = load_policy(_data(args, "policy_ti.json"))
    td = load_policy(_data(args, "policy_td.json"))
    master = meta.get("master_seed", args.seed)
    records = [
        _evaluate(k, s, o, seed, net, ti, td, master)
        for k, (s, o, seed) in enumerate(zip(seqs, opts, meta["seeds"]))
    ]
    risk_path = _data(args, "risk.json")
    risk = load_json(risk_path) if os.path.exists(risk_path) else {
        k: {"eps_lower": 0.0, "eps_upper": 1.0} for k in ("TI", "TD")
    }
    summary = summarize(records, risk)
    dump_json({"records": records, "summary": summary}, os.path.join(args.out, "eval.json"))
    for alg, m in summary["mean_ratio"].items():
        print(f"mean ratio {alg}: {m:.4f}")


def cmd_worstcase(args):
    rows = []
    for t3 in (20.0, 130.0, 1e4):
        net, seq, bound = three_arc_instance(t3)
        ratio = _greedy_vs_bruteforce(net, seq)
        rows.append({"construction": "three_arc", "t3": t3, "bound": bound, "greedy_ratio": ratio})
    for th_lo, th_hi, t1, t2 in ((1.0, 20.0, 20.0, 24.0), (1.0, 1.0, 20.0, 24.0)):
        net, seq, bound = two_vot_instance(th_lo, th_hi, t1, t2, 0.5 * t1)
        ratio = _greedy_vs_bruteforce(net, seq)
        rows.append({
            "construction": "two_vot", "theta": [th_lo, th_hi], "t": [t1, t2],
            "bound": bound, "greedy_ratio": ratio,
        })
    bad = [r for r in rows if r["greedy_ratio"] < r["bound"] - 1e-9]
    dump_json({"instances": rows, "all_tight": not bad}, os.path.join(args.out, "worstcase.json"))
    for r in rows:
        print(f"{r['construction']}: greedy {r['greedy_ratio']:.9f} bound {r['bound']:.9f}")
    if bad:
        raise RuntimeError(f"{len(bad)} constructions fall below their bound")


def _greedy_vs_bruteforce(net, seq) -> float:
    return total_cost(greedy_route(net, seq), net, seq) / opt_integral_bruteforce(net, seq).value


def cmd_report(args):
    rep = run_experiment(_preset(args), args.k_train, args.k_test, args.seed, args.beta)
    rep.write(args.out)
    s = rep.summary
    print(f"{rep.scenario}: alpha* TI {rep.alpha_ti:.4f} TD {rep.alpha_td:.4f}")
    for alg, m in s["mean_ratio"].items():
        print(f"  mean ratio {alg}: {m:.4f}")
    for kind, f in s["violation_fraction"].items():
        r = rep.risk[kind]
        print(f"  {kind} violations {f:.3f} in [{r['eps_lower']:.4f}, {r['eps_upper']:.4f}]")


COMMANDS = {
    "gen": (cmd_gen, "sample training and test sequences"),
    "opt": (cmd_opt, "offline fractional optimum for sampled sequences"),
    "train": (cmd_train, "learn time-independent and time-dependent policies"),
    "risk": (cmd_risk, "support constraints and risk interval"),
    "eval": (cmd_eval, "evaluate greedy and learned policies on the test set"),
    "worstcase": (cmd_worstcase, "greedy on the adversarial constructions"),
    "report": (cmd_report, "full experiment with JSON and CSV output"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="otrlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--preset", choices=PRESET_NAMES)
        src.add_argument("--config", metavar="FILE", help="scenario JSON (as written by gen)")
        sp.add_argument("--k-train", type=int, default=100)
        sp.add_argument("--k-test", type=int, default=100)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--beta", type=float, default=1e-6)
        sp.add_argument("--out", default=".", metavar="DIR")
        sp.add_argument("--data", default=None, metavar="DIR", help="input directory (defaults to --out)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    log.info("kernel backend: %s", _accel.BACKEND)
    fn, _ = COMMANDS[args.command]
    try:
        os.makedirs(args.out, exist_ok=True)
        fn(args)
    except StageError as exc:
        print(f"otrlab: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report every failure with its stage
        print(f"otrlab: [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
