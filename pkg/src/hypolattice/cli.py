"""Command-line entry point: orchestration, validation and result emission.

Subcommands: run (execute configured suites), list-claims (print the claim
registry), control (solve one reachability problem), simulate (integrate a
finite box and dump the weighted-norm trajectory), validate (check a config
against the standing hypotheses without running anything).
"""

import argparse
import concurrent.futures
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import control as ctl
from .config import ExperimentConfig, SHIPPED_CONFIGS, load_config
from .errors import HypolatticeError
from .lattice import Box
from .models import get_model
from .simulate import LatticeSystem, NoisePlan, s_norm_recorder, simulate
from .suites import CLAIMS, run_suite

__all__ = ["main"]


def _add_common(parser):
    parser.add_argument("--config", default="heisenberg_smoke",
                        help="config file path or shipped config name")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's master seed")
    parser.add_argument("--workers", type=int, default=1,
                        help="suite-level parallelism")
    parser.add_argument("--out-dir", default="results",
                        help="artifact directory")


def _load(args):
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _suite_job(name, config):
    verdicts, curves = run_suite(name, config)
    return name, [v.to_record() for v in verdicts], curves


def cmd_run(args):
    config = _load(args)
    config.validate()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    names = list(config.suites)
    results = {}
    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(args.workers) as pool:
            futures = [pool.submit(_suite_job, name, config) for name in names]
            for fut in concurrent.futures.as_completed(futures):
                name, records, curves = fut.result()
                results[name] = (records, curves)
    else:
        for name in names:
            name, records, curves = _suite_job(name, config)
            results[name] = (records, curves)
    n_fail = n_inconclusive = 0
    with open(out / "verdicts.jsonl", "w") as fh:
        for name in names:  # fixed order: independent of completion order
            records, curves = results[name]
            for rec in records:
                rec["suite"] = name
                rec["config_hash"] = config.hash()
                rec["seed"] = config.seed
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                n_fail += rec["verdict"] == "fail"
                n_inconclusive += rec["verdict"] == "inconclusive"
                print(f"[{rec['verdict']:>12}] {rec['claim']}: "
                      f"{rec['statement']}")
            for curve in curves:
                curve.write_csv(out / f"{curve.name}.csv")
    meta = {
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "version": __version__,
        "elapsed_s": time.time() - started,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "workers": args.workers,
    }
    with open(out / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    print(f"done: {n_fail} failed, {n_inconclusive} inconclusive, "
          f"artifacts in {out}")
    return 1 if n_fail else 0


def cmd_list_claims(args):
    width = max(len(name) for name in CLAIMS)
    for name, rec in CLAIMS.items():
        print(f"{name:<{width}}  {rec['statement']}")
    return 0


def cmd_control(args):
    start = tuple(float(v) for v in args.frm.split(","))
    target = tuple(float(v) for v in args.to.split(","))
    problem = ctl.ControlProblem(start, target, args.t, getattr(args, "lambda"))
    u = ctl.solve_reachability(problem)
    err = ctl.verify_control(problem, u)
    print(f"u1'(s) = {u.a2}*s^2 + {u.a}*s + {u.b}")
    print(f"u2'(s) = {u.c2}*s^2 + {u.c}*s + {u.d}")
    print(f"verified endpoint error: {err:.3e}")
    return 0


def cmd_simulate(args):
    config = _load(args)
    config.validate()
    model = get_model(config.model)
    box = Box(d=config.lattice["d"], r=config.interaction.get("r", 1),
              n=args.n)
    system = LatticeSystem(model, box, config.interaction_spec(),
                           lam=config.lam)
    plan = NoisePlan(seed=config.seed, h=config.integrator["h"], T=args.T)
    rec = s_norm_recorder(system, config.weight_scheme())
    traj = simulate(system, system.initial_state(args.a0), plan,
                    record=[("s_norm", rec)],
                    record_stride=config.integrator.get("record_stride", 1),
                    replicas=args.replicas)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vals = traj.values["s_norm"]
    if vals.ndim == 1:
        vals = vals[:, None]
    path = out / "trajectory.csv"
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"s_norm_r{i}" for i in
                                 range(vals.shape[1])) + "\n")
        for t, row in zip(traj.times, vals):
            fh.write(f"{t}," + ",".join(repr(float(v)) for v in row) + "\n")
    print(f"simulated {box.nsites} sites for T={args.T}; wrote {path}")
    if traj.blowup_time is not None:
        print(f"trajectory blew up at t={traj.blowup_time}")
        return 1
    return 0


def cmd_validate(args):
    config = _load(args)
    try:
        config.validate()
    except HypolatticeError as exc:
        print(f"invalid: {exc}")
        return 1
    print(f"valid: hash {config.hash()}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hypolattice",
        description="simulate lattices of hypoelliptic diffusions and "
                    "verify their equilibrium machinery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the configured suites")
    _add_common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_list = sub.add_parser("list-claims", help="print the claim registry")
    p_list.set_defaults(fn=cmd_list_claims)

    p_ctl = sub.add_parser("control", help="solve one reachability problem")
    p_ctl.add_argument("--from", dest="frm", required=True,
                       help="start state x,y,z")
    p_ctl.add_argument("--to", dest="to", required=True,
                       help="target state x,y,z")
    p_ctl.add_argument("--t", type=float, default=1.0, help="horizon")
    p_ctl.add_argument("--lambda", type=float, default=1.0,
                       help="confinement rate")
    p_ctl.set_defaults(fn=cmd_control)

    p_sim = sub.add_parser("simulate", help="integrate one finite box")
    _add_common(p_sim)
    p_sim.add_argument("--n", type=int, default=2, help="box size")
    p_sim.add_argument("--T", type=float, default=1.0, help="horizon")
    p_sim.add_argument("--a0", type=float, default=0.0,
                       help="uniform initial coordinate value")
    p_sim.add_argument("--replicas", type=int, default=1)
    p_sim.set_defaults(fn=cmd_simulate)

    p_val = sub.add_parser("validate", help="validate a config and exit")
    _add_common(p_val)
    p_val.set_defaults(fn=cmd_validate)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
