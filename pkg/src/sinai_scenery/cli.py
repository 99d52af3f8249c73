"""Command-line surface.

Subcommands: simulate, dichotomy, concentration, hirsch, valleys, good-env,
localize, check.  Exit codes: 0 success, 1 invariant violation (from
``check``), 2 configuration error.  A JSON manifest accompanies every
successful run; experiment CSVs are byte-identical across --threads values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .environment import ConfigurationError, EnvironmentSpec, ScenerySpec, specs_to_json
from .experiments import (ExperimentConfig, run_concentration, run_dichotomy,
                          run_good_env_frequency, run_hirsch,
                          run_localization, run_valley_scaling)
from .experiments.calibration import recalibrate
from .walker import WalkConfig, simulate

_EXPERIMENTS = {
    "dichotomy": run_dichotomy,
    "concentration": run_concentration,
    "hirsch": run_hirsch,
    "valleys": run_valley_scaling,
    "good-env": run_good_env_frequency,
    "localize": run_localization,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--out", default=None,
                        help="output directory (overrides the config file)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--replicas", type=int, default=None)
    common.add_argument("--scan-cap", type=int, default=None)
    common.add_argument("-v", "--verbose", action="count", default=0)
    p = argparse.ArgumentParser(
        prog="sinai-scenery",
        description="Simulation and exact analytics for a recurrent walk in "
                    "random environment observing a random scenery.")
    p.add_argument("--recalibrate", action="store_true",
                   help="re-run the pilot oracles, write calibration.json, exit")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command")
    for name in _EXPERIMENTS:
        sub.add_parser(name, parents=[common],
                       help=f"run the {name} experiment")
    sim = sub.add_parser("simulate", parents=[common],
                         help="run one walk and export the record")
    sim.add_argument("--steps", type=int, default=10**6)
    sub.add_parser("check", parents=[common],
                   help="run the quenched-analytics oracle suite")
    return p


def _experiment_config(args, name) -> ExperimentConfig:
    overrides = dict(name=name, seed=args.seed, threads=args.threads,
                     replicas=args.replicas, scan_cap=args.scan_cap,
                     out_dir=args.out)
    return ExperimentConfig.from_json(args.config if args.config else {},
                                      **overrides)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if getattr(args, "command", None) in ("simulate", "check") and args.out is None:
        args.out = "out"
    try:
        if args.recalibrate:
            args.out = args.out or "out"
            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, "calibration.json")
            report = recalibrate(path, seed=args.seed or 0)
            if args.verbose:
                print(json.dumps(report, indent=2, sort_keys=True))
            print(f"calibration written to {path}")
            return 0
        if args.command is None:
            _parser().print_usage()
            return 2
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        runner = _EXPERIMENTS[args.command]
        cfg = _experiment_config(args, args.command)
        t0 = time.time()
        tables = runner(cfg)
        if args.verbose:
            for name, t in tables.items():
                print(f"{name}: {len(t.rows)} rows")
        print(f"{args.command}: wrote {len(tables)} tables to {cfg.out_dir} "
              f"({time.time() - t0:.1f}s)")
        return 0
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2


def _cmd_simulate(args) -> int:
    doc = {}
    if args.config:
        try:
            with open(args.config) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read config: {e}")
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    env = EnvironmentSpec(seed=seed, **doc.get("env", {}))
    sce = ScenerySpec(seed=seed, **doc.get("scenery", {}))
    n_steps = doc.get("n_steps", args.steps)
    ells = tuple(doc.get("ell_values", (0, 25)))
    cfg = WalkConfig(env, sce, n_steps, ell_values=ells)
    rec = simulate(cfg)
    os.makedirs(args.out, exist_ok=True)
    rec.to_csv(os.path.join(args.out, "walk.csv"))
    rec.final_json(os.path.join(args.out, "walk_final.json"))
    manifest = {
        "command": "simulate",
        "n_steps": n_steps,
        "specs": json.loads(specs_to_json(env, sce)),
        "z_identity_gap": rec.z_identity_gap(),
        "total_local_time": int(rec.final_counts.sum()),
    }
    with open(os.path.join(args.out, "simulate_manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    print(f"simulate: {n_steps} steps -> {args.out}/walk.csv")
    return 0


def _cmd_check(args) -> int:
    from .checks import oracle_suite
    from .quenched import bound_reports_to_csv
    seed = args.seed or 0
    reports = oracle_suite(seed=seed)
    os.makedirs(args.out, exist_ok=True)
    bound_reports_to_csv(reports, os.path.join(args.out, "check_report.csv"))
    n_bad = sum(not r.satisfied for r in reports)
    for r in reports:
        status = "ok " if r.satisfied else "FAIL"
        if args.verbose or not r.satisfied:
            print(f"[{status}] {r.quantity}: value={r.value:.6g} "
                  f"bounds=[{r.lower:.6g}, {r.upper:.6g}] slack={r.slack:.3g}")
    print(f"check: {len(reports) - n_bad}/{len(reports)} satisfied "
          f"-> {args.out}/check_report.csv")
    return 0 if n_bad == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
