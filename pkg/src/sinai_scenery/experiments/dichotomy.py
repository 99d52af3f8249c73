"""Tail-dichotomy experiment: Z_n/n across kappa regimes with paired seeds.

Scenery draws are coupled across kappa (same per-site uniforms), so a
heavier negative tail gives a pathwise-smaller Z_n on the same walk; the
paired running-max comparison is the desk-scale stand-in for the
almost-sure dichotomy, which no finite run can exhibit directly.
"""

from __future__ import annotations

import time

import numpy as np

from ..walker import WalkConfig, simulate
from . import calibration
from .harness import (ExperimentConfig, SummaryTable, replica_seed,
                      run_tasks, summarize, write_manifest)

__all__ = ["run_dichotomy"]


def _worker(payload):
    (cfg_env, cfg_sce, kappas, n_steps, seed) = payload
    from ..environment import EnvironmentSpec, ScenerySpec
    out = {}
    for kappa in kappas:
        env = EnvironmentSpec(seed=seed, **cfg_env)
        sce = ScenerySpec(seed=seed, kappa=kappa, **cfg_sce)
        rec = simulate(WalkConfig(env, sce, n_steps))
        steps = rec.steps.astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            z_over_n = rec.z / np.maximum(steps, 1.0)
        runmax = np.maximum.accumulate(z_over_n)
        out[kappa] = (rec.steps.copy(), rec.z.copy(), z_over_n, runmax)
    return out


def growth_exponent(steps, z) -> float:
    """Fitted slope of log|Z_n| against log n over the tail checkpoints
    (the later half in log scale, nonzero Z only)."""
    steps = np.asarray(steps, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    mask = (steps > 0) & (np.abs(z) > 0)
    if mask.sum() < 3:
        return float("nan")
    ls = np.log(steps[mask])
    lz = np.log(np.abs(z[mask]))
    cut = ls >= (ls[0] + ls[-1]) / 2.0
    if cut.sum() < 2:
        cut = np.ones_like(ls, dtype=bool)
    return float(np.polyfit(ls[cut], lz[cut], 1)[0])


def run_dichotomy(config: ExperimentConfig):
    """Per kappa and checkpoint: distribution of Z_n/n and of the running
    max of Z_m/m; per seed: final values and the growth-exponent fit."""
    t0 = time.time()
    sce_base = dict(calibration.DICHOTOMY_SCENERY)
    sce_base.update(config.scenery)
    sce_base.pop("kappa", None)
    payloads = [(config.env, sce_base, config.kappa_grid, config.n_steps,
                 replica_seed(config.seed, 0, rep))
                for rep in range(config.replicas)]
    results = run_tasks(_worker, payloads, config.threads)

    summary = SummaryTable(["kappa", "step", "n", "median_z_over_n",
                            "mean_z_over_n", "q10", "q90", "ci_lo", "ci_hi",
                            "median_runmax"])
    per_seed = SummaryTable(["kappa", "replica", "step", "z_over_n",
                             "runmax", "growth_exponent"])
    for kappa in config.kappa_grid:
        steps = results[0][kappa][0]
        for si, step in enumerate(steps):
            vals = np.array([r[kappa][2][si] for r in results])
            rmx = np.array([r[kappa][3][si] for r in results])
            s = summarize(vals)
            summary.add(kappa, int(step), s["n"], s["median"], s["mean"],
                        s["q10"], s["q90"], s["ci_lo"], s["ci_hi"],
                        float(np.median(rmx)))
        for rep, r in enumerate(results):
            st, z, zon, rmx = r[kappa]
            per_seed.add(kappa, rep, int(st[-1]), float(zon[-1]),
                         float(rmx[-1]), growth_exponent(st, z))

    pairs = SummaryTable(["replica", "kappa_lo", "kappa_hi", "runmax_lo",
                          "runmax_hi", "separated"])
    k_lo, k_hi = min(config.kappa_grid), max(config.kappa_grid)
    for rep, r in enumerate(results):
        lo = float(r[k_lo][3][-1])
        hi = float(r[k_hi][3][-1])
        pairs.add(rep, k_lo, k_hi, lo, hi, hi > lo)

    tables = {"dichotomy_summary": summary, "dichotomy_per_seed": per_seed,
              "dichotomy_pairs": pairs}
    for name, t in tables.items():
        t.write_csv(f"{config.out_dir}/{name}.csv")
    write_manifest(config, tables, time.time() - t0)
    return tables
