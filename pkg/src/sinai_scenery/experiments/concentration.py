"""Concentration experiment: fraction of life spent in a short interval.

For each radius ell and checkpoint n, reports the distribution over seeds
of max_{m <= n} sup_x L(m, [x-ell, x+ell]) / (m+1).
"""

from __future__ import annotations

import time

import numpy as np

from ..walker import WalkConfig, simulate
from .harness import (ExperimentConfig, SummaryTable, replica_seed,
                      run_tasks, summarize, write_manifest)

__all__ = ["run_concentration"]


def _worker(payload):
    cfg_env, cfg_sce, ells, n_steps, seed = payload
    from ..environment import EnvironmentSpec, ScenerySpec
    env = EnvironmentSpec(seed=seed, **cfg_env)
    sce = ScenerySpec(seed=seed, **cfg_sce)
    rec = simulate(WalkConfig(env, sce, n_steps, ell_values=tuple(ells)))
    runmax = {ell: np.maximum.accumulate(rec.conc[ell]) for ell in ells}
    return rec.steps.copy(), runmax


def run_concentration(config: ExperimentConfig):
    t0 = time.time()
    payloads = [(config.env, config.scenery, config.ell_grid, config.n_steps,
                 replica_seed(config.seed, 0, rep))
                for rep in range(config.replicas)]
    results = run_tasks(_worker, payloads, config.threads)

    summary = SummaryTable(["ell", "step", "n", "median_runmax",
                            "mean_runmax", "q10", "q90", "ci_lo", "ci_hi"])
    per_seed = SummaryTable(["ell", "replica", "runmax_final"])
    steps = results[0][0]
    for ell in config.ell_grid:
        for si, step in enumerate(steps):
            vals = np.array([r[1][ell][si] for r in results])
            s = summarize(vals)
            summary.add(int(ell), int(step), s["n"], s["median"], s["mean"],
                        s["q10"], s["q90"], s["ci_lo"], s["ci_hi"])
        for rep, r in enumerate(results):
            per_seed.add(int(ell), rep, float(r[1][ell][-1]))

    tables = {"concentration_summary": summary,
              "concentration_per_seed": per_seed}
    for name, t in tables.items():
        t.write_csv(f"{config.out_dir}/{name}.csv")
    write_manifest(config, tables, time.time() - t0)
    return tables
