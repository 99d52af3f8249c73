"""Localization experiment: occupation of the annuli up to t = floor(e^j).

For environment-scenery pairs satisfying the full event conjunction at
depth j (found by rejection sampling), runs independent walk replicas to
time t and checks the three displays: small occupation of the left stretch,
small occupation of every outer annulus, and no exit from the valley.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..environment import ConfigurationError
from ..walker import WalkConfig, simulate
from . import calibration
from .harness import (ExperimentConfig, SummaryTable, proportion_ci,
                      run_tasks, write_manifest)
from .good_env import collect_good_pairs

__all__ = ["run_localization"]


def _interval_mass(final_sites, final_counts, intervals):
    if final_sites.size == 0:
        return 0
    lo = int(final_sites.min())
    c = np.zeros(int(final_sites.max()) - lo + 2, dtype=np.int64)
    c[final_sites - lo + 1] = final_counts
    c = np.cumsum(c)
    total = 0
    top = len(c) - 1
    for a, b in intervals:
        ia = min(max(a - lo, 0), top)
        ib = min(max(b - lo + 1, 0), top)
        total += int(c[ib] - c[ia])
    return total


def _pair_worker(payload):
    (seed, j, t, d_minus, d_plus, theta, eps, walk_replicas,
     env_kw, sce_kw) = payload
    from ..environment import EnvironmentSpec, ScenerySpec
    env = EnvironmentSpec(seed=seed, **env_kw)
    sce = ScenerySpec(seed=seed, **sce_kw)
    M = max(theta.keys()) + 1
    n_d1 = n_d2 = n_d3 = n_joint = 0
    for rep in range(walk_replicas):
        cfg = WalkConfig(env, sce, t, checkpoints=(t,), replica=rep,
                         targets=(d_minus, d_plus))
        rec = simulate(cfg)
        d3 = rec.hits[d_minus] is None and rec.hits[d_plus] is None
        d1 = (_interval_mass(rec.final_sites, rec.final_counts, theta[-1])
              <= eps[-1] * t)
        d2 = True
        for i in range(0, M - 1):
            if (_interval_mass(rec.final_sites, rec.final_counts, theta[i])
                    > eps[i] * t):
                d2 = False
                break
        n_d1 += d1
        n_d2 += d2
        n_d3 += d3
        n_joint += d1 and d2 and d3
    return n_d1, n_d2, n_d3, n_joint


def run_localization(config: ExperimentConfig):
    t0 = time.time()
    j = int(config.extras.get("j", 10))
    if j > 14:
        raise ConfigurationError(
            "t = floor(e^j) must stay simulable; need j <= 14")
    t = int(math.floor(math.exp(j)))
    n_pairs = int(config.extras.get("n_good_pairs", 100))
    walk_replicas = int(config.extras.get("walk_replicas", 100))
    budget = int(config.extras.get("budget",
                                   calibration.GOOD_ENV["budget"]))

    pairs, stats = collect_good_pairs(config, j, n_pairs, budget)

    per_pair = SummaryTable(["pair_seed", "frac_d1", "frac_d2", "frac_d3",
                             "frac_joint", "walk_replicas"])
    payloads = []
    for seed, vd, ann, env, sce in pairs:
        eps = {i: ann.ladder.epsilon_at(i)
               for i in range(-1, ann.ladder.M)}
        payloads.append((seed, j, t, vd.d_minus, vd.d_plus, ann.theta, eps,
                         walk_replicas, dict(config.env),
                         dict(config.scenery)))
    results = run_tasks(_pair_worker, payloads, config.threads)
    tot = np.zeros(4, dtype=np.int64)
    for (seed, *_), r in zip(pairs, results):
        per_pair.add(seed, r[0] / walk_replicas, r[1] / walk_replicas,
                     r[2] / walk_replicas, r[3] / walk_replicas,
                     walk_replicas)
        tot += np.array(r)

    n_runs = len(pairs) * walk_replicas
    summary = SummaryTable([
        "j", "t", "good_pairs", "walk_replicas", "frac_d1", "frac_d2",
        "frac_d3", "frac_joint", "joint_ci_lo", "joint_ci_hi",
        "attempts_used", "budget", "budget_exhausted",
    ])
    p, lo, hi = proportion_ci(int(tot[3]), n_runs)
    summary.add(j, t, len(pairs), walk_replicas,
                tot[0] / max(n_runs, 1), tot[1] / max(n_runs, 1),
                tot[2] / max(n_runs, 1), p, lo, hi,
                stats["attempts"], budget, stats["budget_exhausted"])

    tables = {"localization_summary": summary, "localization_per_pair": per_pair}
    for name, tab in tables.items():
        tab.write_csv(f"{config.out_dir}/{name}.csv")
    write_manifest(config, tables, time.time() - t0)
    return tables
