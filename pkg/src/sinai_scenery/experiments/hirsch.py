"""Small-maximum scaling of the potential.

Estimates P{max_{0<=x<=N} V(x) < N^(1/2-eps')} over a geometric N grid and
fits the log-log slope, which the scaling law predicts to be -eps'.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .. import _kernels, rng
from ..environment import ConfigurationError
from .harness import (ExperimentConfig, SummaryTable, proportion_ci,
                      run_tasks, write_manifest)

__all__ = ["run_hirsch"]

_CHUNK = 20_000


def _worker(payload):
    seed, cell, chunk_lo, chunk_n, n_sites, threshold, step = payload
    keys = rng.derive_keys(seed, 1000 + cell,
                           np.arange(chunk_lo, chunk_lo + chunk_n, dtype=np.int64))
    return _kernels.hirsch_kernel(keys, n_sites, threshold, step)


def run_hirsch(config: ExperimentConfig):
    t0 = time.time()
    eps_prime = float(config.extras.get("eps_prime", 1.0 / 35.0))
    if not 0.0 < eps_prime < 1.0 / 34.0:
        raise ConfigurationError("hirsch scaling requires eps' in (0, 1/34)")
    env = config.environment_spec()
    if env.law != "two_point":
        raise ConfigurationError("hirsch experiment needs the two-point law")
    step = env.step_bound

    table = SummaryTable(["n_sites", "threshold", "replicas", "successes",
                          "p_hat", "ci_lo", "ci_hi"])
    log_n, log_p, sd_log_p = [], [], []
    for cell, n_sites in enumerate(config.n_grid):
        threshold = float(n_sites) ** (0.5 - eps_prime)
        payloads = []
        done = 0
        while done < config.replicas:
            c = min(_CHUNK, config.replicas - done)
            payloads.append((config.seed, cell, done, c, int(n_sites),
                             threshold, step))
            done += c
        counts = run_tasks(_worker, payloads, config.threads)
        k = int(sum(counts))
        p, lo, hi = proportion_ci(k, config.replicas)
        table.add(int(n_sites), threshold, config.replicas, k, p, lo, hi)
        if 0 < k < config.replicas:
            log_n.append(math.log(n_sites))
            log_p.append(math.log(p))
            sd_log_p.append(math.sqrt((1 - p) / (p * config.replicas)))

    fit = SummaryTable(["slope", "slope_se", "intercept", "predicted_slope",
                        "strictly_decreasing"])
    if len(log_n) >= 2:
        w = 1.0 / np.array(sd_log_p) ** 2
        x = np.array(log_n)
        y = np.array(log_p)
        xm = np.average(x, weights=w)
        ym = np.average(y, weights=w)
        slope = float(np.sum(w * (x - xm) * (y - ym)) / np.sum(w * (x - xm) ** 2))
        intercept = float(ym - slope * xm)
        se = float(np.sqrt(1.0 / np.sum(w * (x - xm) ** 2)))
    else:
        slope = intercept = se = float("nan")
    ps = table.column("p_hat")
    # decreasing within 3-sigma slack per neighboring pair
    dec = all(ps[i + 1] < ps[i] + 3 * sd_log_p[min(i, len(sd_log_p) - 1)] * ps[i]
              for i in range(len(ps) - 1)) if len(ps) > 1 else False
    fit.add(slope, se, intercept, -eps_prime, dec)

    tables = {"hirsch_probabilities": table, "hirsch_fit": fit}
    for name, t in tables.items():
        t.write_csv(f"{config.out_dir}/{name}.csv")
    write_manifest(config, tables, time.time() - t0)
    return tables
