"""Good environment-scenery frequency via two-stage rejection.

Stage 1 is a numba scan evaluating the depth/descent/left-control events
(A1, A2, B) literally over candidate environments; stage 2 re-evaluates the
full event conjunction (annuli occupation sums and scenery events included)
through the same code path the public API exposes.  Stage 1 computes exact
constituents, so the two-stage split changes nothing statistically; it only
skips the expensive annuli work on the ~(1 - 2e-5) of attempts that already
failed an environment event.
"""

from __future__ import annotations

import time

import numpy as np

from .. import _kernels
from ..environment import ConfigurationError, EnvironmentSpec, ScenerySpec
from ..multiscale import (CapExceeded, MultiscaleParams, annuli, check_events,
                          valley)
from .harness import (ExperimentConfig, SummaryTable, proportion_ci,
                      run_tasks, write_manifest)

__all__ = ["run_good_env_frequency", "collect_good_pairs", "stage1_scan"]

_CHUNK = 2_000_000


def _stage1_worker(payload):
    master, attempt_lo, n, j, delta_prime, scan_cap = payload
    counts = np.zeros(6, dtype=np.int64)
    survivors = np.zeros(max(1000, n // 100), dtype=np.int64)
    n_surv = _kernels.env_stage1_kernel(master, attempt_lo, n, float(j),
                                        delta_prime, 1, scan_cap, counts,
                                        survivors)
    if n_surv > survivors.shape[0]:
        raise RuntimeError("stage-1 survivor buffer overflow")
    return counts, survivors[:n_surv].copy()


def stage1_scan(master_seed, j, delta_prime, attempts, scan_cap, threads,
                attempt_lo=0):
    """Chunked stage-1 scan; returns (counts, survivor seeds in attempt order).

    counts: [found, a1, a1&a2, b, a1&a2&b, censored].
    """
    payloads = []
    done = 0
    while done < attempts:
        c = min(_CHUNK, attempts - done)
        payloads.append((master_seed, attempt_lo + done, c, j, delta_prime,
                         scan_cap))
        done += c
    results = run_tasks(_stage1_worker, payloads, threads)
    counts = np.zeros(6, dtype=np.int64)
    seeds = []
    for c, s in results:
        counts += c
        seeds.append(s)
    return counts, np.concatenate(seeds) if seeds else np.empty(0, np.int64)


def _verify_pair(seed, j, env_kw, sce_kw, params, scan_cap):
    """Full event evaluation for one candidate pair; returns the report and
    the completed (valley, annuli) or None when a scan cap censors."""
    env = EnvironmentSpec(seed=int(seed), **env_kw)
    sce = ScenerySpec(seed=int(seed), **sce_kw)
    try:
        vd = valley(env, float(j), scan_cap)
    except CapExceeded:
        return None
    ann = annuli(vd, params, env)
    rep = check_events(vd, ann, env, sce, params)
    if not (rep.a_env_1 and rep.a_env_2 and rep.b_env):
        raise RuntimeError(
            "stage-1/stage-2 disagreement on environment events; "
            "the scan kernel and the potential builder have diverged")
    return rep, vd, ann, env, sce


def collect_good_pairs(config: ExperimentConfig, j, n_pairs, budget):
    """Rejection-sample environment-scenery pairs satisfying the full event
    conjunction at depth j.

    Returns (pairs, stats): pairs are (seed, valley, annuli, env, sce)
    tuples in attempt order; stats reports attempts used, stage counts, and
    whether the budget was exhausted before n_pairs were found.
    """
    env_kw = dict(config.env)
    sce_kw = dict(config.scenery)
    params = config.multiscale_params()
    dp = env_kw.get("delta_prime", 0.3)
    counts = np.zeros(6, dtype=np.int64)
    pairs = []
    used = 0
    n_stage2 = 0
    while used < budget and len(pairs) < n_pairs:
        block = min(int(budget - used), 10 * _CHUNK)
        c, seeds = stage1_scan(config.seed, j, dp, block, config.scan_cap,
                               config.threads, attempt_lo=used)
        counts += c
        used += block
        for s in seeds:
            out = _verify_pair(s, j, env_kw, sce_kw, params, config.scan_cap)
            n_stage2 += 1
            if out is not None and out[0].a_j:
                pairs.append((int(s),) + out[1:])
                if len(pairs) >= n_pairs:
                    break
    stats = {
        "attempts": used,
        "stage1_counts": counts,
        "stage2_checked": n_stage2,
        "good_pairs": len(pairs),
        "budget_exhausted": len(pairs) < n_pairs,
    }
    return pairs, stats


def run_good_env_frequency(config: ExperimentConfig):
    """Per j: empirical P(A(j)) with CI plus per-constituent frequencies."""
    t0 = time.time()
    if config.environment_spec().law != "two_point":
        raise ConfigurationError("good-environment scan needs the two-point law")
    attempts = int(config.extras.get("attempts", 10_000))
    sce_kw = dict(config.scenery)
    env_kw = dict(config.env)
    params = config.multiscale_params()
    dp = env_kw.get("delta_prime", 0.3)

    table = SummaryTable([
        "j", "attempts", "resolved", "censored", "p_a1", "p_a12",
        "p_b_given_a12", "p_env_joint", "stage2_checked", "n_ann_pass",
        "n_sce_pass", "n_good", "p_good", "p_good_ci_lo", "p_good_ci_hi",
    ])
    for j in config.j_grid:
        counts, seeds = stage1_scan(config.seed, j, dp, attempts,
                                    config.scan_cap, config.threads)
        resolved = int(counts[0])
        n_ann = n_sce = n_good = 0
        for s in seeds:
            out = _verify_pair(s, j, env_kw, sce_kw, params, config.scan_cap)
            if out is None:
                continue
            rep = out[0]
            ann_ok = all(rep.a_env_ann)
            sce_ok = all(rep.a_sce.values())
            n_ann += ann_ok
            n_sce += sce_ok
            n_good += rep.a_j
        p, lo, hi = proportion_ci(n_good, attempts)
        table.add(int(j), attempts, resolved, int(counts[5]),
                  counts[1] / max(resolved, 1), counts[2] / max(resolved, 1),
                  counts[3] / max(int(counts[2]), 1),
                  counts[4] / max(resolved, 1),
                  len(seeds), n_ann, n_sce, n_good, p, lo, hi)

    tables = {"good_env_frequency": table}
    table.write_csv(f"{config.out_dir}/good_env_frequency.csv")
    write_manifest(config, tables, time.time() - t0)
    return tables
