"""Standing oracle suite for the quenched analytics.

Runs the exact-vs-oracle agreement sweep, the complement identity, the
excursion spot values and envelope, and Monte Carlo checks of the crossing
and escape/confinement inequalities.  Each check yields a
:class:`BoundReport`; the CLI ``check`` subcommand exits nonzero if any is
unsatisfied.
"""

from __future__ import annotations

import numpy as np

from . import rng
from .environment import EnvironmentSpec, potential
from .quenched import (BoundReport, confined_exit_bound,
                       excursion_local_time_exact, golosov_escape_bound,
                       hit_prob_exact, hit_prob_oracle, martingale_bounds,
                       potential_crossing_mc)
from .walker import confined_exit_mc, escape_within_frequency, hitting_race

__all__ = ["oracle_suite"]


def _rand_cases(seed, n_cases, width_lo=5, width_hi=50,
                deltas=(0.1, 0.3, 0.45)):
    """Deterministic pseudo-random (env, x, r, s) cases."""
    u = rng.uniform_at(rng.derive_key(seed, 900, 0),
                       np.arange(3 * n_cases, dtype=np.int64))
    for i in range(n_cases):
        dp = deltas[int(u[3 * i] * len(deltas))]
        width = width_lo + int(u[3 * i + 1] * (width_hi - width_lo + 1))
        x = 1 + int(u[3 * i + 2] * (width - 1))
        env = EnvironmentSpec(delta_prime=dp, seed=seed * 1_000_003 + i)
        yield env, x, 0, width


def oracle_suite(seed: int = 0, n_env: int = 300, n_mc: int = 20_000):
    """Full quenched-analytics oracle suite; returns a list of BoundReports."""
    reports = []

    # 1. exact formula vs tridiagonal oracle
    worst = 0.0
    for env, x, r, s in _rand_cases(seed, n_env):
        pot = potential(env, r, s)
        p1 = hit_prob_exact(pot, x, r, s)
        p2 = hit_prob_oracle(env, x, r, s)
        worst = max(worst, abs(p1 - p2) / max(p2, 1e-300))
    reports.append(BoundReport.check("hit_prob exact-vs-oracle max rel err",
                                     worst, upper=1e-10))

    # 2. complement identity
    worst = 0.0
    for env, x, r, s in _rand_cases(seed + 1, n_env // 3):
        pot = potential(env, r, s)
        p_r = hit_prob_exact(pot, x, r, s)
        v_all = pot.window(r, s - 1)
        v_left = pot.window(r, x - 1)
        m = np.max(v_all)
        p_s = float(np.exp(np.log(np.sum(np.exp(v_left - m)))
                           - np.log(np.sum(np.exp(v_all - m)))))
        worst = max(worst, abs(p_r + p_s - 1.0))
    reports.append(BoundReport.check("hit_prob complement identity gap",
                                     worst, upper=1e-12))

    # 3. monotonicity in the start point
    ok = True
    for env, _, r, s in _rand_cases(seed + 2, n_env // 3):
        pot = potential(env, r, s)
        probs = [hit_prob_exact(pot, x, r, s) for x in range(r + 1, s)]
        ok &= all(b <= a + 1e-12 for a, b in zip(probs, probs[1:]))
    reports.append(BoundReport.check("hit_prob nonincreasing in start",
                                     1.0 if ok else 0.0, lower=1.0))

    # 4. excursion local time: spot values and envelope
    half = EnvironmentSpec(delta_prime=0.5, law="constant", mode="raw", seed=0)
    third = EnvironmentSpec(delta_prime=1 / 3, law="constant", mode="raw", seed=0)
    e1, _ = excursion_local_time_exact(half, 0, 1)
    e2, _ = excursion_local_time_exact(half, 0, 2)
    e3, _ = excursion_local_time_exact(third, 0, 1)
    reports.append(BoundReport.check("excursion L(tau(0),1), omega=1/2",
                                     e1, 1.0 - 1e-12, 1.0 + 1e-12))
    reports.append(BoundReport.check("excursion L(tau(0),2), omega=1/2",
                                     e2, 1.0 - 1e-12, 1.0 + 1e-12))
    reports.append(BoundReport.check("excursion L(tau(0),1), omega=1/3",
                                     e3, 0.5 - 1e-12, 0.5 + 1e-12))
    lo_ratio, hi_ratio = np.inf, -np.inf
    dp = 0.3
    envelope = (dp / (1 - dp), (1 - dp) / dp)
    u = rng.uniform_at(rng.derive_key(seed, 901, 0),
                       np.arange(2 * n_env, dtype=np.int64))
    for i in range(n_env):
        env = EnvironmentSpec(delta_prime=dp, seed=seed * 2_000_003 + i)
        b = int(u[2 * i] * 21) - 10
        off = 1 + int(u[2 * i + 1] * 10)
        x = b + off if u[2 * i] < 0.5 else b - off
        _, ratio = excursion_local_time_exact(env, b, x)
        lo_ratio = min(lo_ratio, ratio)
        hi_ratio = max(hi_ratio, ratio)
    reports.append(BoundReport.check("excursion ratio min (delta envelope)",
                                     lo_ratio, lower=envelope[0] - 1e-12))
    reports.append(BoundReport.check("excursion ratio max (delta envelope)",
                                     hi_ratio, upper=envelope[1] + 1e-12))

    # 5. crossing probability inside the martingale bounds
    env = EnvironmentSpec(delta_prime=0.3, seed=seed)
    for (x, y, z) in ((0.0, 1.0, 4.0), (-2.0, 0.5, 3.0), (0.0, 2.0, 10.0)):
        lo, hi = martingale_bounds(x, y, z, env.step_bound)
        p = potential_crossing_mc(env, x, y, z, n_mc, substream=7)
        slack = 3 * np.sqrt(0.25 / n_mc)
        reports.append(BoundReport.check(
            f"crossing P_y(up first) in bounds, (x,y,z)=({x},{y},{z})",
            p, lower=lo, upper=hi, slack=slack))

    # 6. escape-time bound (forward and backward)
    for i in range(3):
        env = EnvironmentSpec(delta_prime=0.3, seed=seed * 31 + i)
        pot = potential(env, -30, 30)
        ell = 40
        bound_f = golosov_escape_bound(pot, 0, 12, ell, "forward")
        freq_f = escape_within_frequency(env, 0, 12, ell, n_mc, seed + 13 + i)
        slack = 3 * np.sqrt(0.25 / n_mc)
        reports.append(BoundReport.check(
            f"escape fwd P(tau(12)<{ell}) <= bound (env {i})",
            freq_f - min(bound_f, 1.0), upper=0.0, slack=slack))
        bound_b = golosov_escape_bound(pot, 0, -12, ell, "backward")
        freq_b = escape_within_frequency(env, 0, -12, ell, n_mc, seed + 17 + i)
        reports.append(BoundReport.check(
            f"escape bwd P(tau(-12)<{ell}) <= bound (env {i})",
            freq_b - min(bound_b, 1.0), upper=0.0, slack=slack))

    # 7. confined-exit expectation bound
    for i in range(3):
        env = EnvironmentSpec(delta_prime=0.3, seed=seed * 53 + i)
        pot = potential(env, -8, 8)
        bound = confined_exit_bound(pot, -8, 8)
        mean, hits, unresolved = confined_exit_mc(env, 0, -8, 8, n_mc,
                                                  seed + 19 + i)
        reports.append(BoundReport.check(
            f"confined E[tau(s);s first] <= bound (env {i})",
            mean, upper=bound, slack=0.01 * bound))
        reports.append(BoundReport.check(
            f"confined unresolved replicas (env {i})", unresolved, upper=0))

    # 8. Monte Carlo hitting race vs exact formula
    for i, (env, x, r, s) in enumerate(_rand_cases(seed + 3, 3, width_hi=25)):
        pot = potential(env, r, s)
        p = hit_prob_exact(pot, x, r, s)
        wins, unresolved = hitting_race(env, x, r, s, n_mc, seed + 23 + i)
        slack = 3 * np.sqrt(max(p * (1 - p), 1e-12) / n_mc)
        reports.append(BoundReport.check(
            f"race frequency vs exact (case {i})",
            wins / n_mc, lower=p - slack, upper=p + slack))
    return reports
