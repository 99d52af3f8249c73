"""Numba kernels for the hot loops.

All randomness inside kernels is counter-based: a draw is a pure function
of (key, counter), so any kernel can be paused, resumed, or re-run with
identical results, and replicas are independent of scheduling.  Environment
windows are precomputed arrays; only walk noise is drawn in-kernel.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import mix64, u01, derive_key, GOLDEN

# return codes of walk_kernel
PAUSE_CHECKPOINT = 0
PAUSE_EDGE = 1
PAUSE_TARGET = 2


@njit(cache=True)
def walk_kernel(key, target_step, istate, fstate, omega, xi, lt,
                targets, hit_steps, stop_on_first_target):
    """Advance the quenched walk until ``target_step`` or a window edge.

    istate: [t, pos, window_lo, min_pos, max_pos, max_site_lt]
    fstate: [z]
    Steps are driven by u01(key, t) with t the absolute step index, so the
    trajectory is invariant under pausing.  Returns a PAUSE_* code.
    """
    t = istate[0]
    pos = istate[1]
    lo = istate[2]
    min_pos = istate[3]
    max_pos = istate[4]
    max_lt = istate[5]
    z = fstate[0]
    n = omega.shape[0]
    n_targets = targets.shape[0]
    idx = pos - lo
    code = PAUSE_CHECKPOINT
    while True:
        if t >= target_step:
            code = PAUSE_CHECKPOINT
            break
        if idx <= 0 or idx >= n - 1:
            code = PAUSE_EDGE
            break
        t += 1
        if u01(key, t) < omega[idx]:
            pos += 1
            idx += 1
        else:
            pos -= 1
            idx -= 1
        c = lt[idx] + 1
        lt[idx] = c
        if c > max_lt:
            max_lt = c
        z += xi[idx]
        if pos < min_pos:
            min_pos = pos
        elif pos > max_pos:
            max_pos = pos
        if n_targets > 0:
            for k in range(n_targets):
                if targets[k] == pos and hit_steps[k] < 0:
                    hit_steps[k] = t
                    if stop_on_first_target:
                        code = PAUSE_TARGET
                        break
            if code == PAUSE_TARGET:
                break
    istate[0] = t
    istate[1] = pos
    istate[3] = min_pos
    istate[4] = max_pos
    istate[5] = max_lt
    fstate[0] = z
    return code


@njit(cache=True)
def race_kernel(keys, omega, lo, x, r, s, step_cap):
    """For each replica key: does the walk from x hit r before s?

    Returns (wins_r, unresolved); unresolved counts replicas that exhausted
    step_cap (reported, never silently dropped).
    """
    wins = 0
    unresolved = 0
    for i in range(keys.shape[0]):
        key = keys[i]
        pos = x
        t = np.int64(0)
        while t < step_cap:
            t += 1
            if u01(key, t) < omega[pos - lo]:
                pos += 1
            else:
                pos -= 1
            if pos == r:
                wins += 1
                break
            if pos == s:
                break
        else:
            unresolved += 1
    return wins, unresolved


@njit(cache=True)
def tau_within_kernel(keys, omega, lo, x, y, ell):
    """Count replicas with tau(y) < ell for the walk started at x.

    The omega window must cover [x-ell, x+ell]; in ell-1 steps the walk
    cannot leave it.
    """
    hits = 0
    for i in range(keys.shape[0]):
        key = keys[i]
        pos = x
        for t in range(1, ell):
            if u01(key, t) < omega[pos - lo]:
                pos += 1
            else:
                pos -= 1
            if pos == y:
                hits += 1
                break
    return hits


@njit(cache=True)
def confined_exit_kernel(keys, omega, lo, x, r, s, step_cap):
    """Sample tau(s) * 1{tau(s) < tau(r)} from x; returns (sum, hits_s,
    unresolved)."""
    total = 0.0
    hits = 0
    unresolved = 0
    for i in range(keys.shape[0]):
        key = keys[i]
        pos = x
        t = np.int64(0)
        while t < step_cap:
            t += 1
            if u01(key, t) < omega[pos - lo]:
                pos += 1
            else:
                pos -= 1
            if pos == s:
                total += t
                hits += 1
                break
            if pos == r:
                break
        else:
            unresolved += 1
    return total, hits, unresolved


@njit(cache=True)
def hirsch_kernel(keys, n_sites, threshold, step):
    """Count replicas whose two-point potential stays below ``threshold``
    on [0, n_sites].  V(0)=0 always qualifies; increments are +-step."""
    ok = 0
    for i in range(keys.shape[0]):
        key = keys[i]
        v = 0.0
        passed = True
        for x in range(1, n_sites + 1):
            if u01(key, x) < 0.5:
                v += step
            else:
                v -= step
            if v >= threshold:
                passed = False
                break
        if passed:
            ok += 1
    return ok


@njit(cache=True)
def env_stage1_kernel(master_seed, attempt_lo, n_attempts, j, delta_prime,
                      stream_omega, scan_cap, counts, survivors):
    """Stage-1 good-environment filter over two-point environments.

    Environment of attempt k has seed ``master_seed + attempt_lo + k`` (the
    exact seed the python-level spec uses).  Evaluates the depth event A1,
    the descent event A2, and the left control B literally, abandoning a
    scan as soon as the outcome is decided: V below -4j falsifies A1, and a
    new minimum after a rise above j/4 falsifies A2, so the scan length is
    dominated by the exit time of (-4j, j) rather than the heavy-tailed d+.
    Appends seeds of attempts passing all three events to ``survivors``.

    counts accumulates [resolved, a1, a1&a2, b(|a1&a2), all3, censored];
    abandoned attempts count as resolved with their event false.
    Returns the number of survivors appended.
    """
    step = np.log((1.0 - delta_prime) / delta_prime)
    n_surv = 0
    for k in range(n_attempts):
        seed = master_seed + attempt_lo + k
        key = derive_key(seed, stream_omega, 0)
        # right scan; abort once V < -4j (A1 decidedly false).  The scan is
        # then bounded by the exit time of (-4j, j), not the heavy-tailed d+.
        v = 0.0
        vmin = 0.0
        max_rise = 0.0
        rise_at_b = 0.0
        aborted = False
        d_plus = np.int64(-1)
        for n in range(1, scan_cap + 1):
            if u01(key, n) < 0.5:
                v += step
            else:
                v -= step
            if v < vmin:
                vmin = v
                rise_at_b = max_rise
                if vmin < -4.0 * j:
                    aborted = True
                    break
            elif v - vmin > max_rise:
                max_rise = v - vmin
            if v >= j:
                d_plus = n
                break
        if not aborted and d_plus < 0:
            counts[5] += 1
            continue
        counts[0] += 1
        a1 = (-4.0 * j <= vmin) and (vmin <= -3.0 * j)
        a2 = rise_at_b <= j / 4.0
        if a1:
            counts[1] += 1
        if not (a1 and a2):
            continue
        counts[2] += 1
        # left scan: V(-n) = V(1-n) - log((1-omega_{1-n})/omega_{1-n}),
        # so the n-th leftward step draws omega at site 1-n; a drawdown
        # above j/3 falsifies B and abandons the scan
        w = 0.0
        wmin = 0.0
        run_max = 0.0
        max_dd = 0.0
        b_alive = True
        d_minus = np.int64(-1)
        for n in range(1, scan_cap + 1):
            if u01(key, np.int64(1 - n)) < 0.5:
                w -= step
            else:
                w += step
            if w < wmin:
                wmin = w
            if run_max - w > max_dd:
                max_dd = run_max - w
                if max_dd > j / 3.0:
                    b_alive = False
                    break
            if w > run_max:
                run_max = w
            if w >= j:
                d_minus = n
                break
        if b_alive and d_minus < 0:
            counts[5] += 1
            continue
        b_env = b_alive and (wmin <= -j / 6.0) and (max_dd <= j / 3.0)
        if b_env:
            counts[3] += 1
            counts[4] += 1
            if n_surv < survivors.shape[0]:
                survivors[n_surv] = seed
            n_surv += 1
    return n_surv


@njit(cache=True)
def max_rise_scan(v):
    """max over x <= y of v[y] - v[x] in one pass."""
    run_min = v[0]
    best = 0.0
    for i in range(1, v.shape[0]):
        if v[i] - run_min > best:
            best = v[i] - run_min
        if v[i] < run_min:
            run_min = v[i]
    return best
