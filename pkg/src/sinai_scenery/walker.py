"""Quenched walk simulation with streaming local-time accounting.

One simulation is strictly sequential; replicas are independent, each
keyed by (master seed, walk stream, replica), so parallel execution and
pausing cannot change results.  Local times live in a dense array over a
sliding window that doubles on demand (the walk range under the model
assumptions is O((log n)^2), so the window stays small); checkpoint rows
snapshot summaries, and the full site map is kept only for the final step.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, rng
from .environment import (ConfigurationError, DomainError, EnvironmentSpec,
                          ScenerySpec, sample_omega_window, sample_xi_window)

__all__ = [
    "WalkConfig",
    "TrajectoryRecord",
    "default_checkpoints",
    "register_hitting_targets",
    "simulate",
    "local_time_interval",
    "concentration_stat",
    "hitting_race",
    "escape_within_frequency",
    "confined_exit_mc",
]


def default_checkpoints(n_steps: int) -> tuple:
    """Geometric schedule with ratio 2 from 2^10, plus the final step."""
    if n_steps <= 0:
        return (0,)
    cps = []
    c = 1 << 10
    while c < n_steps:
        cps.append(c)
        c *= 2
    cps.append(n_steps)
    return tuple(cps)


@dataclass(frozen=True)
class WalkConfig:
    """Everything a simulation depends on; identical configs give
    bit-identical records."""

    env: EnvironmentSpec
    scenery: ScenerySpec
    n_steps: int
    checkpoints: tuple | None = None
    seed: int | None = None         # defaults to env.seed
    replica: int = 0
    targets: tuple = ()
    track_intervals: tuple = ()     # ((lo, hi), ...) local-time masses per checkpoint
    ell_values: tuple = ()          # concentration radii recorded per checkpoint
    stop_on_first_target: bool = False

    def __post_init__(self):
        if self.n_steps < 0:
            raise ConfigurationError("n_steps must be >= 0")
        cps = (default_checkpoints(self.n_steps) if self.checkpoints is None
               else tuple(self.checkpoints))
        if any(c < 0 or c > self.n_steps for c in cps):
            raise ConfigurationError("checkpoints must lie in [0, n_steps]")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ConfigurationError("checkpoints must be strictly increasing")
        if not cps or cps[-1] != self.n_steps:
            cps = cps + (self.n_steps,)
        object.__setattr__(self, "checkpoints", cps)

    @property
    def walk_seed(self) -> int:
        return self.env.seed if self.seed is None else self.seed

    def walk_key(self) -> np.uint64:
        return rng.derive_key(self.walk_seed, rng.STREAM_WALK, self.replica)


def register_hitting_targets(config: WalkConfig, targets) -> WalkConfig:
    """New config whose simulation records first hitting steps (n >= 1; the
    start site's entry is its first return)."""
    return replace(config, targets=tuple(int(t) for t in targets))


@dataclass
class TrajectoryRecord:
    """Per-checkpoint summaries plus the final local-time map."""

    config: WalkConfig
    steps: np.ndarray
    positions: np.ndarray
    z: np.ndarray
    range_lo: np.ndarray
    range_hi: np.ndarray
    max_site_lt: np.ndarray
    interval_mass: dict
    conc: dict
    hits: dict
    final_sites: np.ndarray
    final_counts: np.ndarray
    final_step: int

    def local_time_map(self) -> dict:
        return {int(s): int(c) for s, c in zip(self.final_sites, self.final_counts)}

    def checkpoint_index(self, step: int) -> int:
        idx = np.nonzero(self.steps == step)[0]
        if idx.size == 0:
            raise DomainError(f"step {step} was not a recorded checkpoint")
        return int(idx[0])

    def z_identity_gap(self) -> float:
        """Relative gap between streaming Z and the local-time-weighted sum
        over sites (summed in site order)."""
        xi = sample_xi_window(self.config.scenery,
                              int(self.final_sites.min()),
                              int(self.final_sites.max()))
        lo = int(self.final_sites.min())
        z_lt = float(np.sum(xi[self.final_sites - lo] * self.final_counts))
        z_stream = float(self.z[-1])
        scale = max(abs(z_lt), abs(z_stream), 1.0)
        return abs(z_lt - z_stream) / scale

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            cols = ["step", "position", "z", "z_over_n", "range_lo",
                    "range_hi", "max_site_lt"]
            cols += [f"conc_ell_{ell}" for ell in sorted(self.conc)]
            cols += [f"lt_{lo}_{hi}" for lo, hi in sorted(self.interval_mass)]
            w.writerow(cols)
            for i, n in enumerate(self.steps):
                row = [int(n), int(self.positions[i]), repr(float(self.z[i])),
                       repr(float(self.z[i] / max(int(n), 1))),
                       int(self.range_lo[i]), int(self.range_hi[i]),
                       int(self.max_site_lt[i])]
                row += [repr(float(self.conc[ell][i])) for ell in sorted(self.conc)]
                row += [int(self.interval_mass[iv][i])
                        for iv in sorted(self.interval_mass)]
                w.writerow(row)

    def final_json(self, path) -> None:
        doc = {
            "step": int(self.final_step),
            "local_time": {str(int(s)): int(c) for s, c in
                           zip(self.final_sites, self.final_counts)},
            "hits": {str(t): (int(h) if h is not None else None)
                     for t, h in self.hits.items()},
        }
        with open(path, "w") as f:
            json.dump(doc, f, separators=(",", ":"))


def _window_sum_max(lt: np.ndarray, lo: int, lo_vis: int, hi_vis: int,
                    ell: int) -> int:
    """max over x of sum of lt over [x-ell, x+ell]; lt indexed from lo.

    Windows partially overlapping the visited range are dominated by some
    fully-contained one, so the scan only needs full windows.
    """
    seg = lt[lo_vis - lo:hi_vis - lo + 1]
    width = 2 * ell + 1
    if width >= seg.size:
        return int(seg.sum())
    c = np.concatenate(([0], np.cumsum(seg)))
    return int(np.max(c[width:] - c[:-width]))


def concentration_from_lt(lt, lo, lo_vis, hi_vis, ell, n):
    return _window_sum_max(lt, lo, lo_vis, hi_vis, ell) / (n + 1)


def simulate(config: WalkConfig) -> TrajectoryRecord:
    """Run the walk, pausing at checkpoints to snapshot summaries."""
    key = config.walk_key()
    half = 1 << 11
    lo, hi = -half, half
    omega = sample_omega_window(config.env, lo, hi)
    xi = sample_xi_window(config.scenery, lo, hi)
    lt = np.zeros(hi - lo + 1, dtype=np.int64)
    lt[-lo] = 1
    istate = np.array([0, 0, lo, 0, 0, 1], dtype=np.int64)
    fstate = np.array([xi[-lo]], dtype=np.float64)
    targets = np.array(config.targets, dtype=np.int64)
    hit_steps = np.full(len(config.targets), -1, dtype=np.int64)

    n_cp = len(config.checkpoints)
    steps = np.zeros(n_cp, dtype=np.int64)
    positions = np.zeros(n_cp, dtype=np.int64)
    zs = np.zeros(n_cp)
    rlo = np.zeros(n_cp, dtype=np.int64)
    rhi = np.zeros(n_cp, dtype=np.int64)
    mlt = np.zeros(n_cp, dtype=np.int64)
    interval_mass = {iv: np.zeros(n_cp, dtype=np.int64)
                     for iv in config.track_intervals}
    conc = {ell: np.zeros(n_cp) for ell in config.ell_values}

    stopped = False
    recorded = 0
    for ci, cp in enumerate(config.checkpoints):
        while not stopped:
            code = _kernels.walk_kernel(key, cp, istate, fstate, omega, xi, lt,
                                        targets, hit_steps,
                                        config.stop_on_first_target)
            if code == _kernels.PAUSE_EDGE:
                # double the window on the side that was hit
                span = hi - lo + 1
                if istate[1] - lo <= 0:
                    new_lo, new_hi = lo - span, hi
                else:
                    new_lo, new_hi = lo, hi + span
                omega = sample_omega_window(config.env, new_lo, new_hi)
                xi = sample_xi_window(config.scenery, new_lo, new_hi)
                new_lt = np.zeros(new_hi - new_lo + 1, dtype=np.int64)
                new_lt[lo - new_lo:hi - new_lo + 1] = lt
                lt = new_lt
                lo, hi = new_lo, new_hi
                istate[2] = lo
                continue
            if code == _kernels.PAUSE_TARGET:
                stopped = True
            break
        t = int(istate[0])
        steps[ci] = t
        positions[ci] = istate[1]
        zs[ci] = fstate[0]
        rlo[ci] = istate[3]
        rhi[ci] = istate[4]
        mlt[ci] = istate[5]
        for iv in config.track_intervals:
            a = max(iv[0], lo)
            b = min(iv[1], hi)
            interval_mass[iv][ci] = lt[a - lo:b - lo + 1].sum() if a <= b else 0
        for ell in config.ell_values:
            conc[ell][ci] = concentration_from_lt(
                lt, lo, int(istate[3]), int(istate[4]), int(ell), t)
        recorded = ci + 1
        if stopped:
            break

    idx = np.nonzero(lt)[0]
    hits = {int(t): (int(h) if h >= 0 else None)
            for t, h in zip(targets, hit_steps)}
    return TrajectoryRecord(
        config=config,
        steps=steps[:recorded], positions=positions[:recorded],
        z=zs[:recorded], range_lo=rlo[:recorded], range_hi=rhi[:recorded],
        max_site_lt=mlt[:recorded],
        interval_mass={iv: v[:recorded] for iv, v in interval_mass.items()},
        conc={ell: v[:recorded] for ell, v in conc.items()},
        hits=hits,
        final_sites=(idx + lo).astype(np.int64),
        final_counts=lt[idx].copy(),
        final_step=int(istate[0]),
    )


def local_time_interval(record: TrajectoryRecord, checkpoint: int,
                        interval) -> int:
    """L(checkpoint, interval).  Exact for registered intervals at any
    checkpoint and for arbitrary intervals at the final one (summaries only
    are kept at intermediate checkpoints)."""
    iv = (int(interval[0]), int(interval[1]))
    ci = record.checkpoint_index(checkpoint)
    if iv in record.interval_mass:
        return int(record.interval_mass[iv][ci])
    if checkpoint != record.final_step:
        raise DomainError(
            "interval was not registered; only the final checkpoint keeps "
            "the full local-time map")
    if iv[0] > iv[1]:
        return 0
    mask = (record.final_sites >= iv[0]) & (record.final_sites <= iv[1])
    return int(record.final_counts[mask].sum())


def concentration_stat(record: TrajectoryRecord, checkpoint: int,
                       ell: int) -> float:
    """sup_x L(n, [x-ell, x+ell]) / (n+1) at the checkpoint.

    The walk's local time sums to n+1 (visits at times 0..n); the fraction
    is normalized by n+1 accordingly.
    """
    if ell < 0:
        raise DomainError("ell must be >= 0")
    ci = record.checkpoint_index(checkpoint)
    if int(ell) in record.conc:
        return float(record.conc[int(ell)][ci])
    if checkpoint != record.final_step:
        raise DomainError(
            "ell was not registered; only the final checkpoint keeps the "
            "full local-time map")
    n = int(record.steps[ci])
    lo = int(record.final_sites.min())
    hi = int(record.final_sites.max())
    lt = np.zeros(hi - lo + 1, dtype=np.int64)
    lt[record.final_sites - lo] = record.final_counts
    return concentration_from_lt(lt, lo, lo, hi, int(ell), n)


# --- bounded-run Monte Carlo helpers ---------------------------------------

def hitting_race(env: EnvironmentSpec, x: int, r: int, s: int,
                 n_replicas: int, seed: int, substream: int = 0,
                 step_cap: int = 10**9):
    """Fraction of replicas hitting r before s from x (empirical counterpart
    of the exact absorption probability).  Returns (wins_r, unresolved)."""
    if not r < x < s:
        raise DomainError("need r < x < s")
    omega = sample_omega_window(env, r, s)
    keys = rng.derive_keys(seed, rng.STREAM_WALK,
                           np.arange(n_replicas, dtype=np.int64)
                           + np.int64(substream) * np.int64(1 << 32))
    return _kernels.race_kernel(keys, omega, r, x, r, s, step_cap)


def escape_within_frequency(env: EnvironmentSpec, x: int, y: int, ell: int,
                            n_replicas: int, seed: int, substream: int = 0):
    """Empirical P^x{tau(y) < ell}."""
    lo, hi = x - ell - 1, x + ell + 1
    omega = sample_omega_window(env, lo, hi)
    keys = rng.derive_keys(seed, rng.STREAM_WALK,
                           np.arange(n_replicas, dtype=np.int64)
                           + np.int64(substream) * np.int64(1 << 32))
    hitcount = _kernels.tau_within_kernel(keys, omega, lo, x, y, int(ell))
    return hitcount / n_replicas


def confined_exit_mc(env: EnvironmentSpec, x: int, r: int, s: int,
                     n_replicas: int, seed: int, substream: int = 0,
                     step_cap: int = 10**8):
    """Empirical E^x[tau(s); tau(s) < tau(r)] with an explicit cap report.

    Returns (mean_contribution, hits_s, unresolved)."""
    if not r < x < s:
        raise DomainError("need r < x < s")
    omega = sample_omega_window(env, r, s)
    keys = rng.derive_keys(seed, rng.STREAM_WALK,
                           np.arange(n_replicas, dtype=np.int64)
                           + np.int64(substream) * np.int64(1 << 32))
    total, hits, unresolved = _kernels.confined_exit_kernel(
        keys, omega, r, x, r, s, step_cap)
    return total / n_replicas, hits, unresolved
