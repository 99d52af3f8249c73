"""Experiment configuration, deterministic parallel execution, and CSV output.

Reruns with an identical config produce byte-identical CSVs regardless of
worker count: tasks carry their own derived seeds, results are consumed in
submission order, and floats are written with shortest round-trip repr.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .. import __version__
from ..environment import (ConfigurationError, EnvironmentSpec, ScenerySpec)
from ..multiscale import DEFAULT_SCAN_CAP, MultiscaleParams

__all__ = ["ExperimentConfig", "SummaryTable", "run_tasks", "summarize",
           "proportion_ci", "replica_seed", "write_manifest"]


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run; everything an experiment may depend on."""

    name: str = ""
    seed: int = 0
    replicas: int = 100
    threads: int = 1
    out_dir: str = "out"
    scan_cap: int = DEFAULT_SCAN_CAP
    n_steps: int = 10**6
    env: dict = field(default_factory=dict)
    scenery: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    kappa_grid: tuple = (1.0, 4.0)
    j_grid: tuple = (8, 12, 16, 24)
    n_grid: tuple = (10**2, 10**3, 10**4, 10**5)
    ell_grid: tuple = (0, 5, 25, 100)
    extras: dict = field(default_factory=dict)

    _FIELDS = ("name", "seed", "replicas", "threads", "out_dir", "scan_cap",
               "n_steps", "env", "scenery", "params", "kappa_grid", "j_grid",
               "n_grid", "ell_grid", "extras")

    def __post_init__(self):
        if self.replicas < 1:
            raise ConfigurationError("replicas must be >= 1")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        for g in ("kappa_grid", "j_grid", "n_grid", "ell_grid"):
            object.__setattr__(self, g, tuple(getattr(self, g)))
            if not getattr(self, g):
                raise ConfigurationError(f"{g} must be nonempty")

    @classmethod
    def from_json(cls, path_or_dict, **overrides):
        if isinstance(path_or_dict, (str, os.PathLike)):
            try:
                with open(path_or_dict) as f:
                    doc = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigurationError(f"cannot read config: {e}") from e
        else:
            doc = dict(path_or_dict)
        doc.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(doc) - set(cls._FIELDS)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def environment_spec(self, seed=None, **kw) -> EnvironmentSpec:
        args = dict(self.env)
        args.update(kw)
        args["seed"] = self.seed if seed is None else seed
        return EnvironmentSpec(**args)

    def scenery_spec(self, seed=None, **kw) -> ScenerySpec:
        args = dict(self.scenery)
        args.update(kw)
        args["seed"] = self.seed if seed is None else seed
        return ScenerySpec(**args)

    def multiscale_params(self, **kw) -> MultiscaleParams:
        args = dict(self.params)
        args.update(kw)
        return MultiscaleParams(**args)

    def canonical_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def replica_seed(master: int, cell: int, rep: int) -> int:
    """Derived 63-bit seed for (cell, replica); pure and collision-resistant."""
    from .. import rng
    key = rng.derive_key(master, 1000 + cell, rep)
    return int(key & np.uint64(0x7FFFFFFFFFFFFFFF))


def run_tasks(worker, payloads, threads: int):
    """Run ``worker(payload)`` over payloads; results in submission order."""
    if threads <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        futures = [ex.submit(worker, p) for p in payloads]
        return [f.result() for f in futures]


def summarize(values) -> dict:
    """Median/mean/quantiles plus a normal-approximation CI for the mean."""
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if n == 0:
        return dict(n=0, median=float("nan"), mean=float("nan"),
                    q10=float("nan"), q90=float("nan"),
                    ci_lo=float("nan"), ci_hi=float("nan"))
    mean = float(np.mean(v))
    sd = float(np.std(v, ddof=1)) if n > 1 else 0.0
    half = 1.96 * sd / np.sqrt(n)
    return dict(n=int(n), median=float(np.median(v)), mean=mean,
                q10=float(np.quantile(v, 0.1)), q90=float(np.quantile(v, 0.9)),
                ci_lo=mean - half, ci_hi=mean + half)


def proportion_ci(k: int, n: int):
    """Normal-approximation binomial CI for k successes out of n."""
    if n == 0:
        return float("nan"), float("nan"), float("nan")
    p = k / n
    half = 1.96 * np.sqrt(max(p * (1 - p), 1e-12) / n)
    return p, max(p - half, 0.0), min(p + half, 1.0)


class SummaryTable:
    """Rows + columns with deterministic CSV serialization.

    Every aggregated row carries its replica count and CI; nothing is
    emitted as a bare point estimate.
    """

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError("row width mismatch")
        self.rows.append(list(row))

    def write_csv(self, path):
        import csv
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([self._fmt(x) for x in row])

    @staticmethod
    def _fmt(x):
        if isinstance(x, (bool, np.bool_)):
            return int(x)
        if isinstance(x, (float, np.floating)):
            return repr(float(x))
        if isinstance(x, (int, np.integer)):
            return int(x)
        return x

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def write_manifest(config: ExperimentConfig, tables: dict, wall_s: float):
    """JSON manifest with the config hash, seed, versions and wall time."""
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, f"{config.name}_manifest.json")
    doc = {
        "experiment": config.name,
        "config": json.loads(config.canonical_json()),
        "config_sha256": config.sha256(),
        "seed": config.seed,
        "versions": {"sinai_scenery": __version__,
                     "numpy": np.__version__},
        "wall_time_s": round(wall_s, 3),
        "tables": {name: len(t.rows) for name, t in tables.items()},
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
    return path
