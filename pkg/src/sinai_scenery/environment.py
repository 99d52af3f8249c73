"""Environment, scenery and potential over the integer lattice.

The environment ``omega`` is an i.i.d. field of right-step probabilities,
the scenery ``xi`` an independent i.i.d. field of site rewards.  Both are
generated lazily and deterministically from a master seed via site-keyed
counter-based randomness (see :mod:`sinai_scenery.rng`), so any window of
the unbounded lattice can be materialized in any order with identical
values.

The potential is the cumulative sum of ``log((1-omega)/omega)`` anchored at
``V(0) = 0``; its valleys govern where the walk localizes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng

__all__ = [
    "ConfigurationError",
    "DomainError",
    "EnvironmentSpec",
    "ScenerySpec",
    "Potential",
    "LazyPotential",
    "sample_omega",
    "sample_omega_window",
    "potential",
    "sample_xi",
    "sample_xi_window",
    "tail_probability",
    "specs_to_json",
    "specs_from_json",
]

# Negative scenery values are clamped here so that kappa <= 1 tails stay
# representable in float64 (exp(U^{-1/kappa}) overflows with probability
# ~1.4e-3 per draw at kappa=1).  All tail checks in the suite use
# lambda <= e^3, far below the clamp.
XI_CLAMP = 1e300


class ConfigurationError(ValueError):
    """A spec violates its construction contract."""


class DomainError(ValueError):
    """An operation was called outside its domain."""


@dataclass(frozen=True)
class EnvironmentSpec:
    """Distribution of the environment plus its generation seed.

    The default law is the symmetric two-point law on
    ``{delta_prime, 1 - delta_prime}``, which satisfies the zero-mean
    log-ratio condition exactly.  ``mode="experiment"`` enforces the model
    assumptions (ellipticity, zero mean, positive variance); ``mode="raw"``
    admits arbitrary laws (e.g. constant omega) for analytics unit tests.
    """

    delta_prime: float = 0.3
    law: str = "two_point"  # "two_point" | "constant"
    seed: int = 0
    stream_id: int = rng.STREAM_OMEGA
    mode: str = "experiment"

    def __post_init__(self):
        if self.law not in ("two_point", "constant"):
            raise ConfigurationError(f"unknown environment law {self.law!r}")
        if not 0.0 < self.delta_prime < 1.0:
            raise ConfigurationError("delta_prime must lie in (0, 1)")
        if self.mode not in ("experiment", "raw"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "experiment":
            if self.law != "two_point":
                raise ConfigurationError(
                    "experiment mode requires the symmetric two-point law")
            if not 0.0 < self.delta_prime < 0.5:
                raise ConfigurationError(
                    "two-point parameter must lie in (0, 1/2) so that the "
                    "ellipticity bound is in (0, 1/2) and the log-ratio "
                    "variance is positive")

    @property
    def delta(self) -> float:
        """Ellipticity bound: omega in [delta, 1-delta] almost surely."""
        return min(self.delta_prime, 1.0 - self.delta_prime)

    @property
    def step_bound(self) -> float:
        """L = log((1-delta)/delta), the a.s. bound on potential increments."""
        return math.log((1.0 - self.delta) / self.delta)

    @property
    def sigma2(self) -> float:
        """Variance of log((1-omega_0)/omega_0)."""
        if self.law == "constant":
            return 0.0
        lr = math.log((1.0 - self.delta_prime) / self.delta_prime)
        return lr * lr  # symmetric two-point: values +-lr with mean 0

    def law_descriptor(self) -> dict:
        if self.law == "two_point":
            return {"kind": "two_point", "delta_prime": self.delta_prime}
        return {"kind": "constant", "value": self.delta_prime}

    def omega_key(self) -> np.uint64:
        return rng.derive_key(self.seed, self.stream_id, 0)


@dataclass(frozen=True)
class ScenerySpec:
    """Scenery law: atom at the essential supremum ``a`` plus a log-Pareto
    negative branch.

    With probability ``q_atom`` a site carries ``a``; otherwise it carries
    ``-exp(U^{-1/kappa})`` for ``U`` uniform on (0,1), which realizes the
    closed-form tail ``Q{xi^- > lam} = (1-q_atom) (log lam)^{-kappa}`` for
    ``lam >= e`` exactly.
    """

    a: float = 1.0
    q_atom: float = 0.3
    kappa: float = 4.0
    lambda0: float = math.e
    seed: int = 0
    stream_id: int = rng.STREAM_XI
    mode: str = "experiment"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")
        if not 0.0 < self.q_atom <= 1.0:
            raise ConfigurationError("q_atom must lie in (0, 1]")
        if self.lambda0 < math.e:
            raise ConfigurationError(
                "lambda0 must be >= e for the closed-form tail to hold")
        if self.mode not in ("experiment", "raw"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == "experiment" and self.a <= -math.e:
            raise ConfigurationError(
                "a must exceed -e, otherwise the negative branch beats the atom "
                "and a is no longer the essential supremum")

    def atom_key(self) -> np.uint64:
        return rng.derive_key(self.seed, self.stream_id, 0)

    def tail_key(self) -> np.uint64:
        return rng.derive_key(self.seed, self.stream_id, 1)

    def close_to_top_mass(self, rho: float) -> float:
        """q = Q{xi_0 >= a - rho}; at least q_atom."""
        t = self.a - rho
        q = self.q_atom
        if t <= -math.e:
            # part of the negative branch also qualifies
            q += (1.0 - self.q_atom) * (1.0 - math.log(-t) ** (-self.kappa))
        return q


def sample_omega_window(spec: EnvironmentSpec, lo: int, hi: int) -> np.ndarray:
    """omega at sites lo..hi inclusive (deterministic in (seed, site))."""
    if spec.law == "constant":
        return np.full(hi - lo + 1, spec.delta_prime)
    u = rng.uniform_at(spec.omega_key(), rng.site_counters(lo, hi))
    return np.where(u < 0.5, spec.delta_prime, 1.0 - spec.delta_prime)


def sample_omega(spec: EnvironmentSpec, site: int) -> float:
    """Right-step probability at one site."""
    return float(sample_omega_window(spec, site, site)[0])


def sample_xi_window(spec: ScenerySpec, lo: int, hi: int) -> np.ndarray:
    """xi at sites lo..hi inclusive."""
    sites = rng.site_counters(lo, hi)
    u_atom = rng.uniform_at(spec.atom_key(), sites)
    u_tail = rng.uniform_at(spec.tail_key(), sites)
    with np.errstate(over="ignore"):
        neg = -np.exp(np.power(u_tail, -1.0 / spec.kappa))
    neg = np.maximum(neg, -XI_CLAMP)
    return np.where(u_atom < spec.q_atom, spec.a, neg)


def sample_xi(spec: ScenerySpec, site: int) -> float:
    return float(sample_xi_window(spec, site, site)[0])


def tail_probability(spec: ScenerySpec, lam: float) -> float:
    """Q{xi_0^- > lam} in closed form; requires lam >= lambda0."""
    if lam < spec.lambda0:
        raise DomainError(f"lambda={lam} below lambda0={spec.lambda0}")
    return (1.0 - spec.q_atom) * math.log(lam) ** (-spec.kappa)


@dataclass
class Potential:
    """V over a site window [x_lo, x_hi], built per the three-branch sum."""

    x_lo: int
    x_hi: int
    values: np.ndarray
    step_bound: float

    def __call__(self, x) -> float:
        return self.values[np.asarray(x) - self.x_lo]

    def window(self, lo: int, hi: int) -> np.ndarray:
        """V at sites lo..hi inclusive as an array view."""
        if lo < self.x_lo or hi > self.x_hi:
            raise DomainError("window outside potential range")
        return self.values[lo - self.x_lo:hi - self.x_lo + 1]

    def max_rise(self, lo: int, hi: int) -> float:
        """max over lo <= x <= y <= hi of V(y) - V(x)."""
        seg = self.window(lo, hi)
        return float(np.max(seg - np.minimum.accumulate(seg)))


def _increments(spec: EnvironmentSpec, lo: int, hi: int) -> np.ndarray:
    om = sample_omega_window(spec, lo, hi)
    return np.log((1.0 - om) / om)


def potential(spec: EnvironmentSpec, x_lo: int, x_hi: int) -> Potential:
    """Potential over [x_lo, x_hi]; the window must contain 0.

    V(x) = sum_{i=1..x} log((1-omega_i)/omega_i) for x >= 1, V(0) = 0, and
    V(x) = -sum_{i=x+1..0} log((1-omega_i)/omega_i) for x <= -1.
    """
    if x_lo > 0 or x_hi < 0:
        raise DomainError("potential window must contain 0")
    v = np.zeros(x_hi - x_lo + 1)
    if x_hi >= 1:
        v[-x_lo + 1:] = np.cumsum(_increments(spec, 1, x_hi))
    if x_lo <= -1:
        left = _increments(spec, x_lo + 1, 0)
        v[:-x_lo] = -np.cumsum(left[::-1])[::-1]
    return Potential(x_lo, x_hi, v, spec.step_bound)


class LazyPotential:
    """Extending view of V for unbounded scans.

    Grows geometrically on demand in either direction (amortized O(n)).
    Values derive from the same site-keyed increments as :func:`potential`;
    extension re-anchors a block cumsum at the previous edge value, which
    can differ from a single global cumsum by accumulation order at the
    1e-12 relative level (far below any decision margin in the valley
    machinery, whose thresholds sit at fixed multiples of the step size).
    """

    _MIN_GROW = 1 << 16

    def __init__(self, spec: EnvironmentSpec):
        self.spec = spec
        self._right = np.zeros(1)   # V(0..hi)
        self._left = np.zeros(1)    # V(0), V(-1), ..., V(lo)
        self.hi = 0
        self.lo = 0

    def ensure_right(self, site: int) -> None:
        if site <= self.hi:
            return
        new_hi = max(site, 2 * self.hi, self._MIN_GROW)
        inc = _increments(self.spec, self.hi + 1, new_hi)
        ext = self._right[self.hi] + np.cumsum(inc)
        buf = np.empty(new_hi + 1)
        buf[:self.hi + 1] = self._right
        buf[self.hi + 1:] = ext
        self._right = buf
        self.hi = new_hi

    def ensure_left(self, site: int) -> None:
        if site >= self.lo:
            return
        new_lo = min(site, 2 * self.lo, -self._MIN_GROW)
        inc = _increments(self.spec, new_lo + 1, self.lo)
        ext = self._left[-self.lo] - np.cumsum(inc[::-1])
        buf = np.empty(-new_lo + 1)
        buf[:-self.lo + 1] = self._left
        buf[-self.lo + 1:] = ext
        self._left = buf
        self.lo = new_lo

    def value(self, site: int) -> float:
        if site >= 0:
            self.ensure_right(site)
            return float(self._right[site])
        self.ensure_left(site)
        return float(self._left[-site])

    def window(self, lo: int, hi: int) -> np.ndarray:
        self.ensure_left(min(lo, 0))
        self.ensure_right(max(hi, 0))
        out = np.empty(hi - lo + 1)
        if lo < 0:
            stop = min(hi, -1)  # negative sites lo..stop
            out[:stop - lo + 1] = self._left[-stop:-lo + 1][::-1]
        if hi >= 0:
            start = max(lo, 0)
            out[start - lo:] = self._right[start:hi + 1]
        return out


# --- spec (de)serialization ------------------------------------------------

_MANIFEST_KEYS = ("delta", "law", "a", "q_atom", "kappa", "lambda0", "seed")


def specs_to_json(env: EnvironmentSpec, scenery: ScenerySpec) -> str:
    """Canonical JSON for an (environment, scenery) pair.

    Key order is fixed to (delta, law, a, q_atom, kappa, lambda0, seed) and
    the output is byte-stable for reproducibility manifests.  Stream ids are
    fixed package constants and are not part of the document.
    """
    if env.seed != scenery.seed:
        raise ConfigurationError("manifest assumes a shared master seed")
    doc = {
        "delta": env.delta,
        "law": env.law_descriptor(),
        "a": scenery.a,
        "q_atom": scenery.q_atom,
        "kappa": scenery.kappa,
        "lambda0": scenery.lambda0,
        "seed": env.seed,
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=False)


def specs_from_json(text: str, mode: str = "experiment"):
    doc = json.loads(text)
    missing = [k for k in _MANIFEST_KEYS if k not in doc]
    if missing:
        raise ConfigurationError(f"manifest missing keys: {missing}")
    law = doc["law"]
    if law["kind"] == "two_point":
        env = EnvironmentSpec(delta_prime=law["delta_prime"], law="two_point",
                              seed=doc["seed"], mode=mode)
    else:
        env = EnvironmentSpec(delta_prime=law["value"], law="constant",
                              seed=doc["seed"], mode="raw")
    sce = ScenerySpec(a=doc["a"], q_atom=doc["q_atom"], kappa=doc["kappa"],
                      lambda0=doc["lambda0"], seed=doc["seed"], mode=mode)
    return env, sce
