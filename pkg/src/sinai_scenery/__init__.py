"""Sinai's walk in i.i.d. random scenery: simulation and exact analytics.

Subpackages:
  environment  lazily generated environment, scenery, and potential
  quenched     closed-form hitting analytics and inequality checks
  multiscale   valleys, the scale ladder, annuli, good-pair events
  walker       quenched walk simulation with local-time accounting
  experiments  reproducible experiment harness and the six experiments
"""

__version__ = "0.1.0"

from .environment import (ConfigurationError, DomainError, EnvironmentSpec,
                          Potential, ScenerySpec, potential, sample_omega,
                          sample_xi, tail_probability)
from .multiscale import (Annuli, CapExceeded, EventReport, MultiscaleParams,
                         ScaleLadder, ValleyDecomposition, annuli,
                         check_events, nu_crossing, scale_ladder,
                         sum_epsilon_check, sum_gamma_tail_check, valley)
from .quenched import (BoundReport, confined_exit_bound,
                       excursion_local_time_exact, golosov_escape_bound,
                       hit_prob_exact, hit_prob_oracle, martingale_bounds)
from .walker import (TrajectoryRecord, WalkConfig, concentration_stat,
                     local_time_interval, register_hitting_targets, simulate)
