from .harness import ExperimentConfig, SummaryTable
from .dichotomy import run_dichotomy
from .concentration import run_concentration
from .hirsch import run_hirsch
from .valleys import run_valley_scaling
from .good_env import run_good_env_frequency, collect_good_pairs
from .localization import run_localization

__all__ = [
    "ExperimentConfig", "SummaryTable",
    "run_dichotomy", "run_concentration", "run_hirsch",
    "run_valley_scaling", "run_good_env_frequency", "collect_good_pairs",
    "run_localization",
]
