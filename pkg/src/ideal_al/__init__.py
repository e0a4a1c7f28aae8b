"""Pool-based active learning with two-granularity inconsistency ranking."""

from .config import LoopConfig, load_config, parse_config
from .data import Dataset, load_dataset, synthetic_dataset
from .loop import ActiveLearningLoop, CycleReport, Oracle, Pool, run
from .model import Classifier

__version__ = "0.1.0"

__all__ = [
    "ActiveLearningLoop",
    "Classifier",
    "CycleReport",
    "Dataset",
    "LoopConfig",
    "Oracle",
    "Pool",
    "load_config",
    "load_dataset",
    "parse_config",
    "run",
    "synthetic_dataset",
]
