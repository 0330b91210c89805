"""UAV radio-resource-management workbench.

Two-stage pipeline: a parametric channel twin feeds a per-link beam-gain
optimizer, whose cached tables drive a single-step association environment
solved by multi-head PPO, a DQN baseline and classical heuristics.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, DatasetFormatError, EvaluationError,
                     GeometryError, InfeasibleError, OptimizerError,
                     TrainingError, UavRrmError)

__all__ = [
    "ConfigError", "DatasetFormatError", "EvaluationError", "GeometryError",
    "InfeasibleError", "OptimizerError", "TrainingError", "UavRrmError",
]
