"""Exception types shared across the workbench."""


class UavRrmError(Exception):
    """Base class for all workbench errors."""


class ConfigError(UavRrmError):
    """Invalid configuration value or malformed config file."""


class GeometryError(UavRrmError):
    """Degenerate geometry, e.g. coincident UAV and BS positions."""


class DatasetFormatError(UavRrmError):
    """Bad magic, version mismatch, truncation or shape mismatch in a binary file."""


class OptimizerError(UavRrmError):
    """Non-finite objective or other failure inside the scan-angle optimizer."""


class TrainingError(UavRrmError):
    """Non-finite loss/gradient or shape mismatch during training."""


class InfeasibleError(UavRrmError):
    """Assignment instance cannot satisfy its matching constraints."""


class EvaluationError(UavRrmError):
    """Checkpoint/dataset mismatch or consistency-oracle failure during evaluation."""
