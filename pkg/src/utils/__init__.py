"""Utility modules package."""
from .logger import log, setup_logger
from .retry import create_retry_decorator, batch_count
from .errors import (
    QlftError,
    ConfigError,
    DimensionMismatchError,
    StructureError,
    CertificationError,
    FaultSpecError,
    ProjectionDivergedError,
    NoFeasibleRestart,
    SimulationDivergedError,
)

__all__ = [
    "log",
    "setup_logger",
    "create_retry_decorator",
    "batch_count",
    "QlftError",
    "ConfigError",
    "DimensionMismatchError",
    "StructureError",
    "CertificationError",
    "FaultSpecError",
    "ProjectionDivergedError",
    "NoFeasibleRestart",
    "SimulationDivergedError",
]
