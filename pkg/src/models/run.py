"""
Run configuration merged from config/pipeline.yaml and CLI flags.
"""
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..utils.errors import ConfigError
from .plant import CommutationStructure, MeasurementReport, PlantSpec, RealizabilityReport, TransformedPlant
from .systems import AugmentedSystem, ReducedSystem


class SimulationOptions(BaseModel):
    horizon: float = Field(20.0, gt=0.0)
    dt: float = Field(1e-3, gt=0.0)
    z0: Optional[List[float]] = None
    q0: Optional[List[List[float]]] = None


class MonteCarloOptions(BaseModel):
    enabled: bool = False
    trials: int = Field(10000, ge=100)
    dt: float = Field(2e-3, gt=0.0)
    checkpoints: List[float] = Field(default_factory=lambda: [5.0, 10.0, 15.0, 20.0])


class SynthesisOptions(BaseModel):
    bisect_on_infeasible: bool = True
    bisect: bool = False


class RunConfig(BaseModel):
    """Everything one command needs; file references are checked on load."""
    command: str = "reproduce-example"
    plant: Path
    fault: Optional[Path] = None
    gains: Optional[Path] = None
    gamma: float = 1e-3
    seed: int = 0
    output_dir: Path = Path("output")
    override_condition_ii: bool = False
    simulation: SimulationOptions = Field(default_factory=SimulationOptions)
    monte_carlo: MonteCarloOptions = Field(default_factory=MonteCarloOptions)
    synthesis: SynthesisOptions = Field(default_factory=SynthesisOptions)

    @model_validator(mode="after")
    def _check_files(self) -> "RunConfig":
        for label in ("plant", "fault", "gains"):
            path = getattr(self, label)
            if path is not None and not path.is_file():
                raise ConfigError(f"{label} file not found: {path}")
        if self.command in ("synthesize", "reproduce-example") and self.gamma <= 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.command == "certify" and self.gains is None:
            raise ConfigError("certify needs --gains")
        return self


class ValidatedPlant(BaseModel):
    """A plant that passed the input checks, with its transformed forms."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: PlantSpec
    comm: CommutationStructure
    realizability: RealizabilityReport
    measurement: MeasurementReport
    transformed: Optional[TransformedPlant] = None
    augmented: Optional[AugmentedSystem] = None
    reduced: Optional[ReducedSystem] = None

    @property
    def passed(self) -> bool:
        return self.realizability.passed and self.measurement.passed

    @property
    def G(self) -> np.ndarray:
        return self.spec.measurement.G
