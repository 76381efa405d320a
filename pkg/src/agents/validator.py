"""
Validator Agent - Loads input files and runs the plant checks.
"""
import json
from pathlib import Path
from typing import Any, Optional, Union

import aiofiles
import numpy as np
import yaml
from pydantic import ValidationError

from ..models.plant import CommutationStructure, PlantSpec
from ..models.run import ValidatedPlant
from ..models.simulation import FaultSignal
from ..models.systems import Gains
from ..skills.assembly_skills import AssemblySkills
from ..skills.realizability_skills import RealizabilitySkills
from ..skills.simulation_skills import SimulationSkills
from ..utils.errors import ConfigError
from ..utils.logger import log


class ValidatorAgent:
    """
    Validator Agent responsible for turning input files into checked models.

    Skills:
    - Realizability checks (conditions (i)-(iii), measurement matrix)
    - Observable/unobservable permutation
    - Augmented / reduced system assembly

    Tasks:
    - Read plant JSON, gains YAML and fault YAML
    - Report realizability and measurement verdicts
    - Produce the transformed plant for later stages
    """

    def __init__(self):
        self.realizability_skills = RealizabilitySkills()
        self.assembly_skills = AssemblySkills()
        self.simulation_skills = SimulationSkills()

    @staticmethod
    async def read_text(path: Union[str, Path]) -> str:
        path = Path(path)
        try:
            async with aiofiles.open(path, "r", encoding="utf-8") as f:
                text = await f.read()
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e}") from e
        if not text.strip():
            raise ConfigError(f"{path} is empty")
        return text

    async def load_json(self, path: Union[str, Path]) -> Any:
        text = await self.read_text(path)
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from e

    async def load_yaml(self, path: Union[str, Path]) -> Any:
        text = await self.read_text(path)
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: malformed YAML ({e})") from e

    async def load_plant(self, path: Union[str, Path]) -> PlantSpec:
        """
        Load and validate a plant specification.

        Args:
            path: Plant JSON file

        Returns:
            PlantSpec
        """
        spec = self.realizability_skills.parse_plant_spec(await self.load_json(path))
        p = spec.plant
        log.info(f"Loaded plant from {path}: n={p.n}, n_w={p.n_w}, n_u={p.n_u}, n_f={p.n_f}, n_y={p.n_y}")
        return spec

    async def load_gains(self, path: Union[str, Path], n_o: int) -> Gains:
        """Load (L, K) from YAML."""
        data = await self.load_yaml(path)
        if not isinstance(data, dict) or "L" not in data or "K" not in data:
            raise ConfigError(f"{path}: gains file needs L and K")
        try:
            gains = Gains(L=data["L"], K=data["K"], n_o=data.get("n_o", n_o))
        except (ValidationError, ValueError) as e:
            raise ConfigError(f"{path}: invalid gains ({e})") from e
        log.info(f"Loaded gains from {path}: L {gains.L.shape}, K {gains.K.shape}")
        return gains

    async def load_fault(self, path: Optional[Union[str, Path]], n_f: int, horizon: float) -> FaultSignal:
        """Fault signal from YAML, or f = 0 on [0, horizon] when no file is given."""
        if path is None:
            log.info("No fault file given; simulating with f = 0")
            return FaultSignal.zero(horizon, n_f)
        return self.simulation_skills.parse_fault(await self.load_yaml(path), n_f)

    def check(self, spec: PlantSpec, override_condition_ii: bool = False) -> ValidatedPlant:
        """Realizability and measurement checks; no transformation."""
        comm = CommutationStructure.for_plant(spec.plant)
        realizability = self.realizability_skills.check_physical_realizability(
            spec.plant, comm, override_condition_ii=override_condition_ii
        )
        measurement = self.realizability_skills.check_measurement_matrix(spec.measurement, comm.theta_y)
        return ValidatedPlant(spec=spec, comm=comm, realizability=realizability, measurement=measurement)

    def transform(self, validated: ValidatedPlant) -> ValidatedPlant:
        """Apply the permutation and build the augmented and reduced systems."""
        spec = validated.spec
        T = spec.T if spec.T is not None else np.eye(spec.plant.n)
        tp = self.realizability_skills.apply_transformation(spec.plant, validated.comm, T, spec.n_o)
        return validated.model_copy(update={
            "transformed": tp,
            "augmented": self.assembly_skills.build_augmented(tp),
            "reduced": self.assembly_skills.build_reduced(tp),
        })

    async def run(self, plant_path: Union[str, Path], override_condition_ii: bool = False) -> ValidatedPlant:
        """
        Run the validator agent: load, check and (when checks pass) transform.

        Args:
            plant_path: Plant JSON file
            override_condition_ii: Admit plants failing only condition (ii)

        Returns:
            ValidatedPlant; `transformed` is None when a check failed
        """
        log.info("Validator Agent started")
        spec = await self.load_plant(plant_path)
        validated = self.check(spec, override_condition_ii)
        if not validated.passed:
            log.error("Plant checks failed; skipping transformation")
            return validated
        validated = self.transform(validated)
        log.info("Validator Agent completed")
        return validated
