"""
Reporter Agent - Writes run artifacts.
"""
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from ..models.certificate import GammaSearch, Outcome, SynthesisResult
from ..models.run import ValidatedPlant
from ..models.simulation import MomentTrajectory, SimulationSummary
from ..skills.publishing_skills import PublishingSkills
from ..utils.logger import log


class ReporterAgent:
    """
    Reporter Agent responsible for the files each command leaves behind.

    Tasks:
    - Check report (realizability + measurement)
    - Transformed / augmented / reduced systems
    - Synthesis and certification outcomes
    - Trajectory CSV and simulation summary
    """

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        self.publishing_skills = PublishingSkills(output_dir)

    async def save_check(self, validated: ValidatedPlant) -> str:
        report = {
            "passed": validated.passed,
            "realizability": validated.realizability,
            "realizability_passed": validated.realizability.passed,
            "measurement": validated.measurement,
            "measurement_passed": validated.measurement.passed,
            "G": validated.G,
        }
        return await self.publishing_skills.save_json(report, "check_report.json")

    async def save_transform(self, validated: ValidatedPlant) -> str:
        payload = {
            "transformed": validated.transformed,
            "augmented": validated.augmented,
            "reduced": validated.reduced,
        }
        return await self.publishing_skills.save_json(payload, "transform.json")

    async def save_outcome(self, outcome: Union[Outcome, GammaSearch], filename: str) -> str:
        """Synthesis / certification outcome; feasible results carry their full report."""
        if isinstance(outcome, SynthesisResult):
            payload: Dict[str, object] = {
                "result": outcome,
                "passed": outcome.report.passed,
                "trace_y2": outcome.trace_y2,
            }
        elif isinstance(outcome, GammaSearch):
            payload = {"search": outcome, "found": outcome.found}
        else:
            payload = {"result": outcome, "passed": False}
        return await self.publishing_skills.save_json(payload, filename)

    async def save_simulation(
        self, traj: MomentTrajectory, envelope: Optional[np.ndarray], summary: SimulationSummary
    ) -> Dict[str, str]:
        return {
            "trajectory": await self.publishing_skills.save_trajectory(traj, "trajectory.csv", envelope),
            "summary": await self.publishing_skills.save_json(summary, "simulation.json"),
        }

    @staticmethod
    def log_outcome(label: str, outcome: Union[Outcome, GammaSearch]) -> None:
        if isinstance(outcome, GammaSearch):
            outcome = outcome.result or outcome.last_infeasible
        if outcome is None:
            log.info(f"{label}: no outcome")
        elif isinstance(outcome, SynthesisResult):
            r = outcome.report
            log.info(
                f"{label}: certified, Tr(Y2) = {outcome.gamma_achieved:.6g}, "
                f"c = {r.certificate.c if r.certificate else float('nan'):.4g}, "
                f"restart {outcome.diagnostics.accepted_restart} ({outcome.diagnostics.source})"
            )
        else:
            log.info(f"{label}: infeasible ({outcome.reason})")
