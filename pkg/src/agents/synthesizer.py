"""
Synthesizer Agent - Solves the lifted LMI problem for (L, K).
"""
from typing import Optional, Union

from ..models.certificate import GammaSearch, Outcome, SynthesisResult
from ..models.plant import FaultBounds
from ..models.run import ValidatedPlant
from ..skills.lmi_skills import LMISkills
from ..utils.logger import log


class SynthesizerAgent:
    """
    Synthesizer Agent responsible for gain synthesis.

    Skills:
    - Lifted problem assembly (Case 1 / Case 2)
    - Alternating projections with warm-started restarts
    - Gamma bisection

    Tasks:
    - Solve at the requested gamma
    - Optionally bisect gamma when the request is infeasible
    """

    def __init__(self, lmi_skills: Optional[LMISkills] = None):
        self.lmi_skills = lmi_skills or LMISkills()

    async def solve(self, validated: ValidatedPlant, bounds: FaultBounds, gamma: float, seed: int) -> Outcome:
        """Single synthesis attempt at `gamma`."""
        return await self.lmi_skills.synthesize(
            validated.transformed, validated.reduced, validated.G, bounds, gamma, seed=seed
        )

    async def run(
        self,
        validated: ValidatedPlant,
        bounds: FaultBounds,
        gamma: float,
        seed: int = 0,
        bisect: bool = False,
    ) -> Union[Outcome, GammaSearch]:
        """
        Run the synthesizer agent.

        Args:
            validated: Transformed plant
            bounds: Fault bounds (alpha, beta)
            gamma: Requested bound on Tr(Y2)
            seed: Master seed for the restarts
            bisect: Search gamma when the request is infeasible

        Returns:
            Outcome, or GammaSearch when bisecting
        """
        log.info(f"Synthesizer Agent started (gamma = {gamma:g}, seed = {seed})")
        if bisect:
            search = await self.lmi_skills.bisect_gamma(
                lambda g: self.solve(validated, bounds, g, seed), gamma
            )
            if search.found:
                log.info(f"Gamma search: certified Tr(Y2) = {search.upper:.6g} (requested {gamma:g})")
            else:
                log.warning(f"Gamma search found no certified solution up to {search.lower:g}")
            return search

        outcome = await self.solve(validated, bounds, gamma, seed)
        if isinstance(outcome, SynthesisResult):
            log.info(f"Synthesis succeeded: Tr(Y2) = {outcome.gamma_achieved:.6g} <= {gamma:g}")
        else:
            log.warning(f"Synthesis infeasible: {outcome.reason}")
        return outcome
