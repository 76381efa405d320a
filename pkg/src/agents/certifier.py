"""
Certifier Agent - Verdicts for externally supplied gains.
"""
from typing import Optional, Tuple

from ..models.certificate import Certificate, Outcome, SynthesisResult
from ..models.plant import FaultBounds
from ..models.run import ValidatedPlant
from ..models.systems import ClosedLoop, Gains
from ..skills.lmi_skills import LMISkills
from ..utils.logger import log


class CertifierAgent:
    """
    Certifier Agent responsible for fixed-gain certification.

    Tasks:
    - Close the loop for given (L, K)
    - Decide whether a P > 0 with Tr(Y2) <= gamma exists
    - Provide the decay certificate used by the simulator
    """

    def __init__(self, lmi_skills: Optional[LMISkills] = None):
        self.lmi_skills = lmi_skills or LMISkills()

    def close_loop(self, validated: ValidatedPlant, gains: Gains) -> ClosedLoop:
        return self.lmi_skills.assembly.close_loop(validated.transformed, gains, validated.G)

    def certificate_for(
        self, cl: ClosedLoop, bounds: FaultBounds, gamma: float
    ) -> Tuple[Optional[Certificate], Optional[float]]:
        """
        Decay certificate from the minimal-trace P, regardless of gamma.

        Returns (certificate or None, minimal Tr(Y2) or None).
        """
        minimal = self.lmi_skills.minimal_certificate(cl, bounds, gamma)
        if minimal is None:
            return None, None
        _, report = minimal
        return report.certificate, report.trace_y2

    async def run(self, validated: ValidatedPlant, gains: Gains, bounds: FaultBounds, gamma: float) -> Outcome:
        """
        Run the certifier agent.

        Args:
            validated: Transformed plant
            gains: Gains to certify
            bounds: Fault bounds
            gamma: Requested bound on Tr(Y2)

        Returns:
            SynthesisResult when certified, Infeasible otherwise
        """
        log.info("Certifier Agent started")
        outcome = self.lmi_skills.certify_fixed_gains(
            validated.transformed, validated.reduced, validated.G, gains, bounds, gamma
        )
        if isinstance(outcome, SynthesisResult):
            log.info(f"Gains certified: Tr(Y2) = {outcome.gamma_achieved:.6g} <= {gamma:g}")
        else:
            detail = f", minimal Tr(Y2) = {outcome.min_trace_y2:.6g}" if outcome.min_trace_y2 is not None else ""
            log.warning(f"Gains not certified: {outcome.reason}{detail}")
        return outcome
