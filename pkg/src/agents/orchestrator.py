"""
Orchestrator Agent - Manages the command workflows.
"""
from datetime import datetime
from typing import Optional, Tuple, Union

from .certifier import CertifierAgent
from .reporter import ReporterAgent
from .simulator import SimulatorAgent
from .synthesizer import SynthesizerAgent
from .validator import ValidatorAgent
from ..models.certificate import GammaSearch, Outcome, SynthesisResult
from ..models.plant import FaultBounds
from ..models.run import RunConfig, ValidatedPlant
from ..models.simulation import FaultSignal
from ..models.systems import Gains
from ..utils.errors import ConfigError, DimensionMismatchError, FaultSpecError, QlftError
from ..utils.logger import log

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

USAGE_ERRORS = (ConfigError, FaultSpecError, DimensionMismatchError)


class OrchestratorAgent:
    """
    Orchestrator Agent responsible for running one command end to end.

    Skills:
    - Asyncio Task Management
    - Error Logging
    - Exit-code mapping

    Tasks:
    - Coordinate validator, synthesizer, certifier, simulator and reporter agents
    - Turn pipeline errors into exit codes (0 ok, 1 domain failure, 2 input error)
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.validator = ValidatorAgent()
        self.synthesizer = SynthesizerAgent()
        self.certifier = CertifierAgent(self.synthesizer.lmi_skills)
        self.simulator = SimulatorAgent()
        self.reporter = ReporterAgent(config.output_dir)

    # stages

    async def _validated(self) -> Optional[ValidatedPlant]:
        validated = await self.validator.run(self.config.plant, self.config.override_condition_ii)
        if not validated.passed:
            await self.reporter.save_check(validated)
            return None
        return validated

    async def _fault_and_bounds(self, validated: ValidatedPlant) -> Tuple[FaultSignal, FaultBounds]:
        """Fault from --fault with its analytic bounds, else f = 0 with the plant file's bounds."""
        n_f = validated.spec.plant.n_f
        horizon = self.config.simulation.horizon
        if self.config.fault is None:
            return await self.validator.load_fault(None, n_f, horizon), validated.spec.bounds
        fault = await self.validator.load_fault(self.config.fault, n_f, horizon)
        return fault, self.simulator.simulation_skills.fault_bounds(fault)

    async def _gains(self, validated: ValidatedPlant) -> Gains:
        if self.config.gains is None:
            raise ConfigError(f"{self.config.command} needs --gains")
        return await self.validator.load_gains(self.config.gains, validated.spec.n_o)

    async def _simulate(
        self, validated: ValidatedPlant, gains: Gains, fault: FaultSignal, bounds: FaultBounds
    ) -> bool:
        cl = self.certifier.close_loop(validated, gains)
        certificate, _ = self.certifier.certificate_for(cl, bounds, self.config.gamma)
        traj, envelope, summary = await self.simulator.run(
            cl, fault, self.config.simulation, certificate, self.config.monte_carlo, self.config.seed
        )
        await self.reporter.save_simulation(traj, envelope, summary)
        return summary.envelope is None or summary.envelope.passed

    async def _synthesize(
        self, validated: ValidatedPlant, bounds: FaultBounds, bisect: bool
    ) -> Union[Outcome, GammaSearch]:
        outcome = await self.synthesizer.run(
            validated, bounds, self.config.gamma, seed=self.config.seed, bisect=bisect
        )
        await self.reporter.save_outcome(outcome, "synthesis.json")
        self.reporter.log_outcome("Synthesis", outcome)
        return outcome

    def meets_request(self, outcome: Union[Outcome, GammaSearch]) -> bool:
        """Certified with Tr(Y2) <= the requested gamma; a search that only succeeds above it does not count."""
        result = outcome.result if isinstance(outcome, GammaSearch) else outcome
        return isinstance(result, SynthesisResult) and result.satisfies(self.config.gamma)

    # commands

    async def cmd_check(self) -> int:
        spec = await self.validator.load_plant(self.config.plant)
        validated = self.validator.check(spec, self.config.override_condition_ii)
        await self.reporter.save_check(validated)
        return EXIT_OK if validated.passed else EXIT_DOMAIN

    async def cmd_transform(self) -> int:
        validated = await self._validated()
        if validated is None:
            return EXIT_DOMAIN
        await self.reporter.save_transform(validated)
        return EXIT_OK

    async def cmd_synthesize(self) -> int:
        validated = await self._validated()
        if validated is None:
            return EXIT_DOMAIN
        _, bounds = await self._fault_and_bounds(validated)
        outcome = await self._synthesize(validated, bounds, self.config.synthesis.bisect)
        return EXIT_OK if self.meets_request(outcome) else EXIT_DOMAIN

    async def cmd_certify(self) -> int:
        validated = await self._validated()
        if validated is None:
            return EXIT_DOMAIN
        gains = await self._gains(validated)
        _, bounds = await self._fault_and_bounds(validated)
        outcome = await self.certifier.run(validated, gains, bounds, self.config.gamma)
        await self.reporter.save_outcome(outcome, "certificate.json")
        return EXIT_OK if isinstance(outcome, SynthesisResult) else EXIT_DOMAIN

    async def cmd_simulate(self) -> int:
        validated = await self._validated()
        if validated is None:
            return EXIT_DOMAIN
        gains = await self._gains(validated)
        fault, bounds = await self._fault_and_bounds(validated)
        return EXIT_OK if await self._simulate(validated, gains, fault, bounds) else EXIT_DOMAIN

    async def cmd_reproduce_example(self) -> int:
        """check -> transform -> certify given gains -> synthesize (bisect if needed) -> simulate."""
        log.info("STEP 1/5: Checking plant...")
        spec = await self.validator.load_plant(self.config.plant)
        validated = self.validator.check(spec, self.config.override_condition_ii)
        await self.reporter.save_check(validated)
        if not validated.passed:
            log.error("Plant checks failed. Aborting pipeline.")
            return EXIT_DOMAIN
        log.info("✓ Plant checks passed")

        log.info("STEP 2/5: Transforming plant...")
        validated = self.validator.transform(validated)
        await self.reporter.save_transform(validated)
        log.info(f"✓ Transformed plant (n_o = {validated.spec.n_o}, n_hat = {validated.transformed.n_hat})")

        fault, bounds = await self._fault_and_bounds(validated)

        given: Optional[Gains] = None
        if self.config.gains is not None:
            log.info("STEP 3/5: Certifying the bundled gains...")
            given = await self._gains(validated)
            verdict = await self.certifier.run(validated, given, bounds, self.config.gamma)
            await self.reporter.save_outcome(verdict, "certificate.json")
            self.reporter.log_outcome("Bundled gains", verdict)
        else:
            log.info("STEP 3/5: No bundled gains; skipping fixed-gain certification")

        log.info(f"STEP 4/5: Synthesizing gains at gamma = {self.config.gamma:g}...")
        # The search returns at once when the requested gamma is feasible
        synthesis = self.config.synthesis
        outcome = await self._synthesize(validated, bounds, bisect=synthesis.bisect or synthesis.bisect_on_infeasible)
        if isinstance(outcome, GammaSearch):
            result = outcome.result
        else:
            result = outcome if isinstance(outcome, SynthesisResult) else None

        log.info("STEP 5/5: Simulating the closed loop...")
        gains = result.gains if result is not None else given
        envelope_ok = True
        if gains is None:
            log.warning("No gains to simulate")
        else:
            envelope_ok = await self._simulate(validated, gains, fault, bounds)
            log.info(f"✓ Simulation finished (envelope {'passed' if envelope_ok else 'FAILED'})")

        return EXIT_OK if self.meets_request(outcome) and envelope_ok else EXIT_DOMAIN

    async def run(self) -> int:
        """
        Run the configured command.

        Returns:
            Exit code
        """
        commands = {
            "check": self.cmd_check,
            "transform": self.cmd_transform,
            "synthesize": self.cmd_synthesize,
            "certify": self.cmd_certify,
            "simulate": self.cmd_simulate,
            "reproduce-example": self.cmd_reproduce_example,
        }
        start_time = datetime.now()
        log.info("=" * 80)
        log.info(f"Orchestrator Agent started - command '{self.config.command}'")
        log.info("=" * 80)
        try:
            code = await commands[self.config.command]()
        except USAGE_ERRORS as e:
            log.error(f"Input error: {e}")
            return EXIT_USAGE
        except QlftError as e:
            log.error(f"Pipeline failed: {e}")
            return EXIT_DOMAIN

        elapsed_time = (datetime.now() - start_time).total_seconds()
        log.info("=" * 80)
        log.info(f"Command '{self.config.command}' finished with exit code {code} in {elapsed_time:.2f} seconds")
        log.info("=" * 80)
        return code
