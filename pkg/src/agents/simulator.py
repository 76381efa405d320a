"""
Simulator Agent - Moment simulation, envelope check and Monte Carlo oracle.
"""
from typing import Optional, Tuple

import numpy as np

from ..models.certificate import Certificate
from ..models.run import MonteCarloOptions, SimulationOptions
from ..models.simulation import FaultSignal, MomentTrajectory, MonteCarloMoments, SimulationSummary
from ..models.systems import ClosedLoop
from ..skills.simulation_skills import SimulationSkills
from ..utils.logger import log


class SimulatorAgent:
    """
    Simulator Agent responsible for closed-loop simulation under faults.

    Skills:
    - RK4 moment propagation with jump handling
    - Euler-Maruyama Monte Carlo oracle

    Tasks:
    - Propagate mean and covariance of z
    - Check g(t) against the decay envelope
    - Cross-check the moments against sampled paths
    """

    def __init__(self):
        self.simulation_skills = SimulationSkills()

    @staticmethod
    def oracle_distance(traj: MomentTrajectory, mc: MonteCarloMoments) -> float:
        """Largest standardized gap between propagated and sampled moments."""
        worst = 0.0
        for j, t in enumerate(mc.checkpoints):
            i = traj.at(t)
            mean = traj.mean[i]
            second = traj.cov[i] + np.outer(mean, mean)
            gaps = [
                np.abs(mc.mean[j] - mean) / np.maximum(mc.mean_se[j], 1e-12),
                np.abs(mc.second[j] - second) / np.maximum(mc.second_se[j], 1e-12),
            ]
            worst = max(worst, *(float(np.max(g)) for g in gaps))
        return worst

    async def run(
        self,
        cl: ClosedLoop,
        fault: FaultSignal,
        options: SimulationOptions,
        certificate: Optional[Certificate] = None,
        monte_carlo: Optional[MonteCarloOptions] = None,
        seed: int = 0,
    ) -> Tuple[MomentTrajectory, Optional[np.ndarray], SimulationSummary]:
        """
        Run the simulator agent.

        Args:
            cl: Closed loop
            fault: Fault signal
            options: Horizon, step and initial moments
            certificate: Decay certificate; enables g(t) and the envelope check
            monte_carlo: Oracle options (skipped when None or disabled)
            seed: Master seed for the oracle

        Returns:
            (trajectory, envelope samples or None, summary)
        """
        log.info("Simulator Agent started")
        skills = self.simulation_skills
        bounds = skills.fault_bounds(fault)
        z0 = np.asarray(options.z0, dtype=float) if options.z0 is not None else None
        Q0 = np.asarray(options.q0, dtype=float) if options.q0 is not None else None
        traj = skills.simulate_moments(
            cl, fault, options.horizon, options.dt, z0=z0, Q0=Q0,
            S=certificate.S if certificate is not None else None,
        )

        verdict, envelope = None, None
        if certificate is not None:
            verdict = skills.check_envelope(traj, certificate)
            envelope = skills.envelope_samples(traj, certificate)
        else:
            log.warning("No decay certificate for these gains; envelope check skipped")

        mc, max_z = None, None
        if monte_carlo is not None and monte_carlo.enabled:
            mc = await skills.monte_carlo_oracle(
                cl, fault, options.horizon, dt=monte_carlo.dt, trials=monte_carlo.trials,
                seed=seed, checkpoints=monte_carlo.checkpoints, z0=z0,
            )
            max_z = self.oracle_distance(traj, mc)
            log.info(f"Monte Carlo oracle: max standardized gap {max_z:.3f}")

        summary = SimulationSummary(
            alpha=bounds.alpha,
            beta=bounds.beta,
            jumps=bounds.jumps,
            jump_times=bounds.jump_times,
            steps=int(traj.times.size - 1),
            terminal_mean=traj.mean[-1].tolist(),
            covariance=skills.covariance_health(traj),
            bound_steps=skills.check_bound_steps(cl, traj, fault, bounds),
            certified=certificate is not None,
            decay_rate=certificate.c if certificate is not None else None,
            offset=certificate.tau / certificate.c if certificate is not None else None,
            envelope=verdict,
            monte_carlo=mc,
            monte_carlo_max_z=max_z,
        )
        log.info("Simulator Agent completed")
        return traj, envelope, summary
