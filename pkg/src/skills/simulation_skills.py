"""
Simulation skills: fault bounds, moment propagation, Monte Carlo oracle
and envelope checks.
"""
import asyncio
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.linalg import eigvalsh

from ..models.certificate import Certificate
from ..models.matrix import symmetrize
from ..models.plant import FaultBounds
from ..models.simulation import (
    EnvelopeVerdict,
    FaultPiece,
    FaultSignal,
    MomentTrajectory,
    MonteCarloMoments,
)
from ..models.systems import ClosedLoop
from ..utils.errors import FaultSpecError, SimulationDivergedError
from ..utils.logger import log
from config.settings import settings

HALF_PI = 0.5 * np.pi


def _piece_sup(kind: str, a: float, w: float, b: float, span: float, derivative: bool) -> float:
    """Analytic sup over one piece of |f| (or |df/dt|) for a single channel."""
    if kind == "constant":
        return 0.0 if derivative else abs(b)
    if derivative:
        # d/dt a sin = a w cos, d/dt a cos = -a w sin
        kind = "cosine" if kind == "sine" else "sine"
        a, b = a * w, 0.0
    lo, hi = sorted((0.0, w * span))
    base = HALF_PI if kind == "sine" else 0.0
    first = int(np.ceil((lo - base) / np.pi))
    last = min(int(np.floor((hi - base) / np.pi)), first + 2)
    theta = np.concatenate([[lo, hi], base + np.pi * np.arange(first, last + 1)])
    s = np.sin(theta) if kind == "sine" else np.cos(theta)
    return float(np.max(np.abs(a * s + b)))


def time_grid(horizon: float, dt: float, boundaries: Sequence[float]) -> Tuple[np.ndarray, List[int]]:
    """
    Uniform grid on [0, horizon] with every interior boundary inserted.

    Returns the grid and the sample index of each boundary inside it.
    """
    steps = max(1, int(round(horizon / dt)))
    times = np.linspace(0.0, horizon, steps + 1)
    marks: List[int] = []
    for b in boundaries:
        if not 0.0 < b < horizon:
            continue
        i = int(np.argmin(np.abs(times - b)))
        if abs(times[i] - b) <= 1e-9 * max(1.0, abs(b)):
            times[i] = b
        else:
            i = int(np.searchsorted(times, b))
            times = np.insert(times, i, b)
        marks.append(i)
    return times, marks


class SimulationSkills:
    """Moment-level simulation of the closed loop under a piecewise fault."""

    @staticmethod
    def parse_fault(data: dict, n_f: int) -> FaultSignal:
        """Validate a fault description (as loaded from YAML)."""
        if not isinstance(data, dict) or "pieces" not in data:
            raise FaultSpecError("fault file needs a 'pieces' list")
        try:
            return FaultSignal(pieces=data["pieces"], n_f=data.get("n_f", n_f))
        except ValidationError as e:
            raise FaultSpecError(f"invalid fault signal: {e.errors()[0]['msg']}") from e

    @staticmethod
    def fault_bounds(fault: FaultSignal) -> FaultBounds:
        """
        alpha = sup |f|, beta = sup |df/dt| over the smooth pieces.

        Per-channel suprema are combined as sqrt(sum sup_i^2), which is exact for
        a single channel and an upper bound otherwise. Jumps at piece
        boundaries are reported separately and do not enter beta.
        """
        n_f = fault.n_f
        alpha = np.zeros(n_f)
        beta = np.zeros(n_f)
        for piece in fault.pieces:
            a, w, b = piece.channels(n_f)
            span = piece.end - piece.start
            for i in range(n_f):
                alpha[i] = max(alpha[i], _piece_sup(piece.kind, a[i], w[i], b[i], span, derivative=False))
                beta[i] = max(beta[i], _piece_sup(piece.kind, a[i], w[i], b[i], span, derivative=True))
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise FaultSpecError("fault signal is unbounded")

        jumps, jump_times = [], []
        for index, t in enumerate(fault.boundaries, start=1):
            size = float(np.linalg.norm(fault.jump(index)))
            if size > 0.0:
                jumps.append(size)
                jump_times.append(t)
                log.info(f"Fault jump of {size:.6g} at t = {t:g} (excluded from beta)")

        bounds = FaultBounds(
            alpha=float(np.sqrt(np.sum(alpha ** 2))),
            beta=float(np.sqrt(np.sum(beta ** 2))),
            jumps=jumps,
            jump_times=jump_times,
        )
        if bounds.alpha == 0.0:
            log.warning("alpha = 0: no fault declared")
        if bounds.beta == 0.0:
            log.warning("beta = 0: fault has no rate bound to exploit")
        return bounds

    @staticmethod
    def _forcing(cl: ClosedLoop, piece: FaultPiece, n_f: int, t: float) -> np.ndarray:
        f = piece.value(np.array([t]), n_f)[0]
        h = piece.rate(np.array([t]), n_f)[0]
        return cl.B_f @ f + cl.B_h @ h

    def simulate_moments(
        self,
        cl: ClosedLoop,
        fault: FaultSignal,
        horizon: Optional[float] = None,
        dt: Optional[float] = None,
        z0: Optional[np.ndarray] = None,
        Q0: Optional[np.ndarray] = None,
        S: Optional[np.ndarray] = None,
    ) -> MomentTrajectory:
        """
        RK4 propagation of the mean and symmetrized covariance of z.

        mean:       dz/dt = A z + B_f f + B_h df/dt
        covariance: dQ/dt = A Q + Q A^T + B_w B_w^T

        Each step stays inside one fault piece; at a piece boundary the mean
        takes the impulse B_h (f(t+) - f(t-)) and the stored sample is the
        post-jump state.

        Args:
            cl: Closed loop
            fault: Fault signal
            horizon: Final time (defaults to settings.horizon)
            dt: Nominal step (defaults to settings.dt)
            z0: Initial mean (zero by default)
            Q0: Initial covariance (zero by default)
            S: Optional P^-1; when given g(t) is attached

        Returns:
            MomentTrajectory
        """
        horizon = settings.horizon if horizon is None else horizon
        dt = settings.dt if dt is None else dt
        if horizon <= 0 or dt <= 0:
            raise ValueError(f"horizon and dt must be positive (got {horizon}, {dt})")
        size = cl.size
        z = np.zeros(size) if z0 is None else np.asarray(z0, dtype=float).reshape(size)
        Q = np.zeros((size, size)) if Q0 is None else symmetrize(np.asarray(Q0, dtype=float))
        if eigvalsh(Q)[0] < -1e-12 * (1.0 + np.max(np.abs(Q))):
            raise ValueError("Q0 must be positive semidefinite")

        A = cl.A
        W = cl.B_w @ cl.B_w.T
        times, marks = time_grid(horizon, dt, fault.boundaries)
        jump_at = {i: k for k, i in enumerate(marks, start=1)}
        n_f = fault.n_f

        def dQ(Qk: np.ndarray) -> np.ndarray:
            return A @ Qk + Qk @ A.T + W

        means = np.empty((times.size, size))
        covs = np.empty((times.size, size, size))
        means[0], covs[0] = z, Q
        jump_times: List[float] = []
        for k in range(times.size - 1):
            t, h = times[k], times[k + 1] - times[k]
            piece = fault.piece_at(t)
            u0 = self._forcing(cl, piece, n_f, t)
            u1 = self._forcing(cl, piece, n_f, t + 0.5 * h)
            u2 = self._forcing(cl, piece, n_f, t + h)

            k1 = A @ z + u0
            k2 = A @ (z + 0.5 * h * k1) + u1
            k3 = A @ (z + 0.5 * h * k2) + u1
            k4 = A @ (z + h * k3) + u2
            z_next = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

            q1 = dQ(Q)
            q2 = dQ(Q + 0.5 * h * q1)
            q3 = dQ(Q + 0.5 * h * q2)
            q4 = dQ(Q + h * q3)
            Q_next = symmetrize(Q + h / 6.0 * (q1 + 2 * q2 + 2 * q3 + q4))

            if k + 1 in jump_at:
                z_next = z_next + cl.B_h @ fault.jump(jump_at[k + 1])
                jump_times.append(float(times[k + 1]))

            if not (np.all(np.isfinite(z_next)) and np.all(np.isfinite(Q_next))):
                raise SimulationDivergedError("moment propagation diverged", t=float(t), last_state=(z, Q))
            z, Q = z_next, Q_next
            means[k + 1], covs[k + 1] = z, Q

        traj = MomentTrajectory(times=times, mean=means, cov=covs, jump_times=jump_times)
        if S is not None:
            traj = traj.model_copy(update={"g": traj.lyapunov_expectation(S)})
        log.info(f"Simulated {times.size - 1} steps to t = {horizon:g} ({len(jump_times)} jump(s))")
        return traj

    @staticmethod
    def covariance_health(traj: MomentTrajectory) -> Dict[str, float]:
        """Worst asymmetry and worst lambda_min(Q) / lambda_max(Q) over all samples."""
        asym = float(np.max(np.abs(traj.cov - np.swapaxes(traj.cov, 1, 2))))
        eigs = np.linalg.eigvalsh(traj.cov)
        scale = np.maximum(eigs[:, -1], 1e-300)
        return {"asymmetry": asym, "min_eig_ratio": float(np.min(eigs[:, 0] / scale))}

    @staticmethod
    def _mc_chunk(
        cl: ClosedLoop,
        fault: FaultSignal,
        times: np.ndarray,
        jump_at: Dict[int, int],
        check_idx: List[int],
        z0: np.ndarray,
        trials: int,
        seq: np.random.SeedSequence,
    ) -> Dict[str, np.ndarray]:
        """Euler-Maruyama on one chunk of trials; returns raw sums at the checkpoints."""
        rng = np.random.default_rng(seq)
        size, n_noise = cl.size, cl.B_w.shape[1]
        A_T, Bw_T = cl.A.T, cl.B_w.T
        Z = np.tile(z0, (trials, 1))
        c = len(check_idx)
        sums = {
            "z": np.zeros((c, size)),
            "zz": np.zeros((c, size, size)),
            "zz2": np.zeros((c, size, size)),
            "e": np.zeros(c),
            "e2": np.zeros(c),
        }
        slot = {i: j for j, i in enumerate(check_idx)}

        def record(j: int) -> None:
            outer = np.einsum("ti,tj->tij", Z, Z)
            energy = np.sum(Z ** 2, axis=1)
            sums["z"][j] += Z.sum(axis=0)
            sums["zz"][j] += outer.sum(axis=0)
            sums["zz2"][j] += (outer ** 2).sum(axis=0)
            sums["e"][j] += energy.sum()
            sums["e2"][j] += (energy ** 2).sum()

        if 0 in slot:
            record(slot[0])
        for k in range(times.size - 1):
            t, h = times[k], times[k + 1] - times[k]
            piece = fault.piece_at(t)
            drift = cl.B_f @ piece.value(np.array([t]), fault.n_f)[0] + cl.B_h @ piece.rate(np.array([t]), fault.n_f)[0]
            dW = rng.standard_normal((trials, n_noise)) * np.sqrt(h)
            Z = Z + h * (Z @ A_T + drift) + dW @ Bw_T
            if k + 1 in jump_at:
                Z = Z + cl.B_h @ fault.jump(jump_at[k + 1])
            if k + 1 in slot:
                record(slot[k + 1])
        if not np.all(np.isfinite(Z)):
            raise SimulationDivergedError("Monte Carlo paths diverged", t=float(times[-1]))
        return sums

    async def monte_carlo_oracle(
        self,
        cl: ClosedLoop,
        fault: FaultSignal,
        horizon: float,
        dt: Optional[float] = None,
        trials: Optional[int] = None,
        seed: Optional[int] = None,
        checkpoints: Sequence[float] = (5.0, 10.0, 15.0, 20.0),
        z0: Optional[np.ndarray] = None,
        chunk: Optional[int] = None,
        threads: Optional[int] = None,
    ) -> MonteCarloMoments:
        """
        Empirical moments of the classicalized closed loop.

        Noise is a standard Wiener process (symmetrized intensity I). Trials
        are split into fixed-size chunks, each with its own stream spawned from
        the master seed, so the result does not depend on `threads`.
        """
        dt = settings.mc_dt if dt is None else dt
        trials = settings.mc_trials if trials is None else trials
        seed = settings.seed if seed is None else seed
        chunk = settings.mc_chunk if chunk is None else chunk
        threads = settings.threads if threads is None else threads
        if trials < 100:
            raise ValueError(f"monte_carlo_oracle needs at least 100 trials, got {trials}")

        times, marks = time_grid(horizon, dt, fault.boundaries)
        jump_at = {i: k for k, i in enumerate(marks, start=1)}
        checkpoints = [float(t) for t in checkpoints if 0.0 <= t <= horizon]
        check_idx = [int(np.argmin(np.abs(times - t))) for t in checkpoints]
        z_init = np.zeros(cl.size) if z0 is None else np.asarray(z0, dtype=float).reshape(cl.size)

        sizes = [min(chunk, trials - s) for s in range(0, trials, chunk)]
        streams = np.random.SeedSequence(seed).spawn(len(sizes))
        semaphore = asyncio.Semaphore(threads)

        async def run(i: int) -> Dict[str, np.ndarray]:
            async with semaphore:
                return await asyncio.to_thread(
                    self._mc_chunk, cl, fault, times, jump_at, check_idx, z_init, sizes[i], streams[i]
                )

        log.info(f"Monte Carlo: {trials} trials in {len(sizes)} chunk(s), dt = {dt:g}")
        parts = await asyncio.gather(*(run(i) for i in range(len(sizes))))
        total = {key: sum(p[key] for p in parts) for key in parts[0]}

        m = float(trials)
        mean = total["z"] / m
        second = total["zz"] / m
        energy = total["e"] / m
        diag = np.diagonal(second, axis1=1, axis2=2)
        return MonteCarloMoments(
            checkpoints=checkpoints,
            trials=trials,
            mean=mean,
            mean_se=np.sqrt(np.maximum(diag - mean ** 2, 0.0) / m),
            second=second,
            second_se=np.sqrt(np.maximum(total["zz2"] / m - second ** 2, 0.0) / m),
            energy=energy,
            energy_se=np.sqrt(np.maximum(total["e2"] / m - energy ** 2, 0.0) / m),
        )

    @staticmethod
    def envelope_samples(traj: MomentTrajectory, cert: Certificate) -> np.ndarray:
        """e^{-c (t - t_s)} g(t_s) + tau / c with t_s = 0 or the most recent fault jump."""
        g = traj.g if traj.g is not None else traj.lyapunov_expectation(cert.S)
        times = traj.times
        starts = [0] + [traj.at(t) for t in traj.jump_times]
        stops = starts[1:] + [times.size]
        envelope = np.empty_like(g)
        for s, e in zip(starts, stops):
            envelope[s:e] = cert.envelope(times[s:e] - times[s], g[s])
        return envelope

    @classmethod
    def check_envelope(cls, traj: MomentTrajectory, cert: Certificate, tol: float = 1e-6) -> EnvelopeVerdict:
        """g(t) <= envelope(t) (1 + tol) at every sample, restarted on every smooth segment."""
        g = traj.g if traj.g is not None else traj.lyapunov_expectation(cert.S)
        times = traj.times
        envelope = cls.envelope_samples(traj, cert)
        ratio = g / np.maximum(envelope, 1e-300)
        violation = g - envelope * (1.0 + tol)
        worst = int(np.argmax(ratio))
        verdict = EnvelopeVerdict(
            passed=bool(np.all(violation <= 0.0)),
            max_ratio=float(ratio[worst]),
            max_violation=float(np.max(violation)),
            worst_time=float(times[worst]),
            segments=1 + len(traj.jump_times),
            tolerance=tol,
        )
        level = "INFO" if verdict.passed else "WARNING"
        log.log(level, f"Envelope check: max g/envelope = {verdict.max_ratio:.6g} at t = {verdict.worst_time:g}")
        return verdict

    @staticmethod
    def check_bound_steps(
        cl: ClosedLoop, traj: MomentTrajectory, fault: FaultSignal, bounds: FaultBounds, samples: int = 50
    ) -> Dict[str, float]:
        """
        Evaluate the completing-the-square steps at sampled (z, f) points.

        Returns the smallest eigenvalue seen for
          z z^T + B_f f f^T B_f^T - (B_f f z^T + z f^T B_f^T)   (>= 0)
          alpha^2 I - f f^T                                     (>= 0)
        """
        idx = np.unique(np.linspace(0, traj.times.size - 1, samples).astype(int))
        young, alpha_gap = np.inf, np.inf
        for i in idx:
            z = traj.mean[i]
            f = fault.value(float(traj.times[i]))
            bf = cl.B_f @ f
            M = np.outer(z, z) + np.outer(bf, bf) - np.outer(bf, z) - np.outer(z, bf)
            young = min(young, float(eigvalsh(M)[0]))
            alpha_gap = min(alpha_gap, float(eigvalsh(bounds.alpha ** 2 * np.eye(f.size) - np.outer(f, f))[0]))
        return {"young": young, "alpha": alpha_gap}
