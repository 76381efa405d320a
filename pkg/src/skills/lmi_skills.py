"""
LMI skills: fixed-gain certification, rank-constrained alternating
projections with warm-started restarts, and the gamma bisection.
"""
import asyncio
from dataclasses import dataclass, field
from typing import Awaitable, Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import ValidationError
from scipy.linalg import LinAlgError, eigh, pinvh, solve_continuous_are, solve_continuous_lyapunov
from scipy.optimize import minimize

from ..models.certificate import (
    CertificationReport,
    GammaProbe,
    GammaSearch,
    Infeasible,
    Outcome,
    SolverDiagnostics,
    SynthesisResult,
)
from ..models.lifted import LiftedProblem, LiftPrimitives
from ..models.matrix import symmetrize
from ..models.plant import FaultBounds, TransformedPlant
from ..models.systems import ClosedLoop, Gains, ReducedSystem
from ..utils.errors import NoFeasibleRestart, ProjectionDivergedError, QlftError, StructureError
from ..utils.logger import log
from ..utils.retry import batch_count, create_retry_decorator
from .assembly_skills import AssemblySkills
from .certification_skills import CertificationSkills
from .lifting_skills import LiftingSkills
from config.settings import settings

SQRT2 = np.sqrt(2.0)
# Shift applied to the observer Riccati design so A_e clears the -2 decay line
OBSERVER_SHIFT = 3.0
# Shift for the state-feedback Riccati seed of K_x
FEEDBACK_SHIFT = 3.0
# Distance left of -2 the K_x search aims for
FEEDBACK_MARGIN = 0.5


def _vech_index(m: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(m)
    return iu, ju, np.where(iu == ju, 1.0, SQRT2)


def pack(M: np.ndarray) -> np.ndarray:
    """Scaled half-vectorization: ||pack(M)|| = ||M||_F for symmetric M."""
    iu, ju, scale = _vech_index(M.shape[0])
    return M[iu, ju] * scale


def unpack(x: np.ndarray, m: int) -> np.ndarray:
    iu, ju, scale = _vech_index(m)
    M = np.zeros((m, m))
    M[iu, ju] = x / scale
    return M + np.triu(M, 1).T


def duplication(m: int) -> sp.csr_matrix:
    """Map from pack(Z) to row-major vec(Z)."""
    iu, ju, scale = _vech_index(m)
    k = np.arange(iu.size)
    off = iu != ju
    rows = np.concatenate([iu * m + ju, (ju * m + iu)[off]])
    cols = np.concatenate([k, k[off]])
    vals = np.concatenate([1.0 / scale, (1.0 / scale)[off]])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m * m, iu.size))


def project_rank_psd(Z: np.ndarray, rank: int) -> Tuple[np.ndarray, float]:
    """
    Nearest PSD matrix of rank <= `rank` (Frobenius norm).

    Returns the projection and sigma_{rank+1} / sigma_1 of the input.
    """
    w, U = eigh(symmetrize(Z))
    order = np.argsort(np.abs(w))[::-1]
    spread = float(np.abs(w[order[rank]]) / max(np.abs(w[order[0]]), 1e-300)) if rank < w.size else 0.0
    kept = np.maximum(w, 0.0)
    kept[: max(w.size - rank, 0)] = 0.0
    return (U * kept) @ U.T, spread


def _clip_eigs(M: np.ndarray, sense: str, bound: float) -> np.ndarray:
    w, U = eigh(symmetrize(M))
    w = np.minimum(w, bound) if sense == "nsd" else np.maximum(w, bound)
    return (U * w) @ U.T


class AffineProjector:
    """
    Least-squares projection onto every affine constraint of a lifted problem.

    Variables are pack(Z), one packed slack per semidefinite block and the
    trace slack s; each block contributes expr(Z) - slack = 0 and the trace
    contributes Tr(Y2) - s = 0.
    """

    def __init__(self, problem: LiftedProblem):
        self.problem = problem
        m = problem.m
        dup = duplication(m)
        self.n_z = dup.shape[1]

        self.slacks: List[Tuple[int, int]] = []
        offset = self.n_z
        for block in problem.inequalities:
            size = block.expr.shape[0]
            self.slacks.append((offset, size))
            offset += size * (size + 1) // 2
        self.trace_index = offset
        self.n_vars = offset + 1

        rows: List[sp.csr_matrix] = []
        rhs: List[np.ndarray] = []

        def widen(A_z: sp.spmatrix) -> sp.csr_matrix:
            return sp.hstack([A_z, sp.csr_matrix((A_z.shape[0], self.n_vars - self.n_z))], format="csr")

        for group in problem.equalities:
            op, const = group.expr.operator(problem.bs, problem.n_blocks)
            rows.append(widen(op @ dup))
            rhs.append(-const)

        for block, (start, size) in zip(problem.inequalities, self.slacks):
            op, const = block.expr.operator(problem.bs, problem.n_blocks)
            iu, ju, scale = _vech_index(size)
            sel = iu * size + ju
            slack = sp.csr_matrix(
                (-1.0 / scale, (np.arange(sel.size), start + np.arange(sel.size))),
                shape=(sel.size, self.n_vars),
            )
            rows.append(widen(op[sel] @ dup) + slack)
            rhs.append(-const[sel])

        op, const = problem.trace.operator(problem.bs, problem.n_blocks)
        trace_row = widen(op @ dup) + sp.csr_matrix(([-1.0], ([0], [self.trace_index])), shape=(1, self.n_vars))
        rows.append(trace_row)
        rhs.append(-const)

        A = sp.vstack(rows, format="csr")
        c = np.concatenate(rhs)
        norms = np.sqrt(np.asarray(A.multiply(A).sum(axis=1)).ravel())
        empty = norms <= 1e-12
        if np.any(np.abs(c[empty]) > 1e-12):
            raise StructureError("inconsistent lifted constraint: zero row with non-zero right-hand side")
        keep = ~empty
        scale = sp.diags(1.0 / norms[keep])
        self.A = (scale @ A[keep]).tocsr()
        self.c = c[keep] / norms[keep]
        self.AT = self.A.T.tocsr()
        self.gram_pinv = pinvh((self.A @ self.AT).toarray())
        log.debug(f"Affine projector: {self.A.shape[0]} rows, {self.n_vars} variables")

    def project(self, x: np.ndarray) -> np.ndarray:
        return x - self.AT @ (self.gram_pinv @ (self.A @ x - self.c))

    def residual(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.A @ x - self.c)))

    def initial_point(self, Z: np.ndarray) -> np.ndarray:
        """Z together with the slacks it induces."""
        gram = self.problem.gram(Z)
        x = np.zeros(self.n_vars)
        x[: self.n_z] = pack(Z)
        for block, (start, size) in zip(self.problem.inequalities, self.slacks):
            x[start:start + size * (size + 1) // 2] = pack(symmetrize(block.expr.evaluate(gram)))
        x[self.trace_index] = float(self.problem.trace.evaluate(gram)[0, 0])
        return x

    def project_sets(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        """Rank/PSD projection of Z and eigenvalue clipping of every slack."""
        p = self.problem
        y = np.empty_like(x)
        Z, spread = project_rank_psd(unpack(x[: self.n_z], p.m), p.rank)
        y[: self.n_z] = pack(Z)
        for block, (start, size) in zip(p.inequalities, self.slacks):
            stop = start + size * (size + 1) // 2
            y[start:stop] = pack(_clip_eigs(unpack(x[start:stop], size), block.sense, block.bound))
        y[self.trace_index] = np.clip(x[self.trace_index], p.trace_floor, p.gamma)
        return y, Z, spread


@dataclass
class RestartOutcome:
    index: int
    result: Optional[SynthesisResult] = None
    min_trace: Optional[float] = None
    gains: Optional[Gains] = None
    residual: float = float("inf")
    diagnostics: SolverDiagnostics = field(default_factory=SolverDiagnostics)

    @property
    def accepted(self) -> bool:
        return self.result is not None


class LMISkills:
    """Solvers for the synthesis problem."""

    def __init__(
        self,
        assembly: Optional[AssemblySkills] = None,
        lifting: Optional[LiftingSkills] = None,
        certification: Optional[CertificationSkills] = None,
    ):
        self.assembly = assembly or AssemblySkills()
        self.lifting = lifting or LiftingSkills()
        self.certification = certification or CertificationSkills()

    # fixed gains

    @staticmethod
    def strict_margin(cl: ClosedLoop) -> float:
        return min(settings.strict_scale * (1.0 + float(np.linalg.norm(cl.A, 2))), 0.25)

    def minimal_certificate(
        self, cl: ClosedLoop, bounds: FaultBounds, gamma: float
    ) -> Optional[Tuple[np.ndarray, CertificationReport]]:
        """
        Trace-minimal P for fixed gains, or None when A_bar + 2I is not Hurwitz.

        With F = A_bar + 2I Hurwitz, the P whose block inequality holds with
        margin eps are exactly P* + D, where P* solves
        F P + P F^T + B B^T/(1-eps) + eps I = 0 and D solves F D + D F^T + R = 0
        for some R >= 0. P* alone is optimal when it meets Corollary 1; otherwise
        Tr(Y2) is minimized over a cone of such D under the Corollary-1 LMI.
        """
        if not cl.is_hurwitz(2.0):
            return None
        eps = self.strict_margin(cl)
        eq = 1.01 * eps
        F = cl.A + 2.0 * np.eye(cl.size)
        B = cl.B_bar(bounds.alpha, bounds.beta)
        P = symmetrize(solve_continuous_lyapunov(F, -(B @ B.T / (1.0 - eq) + eq * np.eye(cl.size))))
        if not self.certification.check_corollary1(cl, P, bounds).passed:
            P = self.minimize_over_cone(cl, P, bounds, F)
        report = self.certification.certify(cl, P, bounds, gamma, margin_required=eps)
        return P, report

    def repair_along_deficit(
        self, cl: ClosedLoop, P: np.ndarray, bounds: FaultBounds, F: np.ndarray
    ) -> Optional[Tuple[np.ndarray, np.ndarray, float]]:
        """
        Smallest t with Corollary 1 at P + t D1, where F D1 + D1 F^T + R1 = 0 and
        R1 is the negative part of the Corollary-1 matrix plus a small multiple of I.

        Returns (R1, D1, t), or None when no t up to 1e12 works.
        """
        def corollary_ok(candidate: np.ndarray) -> bool:
            return self.certification.check_corollary1(cl, candidate, bounds).passed

        w, U = eigh(self.certification.corollary1_matrix(cl, P, bounds))
        deficit = (U[:, w < 0] * -w[w < 0]) @ U[:, w < 0].T
        R1 = symmetrize(deficit + 1e-3 * max(float(np.max(-w)), 1e-12) * np.eye(cl.size))
        D1 = symmetrize(solve_continuous_lyapunov(F, -R1))
        lo, hi = 0.0, 1.0
        while not corollary_ok(P + hi * D1):
            if hi >= 1e12:
                return None
            lo, hi = hi, 2.0 * hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if corollary_ok(P + mid * D1) else (mid, hi)
        return R1, D1, hi

    def minimize_over_cone(
        self, cl: ClosedLoop, P0: np.ndarray, bounds: FaultBounds, F: np.ndarray
    ) -> np.ndarray:
        """
        min Tr(Y2) over P0 + D(R), R = V V^T, subject to Corollary 1.

        D(R) solves F D + D F^T + R = 0, so Tr(Y2) of D(R) is Tr(W R) with
        F^T W + W F + E = 0, E selecting the error block, and the gradient of
        u^T D(R) u is the adjoint solution for u u^T. V is square, so every
        R >= 0 is reachable. SLSQP starts from the single-direction repair.
        Returns P0 unchanged when Corollary 1 cannot be restored.
        """
        repaired = self.repair_along_deficit(cl, P0, bounds, F)
        if repaired is None:
            log.warning("Corollary 1 cannot be restored along the deficit direction")
            return P0
        R1, D1, t = repaired
        m, n = cl.size, cl.n
        best = symmetrize(P0 + t * D1)
        best_trace = float(np.trace(best[n:, n:]))
        log.debug(f"Corollary 1 restored along D1 with t = {t:.3e}, Tr(Y2) = {best_trace:.6g}")

        def lyap(R: np.ndarray) -> np.ndarray:
            return symmetrize(solve_continuous_lyapunov(F, -R))

        def adjoint(X: np.ndarray) -> np.ndarray:
            return symmetrize(solve_continuous_lyapunov(F.T, -X))

        E = np.zeros((m, m))
        E[n:, n:] = np.eye(m - n)
        W = adjoint(E)
        base = self.certification.corollary1_matrix(cl, P0, bounds)

        def lowest(v: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
            V = v.reshape(m, m)
            w, U = eigh(base + 4.0 * lyap(V @ V.T))
            return float(w[0]), U[:, 0], V

        def constraint_jac(v: np.ndarray) -> np.ndarray:
            _, u, V = lowest(v)
            return (8.0 * adjoint(np.outer(u, u)) @ V).ravel()

        v0 = (np.sqrt(t) * np.linalg.cholesky(R1)).ravel()
        res = minimize(
            lambda v: float(np.sum(W * (v.reshape(m, m) @ v.reshape(m, m).T))),
            v0,
            jac=lambda v: (2.0 * W @ v.reshape(m, m)).ravel(),
            method="SLSQP",
            constraints=[{"type": "ineq", "fun": lambda v: lowest(v)[0], "jac": constraint_jac}],
            options={"maxiter": 500, "ftol": 1e-14},
        )
        if not np.all(np.isfinite(res.x)):
            log.warning(f"Cone search failed ({res.message}); keeping the single-direction repair")
            return best
        V = res.x.reshape(m, m)
        candidate = symmetrize(P0 + lyap(V @ V.T))
        if not self.certification.check_corollary1(cl, candidate, bounds).passed:
            touch_up = self.repair_along_deficit(cl, candidate, bounds, F)
            if touch_up is None:
                return best
            candidate = symmetrize(candidate + touch_up[2] * touch_up[1])
        trace = float(np.trace(candidate[n:, n:]))
        log.debug(f"Cone search ({res.nit} iterations): Tr(Y2) {best_trace:.6g} -> {trace:.6g}")
        return candidate if trace < best_trace else best

    def _result(
        self, gains: Gains, P: np.ndarray, cl: ClosedLoop, G: np.ndarray, gamma: float,
        report: CertificationReport, diagnostics: SolverDiagnostics,
    ) -> SynthesisResult:
        return SynthesisResult(
            gains=gains,
            P=P,
            n=cl.n,
            gamma_requested=gamma,
            gamma_achieved=report.trace_y2,
            G=G,
            report=report,
            diagnostics=diagnostics,
        )

    def certify_fixed_gains(
        self,
        tp: TransformedPlant,
        rs: ReducedSystem,
        G: np.ndarray,
        gains: Gains,
        bounds: FaultBounds,
        gamma: float,
    ) -> Outcome:
        """
        Decide whether externally supplied gains admit a certificate with Tr(Y2) <= gamma.

        Args:
            tp: Transformed plant
            rs: Reduced system
            G: Measurement matrix
            gains: Fixed (L, K)
            bounds: Fault bounds
            gamma: Requested bound

        Returns:
            SynthesisResult, or Infeasible with the minimal Tr(Y2) when one exists
        """
        es = self.assembly.build_error_system(rs, gains, G, tp)
        cl = self.assembly.build_closed_loop(tp, rs, es, gains)
        diagnostics = SolverDiagnostics(source="fixed_gains")
        minimal = self.minimal_certificate(cl, bounds, gamma)
        if minimal is None:
            log.warning(
                f"A_bar + 2I is not Hurwitz (spectral abscissa of A_bar = {cl.spectral_abscissa:.4g}); "
                "no certificate exists for these gains"
            )
            return Infeasible(
                reason="A_bar + 2I is not Hurwitz: no P > 0 satisfies the synthesis inequality",
                gamma_requested=gamma,
                G=G,
                spectral_abscissa=cl.spectral_abscissa,
                best_gains=gains,
                diagnostics=diagnostics,
            )
        P, report = minimal
        if report.passed:
            return self._result(gains, P, cl, G, gamma, report, diagnostics)
        failed = [
            label for label, ok in (
                ("Theorem 1", report.theorem1.passed),
                ("Theorem 2", report.theorem2.passed and report.margin_ok),
                ("Corollary 1", report.corollary1.passed),
                ("implication audit", report.implication.passed),
            ) if not ok
        ]
        if not report.trace_ok:
            failed.append(f"Tr(Y2) = {report.trace_y2:.6g} > gamma = {gamma:.6g}")
        return Infeasible(
            reason="minimal certificate fails: " + ", ".join(failed),
            gamma_requested=gamma,
            G=G,
            min_trace_y2=report.trace_y2,
            spectral_abscissa=cl.spectral_abscissa,
            best_gains=gains,
            diagnostics=diagnostics,
        )

    # warm start

    def seed_gains(
        self, tp: TransformedPlant, rs: ReducedSystem, G: np.ndarray, index: int, seq: np.random.SeedSequence
    ) -> Gains:
        """
        Observer Riccati L, fault-cancelling K_f and a Riccati K_x; perturbed for index > 0.

        K_x is pushed left of the -2 line by seed_feedback after the perturbation.
        """
        n_hat, n_ym = tp.n_hat, G.shape[0]
        GC = G @ rs.C
        try:
            X = solve_continuous_are(
                (rs.A + OBSERVER_SHIFT * np.eye(n_hat)).T, GC.T, np.eye(n_hat), np.eye(n_ym)
            )
            L = X @ GC.T
        except (LinAlgError, ValueError) as e:
            log.warning(f"Observer Riccati design failed ({e}); seeding L = 0")
            L = np.zeros((n_hat, n_ym))
        K_f = -np.linalg.pinv(tp.B_u) @ tp.B_f
        K = np.hstack([self.riccati_feedback(tp), K_f])
        gains = Gains(L=L, K=K, n_o=tp.n_o)
        if index > 0:
            rng = np.random.default_rng(seq)
            theta = gains.vector()
            theta = theta + 0.25 * (1.0 + np.abs(theta)) * rng.standard_normal(theta.size)
            gains = gains.with_vector(theta)
        return self.seed_feedback(tp, gains, G)

    @staticmethod
    def riccati_feedback(tp: TransformedPlant) -> np.ndarray:
        """
        Columns of the shifted state-feedback Riccati gain -B~_u^T X that act on x~_o.

        u = K xi_hat only sees x~_o, so the x~_uo columns of the full-state gain are dropped.
        """
        n, n_u = tp.n, tp.plant.n_u
        try:
            X = solve_continuous_are(tp.A + FEEDBACK_SHIFT * np.eye(n), tp.B_u, np.eye(n), np.eye(n_u))
        except (LinAlgError, ValueError) as e:
            log.warning(f"State-feedback Riccati design failed ({e}); seeding K_x = 0")
            return np.zeros((n_u, tp.n_o))
        return -(tp.B_u.T @ X)[:, tp.n_uo:]

    def seed_feedback(self, tp: TransformedPlant, gains: Gains, G: np.ndarray) -> Gains:
        """
        Nelder-Mead on the spectral abscissa of A_bar until it clears -2 - FEEDBACK_MARGIN.

        K_x is searched first; L joins the search when K_x alone cannot reach the
        -2 line, since E couples x~_uo into the error dynamics. K_f stays fixed.
        """
        target = -2.0 - FEEDBACK_MARGIN
        n_l, kx_shape = gains.L.size, gains.K_x.shape

        def build(theta: np.ndarray, with_l: bool) -> Gains:
            L = np.reshape(theta[:n_l], gains.L.shape) if with_l else gains.L
            K_x = np.reshape(theta[n_l:] if with_l else theta, kx_shape)
            return Gains(L=L, K=np.hstack([K_x, gains.K_f]), n_o=gains.n_o)

        def abscissa(theta: np.ndarray, with_l: bool) -> float:
            try:
                value = self.assembly.close_loop(tp, build(theta, with_l), G).spectral_abscissa
            except (LinAlgError, ValueError):
                return 1e12
            return value if np.isfinite(value) else 1e12

        best, level = gains, abscissa(gains.K_x.ravel(), False)
        for with_l in (False, True):
            if level <= target:
                break
            theta0 = np.concatenate([best.L.ravel(), best.K_x.ravel()]) if with_l else best.K_x.ravel()
            res = minimize(
                lambda theta: max(abscissa(theta, with_l), target), theta0, method="Nelder-Mead",
                options={"maxiter": 200 * theta0.size, "xatol": 1e-8, "fatol": 1e-10},
            )
            if res.fun < level:
                log.debug(f"Feedback search ({'L, K_x' if with_l else 'K_x'}): abscissa {level:.4g} -> {res.fun:.4g}")
                best, level = build(res.x, with_l), float(res.fun)
        if level >= -2.0:
            log.debug(f"Feedback search left the spectral abscissa of A_bar at {level:.4g}")
        return best

    def refine_gains(
        self, gains: Gains, tp: TransformedPlant, G: np.ndarray, bounds: FaultBounds, iters: Optional[int] = None
    ) -> Gains:
        """Nelder-Mead on the minimal certified Tr(Y2), penalizing A_bar + 2I instability."""
        iters = settings.warm_start_iters if iters is None else iters
        if iters <= 0:
            return gains

        def objective(theta: np.ndarray) -> float:
            try:
                cl = self.assembly.close_loop(tp, gains.with_vector(theta), G)
                shifted = cl.spectral_abscissa + 2.0
                if shifted >= -1e-3:
                    return 1e6 * (1.0 + shifted + 1e-3)
                F = cl.A + 2.0 * np.eye(cl.size)
                B = cl.B_bar(bounds.alpha, bounds.beta)
                P = solve_continuous_lyapunov(F, -(B @ B.T))
                value = float(np.trace(P[cl.n:, cl.n:]))
                return value if np.isfinite(value) else 1e12
            except (LinAlgError, ValueError):
                return 1e12

        theta0 = gains.vector()
        start = objective(theta0)
        res = minimize(
            objective, theta0, method="Nelder-Mead",
            options={"maxiter": iters, "xatol": 1e-8, "fatol": 1e-10},
        )
        if res.fun < start:
            log.debug(f"Gain refinement: {start:.4g} -> {res.fun:.4g} in {res.nit} iterations")
            return gains.with_vector(res.x)
        return gains

    def primitives_from_certificate(self, P: np.ndarray, gains: Gains, n: int) -> LiftPrimitives:
        """X1, M2 from the first block column of P^-1 and M1 = M2^T."""
        S = self.certification.inverse(P)
        return LiftPrimitives(
            X1=S[:n, :n],
            Y1=P[:n, :n],
            M1=S[n:, :n].T,
            M2=S[n:, :n],
            N=P[:n, n:],
            L=gains.L,
            K=gains.K,
            Y2=P[n:, n:],
        )

    # alternating projections

    @staticmethod
    def run_projections(
        projector: AffineProjector, x0: np.ndarray, max_iters: int, tol: float
    ) -> Tuple[np.ndarray, SolverDiagnostics]:
        """
        Alternate between the rank/PSD/slack sets and the affine set.

        Returns the final rank-projected Z and the iteration diagnostics.
        """
        x = x0
        step = float("inf")
        converged = False
        iteration = 0
        for iteration in range(1, max_iters + 1):
            y, _, _ = projector.project_sets(x)
            x_new = projector.project(y)
            if not np.all(np.isfinite(x_new)):
                raise ProjectionDivergedError(
                    f"non-finite iterate at iteration {iteration}", iterate=x, iteration=iteration
                )
            step = float(np.linalg.norm(x_new - x))
            x = x_new
            if step <= tol:
                converged = True
                break
        y, Z, spread = projector.project_sets(x)
        problem = projector.problem
        eq = max(problem.equality_residuals(Z).values(), default=0.0) / (1.0 + float(np.max(np.abs(Z))))
        return Z, LMISkills.gate(SolverDiagnostics(
            iterations=iteration,
            converged=converged,
            equality_residual=eq,
            rank_residual=spread,
            step=step,
            z_min_eig=float(eigh(Z, eigvals_only=True)[0]),
            source="projection",
        ), Z)

    @staticmethod
    def gate(diagnostics: SolverDiagnostics, Z: np.ndarray) -> SolverDiagnostics:
        """
        Mark whether Z meets the lifted tolerances: relative equality residual
        <= equality_tol, sigma_{r+1}/sigma_1 <= rank_tol and Z >= 0 up to
        eig_rtol * ||Z||.
        """
        psd_floor = -settings.eig_rtol * max(float(np.max(np.abs(Z))), 1.0)
        ok = (
            diagnostics.equality_residual <= settings.equality_tol
            and diagnostics.rank_residual <= settings.rank_tol
            and diagnostics.z_min_eig >= psd_floor
        )
        return diagnostics.model_copy(update={"lifted_ok": bool(ok)})

    def _restart(
        self,
        index: int,
        seq: np.random.SeedSequence,
        problem: LiftedProblem,
        projector: AffineProjector,
        tp: TransformedPlant,
        rs: ReducedSystem,
        G: np.ndarray,
        bounds: FaultBounds,
        max_iters: int,
    ) -> RestartOutcome:
        """
        One warm-started projection run.

        A result whose gains and P come from Z is accepted only when Z passes
        the lifted tolerances and the certificate checks. Otherwise the
        extracted gains are re-certified on their own ("extracted_gains"), and
        last the warm start itself ("warm_start").
        """
        gamma = problem.gamma
        outcome = RestartOutcome(index=index)
        gains = self.refine_gains(self.seed_gains(tp, rs, G, index, seq), tp, G, bounds)
        outcome.gains = gains
        cl = self.assembly.close_loop(tp, gains, G)
        minimal = self.minimal_certificate(cl, bounds, gamma)
        if minimal is None:
            log.debug(f"Restart {index}: warm start does not stabilize A_bar + 2I")
            return outcome
        P, warm_report = minimal
        outcome.min_trace = warm_report.trace_y2

        _, Z0 = self.lifting.embed(problem, self.primitives_from_certificate(P, gains, tp.n))
        try:
            Z, diagnostics = self.run_projections(projector, projector.initial_point(Z0), max_iters, settings.converge_tol)
        except ProjectionDivergedError as e:
            log.warning(f"Restart {index}: {e}")
            Z, diagnostics = None, SolverDiagnostics(iterations=e.iteration, source="none")
        diagnostics = diagnostics.model_copy(update={"accepted_restart": index})
        outcome.residual = diagnostics.equality_residual
        outcome.diagnostics = diagnostics

        def warm_start() -> RestartOutcome:
            if warm_report.passed:
                outcome.result = self._result(
                    gains, P, cl, G, gamma, warm_report, diagnostics.model_copy(update={"source": "warm_start"})
                )
            return outcome

        if Z is None:
            return warm_start()
        try:
            lifted_gains, P_z = self.lifting.extract(problem, Z, tp.n_o)
            cl_z = self.assembly.close_loop(tp, lifted_gains, G)
        except (QlftError, ValidationError) as e:
            log.warning(f"Restart {index}: extraction failed ({e})")
            return warm_start()
        if diagnostics.lifted_ok:
            report_z = self.certification.certify(cl_z, P_z, bounds, gamma, margin_required=self.strict_margin(cl_z))
            if report_z.passed:
                outcome.result = self._result(lifted_gains, P_z, cl_z, G, gamma, report_z, diagnostics)
                return outcome
        else:
            log.debug(
                f"Restart {index}: Z misses the lifted tolerances (equality {diagnostics.equality_residual:.2e}, "
                f"rank {diagnostics.rank_residual:.2e}, min eig {diagnostics.z_min_eig:.2e})"
            )

        resolved = self.certify_fixed_gains(tp, rs, G, lifted_gains, bounds, gamma)
        if isinstance(resolved, SynthesisResult):
            outcome.result = resolved.model_copy(
                update={"diagnostics": diagnostics.model_copy(update={"source": "extracted_gains"})}
            )
            return outcome
        if resolved.min_trace_y2 is not None:
            outcome.min_trace = min(outcome.min_trace, resolved.min_trace_y2)
        return warm_start()

    async def solve_rank_constrained(
        self,
        problem: LiftedProblem,
        tp: TransformedPlant,
        rs: ReducedSystem,
        G: np.ndarray,
        bounds: FaultBounds,
        seed: Optional[int] = None,
        restarts: Optional[int] = None,
        max_iters: Optional[int] = None,
        threads: Optional[int] = None,
    ) -> Outcome:
        """
        Run warm-started alternating projections over independent restarts.

        Restarts run in batches of `threads`; the lowest accepted restart index
        wins, so the result does not depend on the batch size.

        Args:
            problem: Assembled lifted problem
            tp, rs, G, bounds: Data needed to re-certify extracted gains
            seed: Master seed for the restart streams
            restarts: Restart budget
            max_iters: Projection iterations per restart
            threads: Concurrent restarts

        Returns:
            SynthesisResult or Infeasible with the best residuals found
        """
        seed = settings.seed if seed is None else seed
        restarts = settings.restarts if restarts is None else restarts
        max_iters = settings.max_iters if max_iters is None else max_iters
        threads = settings.threads if threads is None else threads

        projector = AffineProjector(problem)
        streams = np.random.SeedSequence(seed).spawn(restarts)
        semaphore = asyncio.Semaphore(threads)
        state: Dict[str, object] = {"next": 0, "outcomes": []}

        async def guarded(index: int) -> RestartOutcome:
            async with semaphore:
                return await asyncio.to_thread(
                    self._restart, index, streams[index], problem, projector, tp, rs, G, bounds, max_iters
                )

        @create_retry_decorator(max_attempts=batch_count(restarts, threads))
        async def run_batch() -> RestartOutcome:
            start = state["next"]
            stop = min(start + threads, restarts)
            state["next"] = stop
            outcomes = await asyncio.gather(*(guarded(k) for k in range(start, stop)))
            state["outcomes"].extend(outcomes)
            accepted = [o for o in outcomes if o.accepted]
            if not accepted:
                raise NoFeasibleRestart(f"restarts {start} to {stop - 1} produced no certified solution")
            return min(accepted, key=lambda o: o.index)

        try:
            winner = await run_batch()
        except NoFeasibleRestart:
            outcomes: List[RestartOutcome] = state["outcomes"]
            traces = [o for o in outcomes if o.min_trace is not None]
            best = min(traces, key=lambda o: o.min_trace) if traces else None
            log.warning(
                f"No certified solution after {len(outcomes)} restarts"
                + (f"; minimal Tr(Y2) found {best.min_trace:.6g}" if best else "")
            )
            return Infeasible(
                reason=f"no restart produced a certified solution within {len(outcomes)} restarts",
                gamma_requested=problem.gamma,
                G=G,
                min_trace_y2=best.min_trace if best else None,
                best_gains=best.gains if best else None,
                diagnostics=SolverDiagnostics(restarts_used=len(outcomes)),
                residuals=[o.residual for o in outcomes],
            )

        result = winner.result
        diagnostics = result.diagnostics.model_copy(update={"restarts_used": state["next"]})
        log.info(
            f"Restart {winner.index} accepted ({diagnostics.source}): Tr(Y2) = {result.gamma_achieved:.6g}"
        )
        return result.model_copy(update={"diagnostics": diagnostics})

    async def synthesize(
        self,
        tp: TransformedPlant,
        rs: ReducedSystem,
        G: np.ndarray,
        bounds: FaultBounds,
        gamma: float,
        **options,
    ) -> Outcome:
        """Assemble the lifted problem for gamma and solve it."""
        problem = self.lifting.assemble_lifted(tp, rs, G, bounds, gamma)
        return await self.solve_rank_constrained(problem, tp, rs, G, bounds, **options)

    async def bisect_gamma(
        self,
        solve: Callable[[float], Awaitable[Outcome]],
        gamma: float,
        ceiling: Optional[float] = None,
        iters: Optional[int] = None,
    ) -> GammaSearch:
        """
        Geometric bisection on gamma.

        A certified solution at gamma_1 certifies every gamma_2 >= its Tr(Y2),
        so the upper end moves to the achieved trace, not to the tried gamma.
        """
        ceiling = settings.gamma_ceiling if ceiling is None else ceiling
        iters = settings.bisect_iters if iters is None else iters
        probes: List[GammaProbe] = []

        async def attempt(value: float) -> Outcome:
            out = await solve(value)
            feasible = isinstance(out, SynthesisResult)
            trace = out.gamma_achieved if feasible else out.min_trace_y2
            probes.append(GammaProbe(gamma=value, feasible=feasible, trace_y2=trace))
            log.info(f"gamma trial {value:.6g}: {'feasible' if feasible else 'infeasible'}")
            return out

        first = await attempt(gamma)
        if isinstance(first, SynthesisResult):
            return GammaSearch(requested=gamma, lower=0.0, upper=first.gamma_achieved, probes=probes, result=first)

        top = await attempt(max(ceiling, gamma))
        if not isinstance(top, SynthesisResult):
            return GammaSearch(requested=gamma, lower=max(ceiling, gamma), probes=probes, last_infeasible=top)

        best, last = top, first
        lo, hi = gamma, top.gamma_achieved
        for _ in range(iters):
            if hi <= lo * 1.001:
                break
            mid = float(np.sqrt(lo * hi))
            out = await attempt(mid)
            if isinstance(out, SynthesisResult):
                best, hi = out, min(out.gamma_achieved, mid)
            else:
                last, lo = out, mid
        return GammaSearch(requested=gamma, lower=lo, upper=hi, probes=probes, result=best, last_infeasible=last)
