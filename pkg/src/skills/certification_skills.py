"""
Certification skills: Theorem 1 / Theorem 2 / Corollary 1 checks and the
mean-square decay certificate.
"""
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh, eigvalsh

from ..models.certificate import (
    Certificate,
    CertificationReport,
    Corollary1Verdict,
    ImplicationVerdict,
    Theorem1Verdict,
    Theorem2Verdict,
)
from ..models.matrix import symmetrize
from ..models.plant import FaultBounds
from ..models.systems import ClosedLoop
from ..utils.errors import CertificationError
from ..utils.logger import log
from config.settings import settings


class CertificationSkills:
    """Independent verification of stability and error-bound certificates."""

    def __init__(self, eig_rtol: Optional[float] = None, audit_slack: Optional[float] = None):
        self.eig_rtol = settings.eig_rtol if eig_rtol is None else eig_rtol
        self.audit_slack = settings.audit_slack if audit_slack is None else audit_slack

    def _tol(self, m: np.ndarray) -> float:
        return self.eig_rtol * (1.0 + float(np.linalg.norm(m, 2)))

    @staticmethod
    def inverse(P: np.ndarray) -> np.ndarray:
        """S = P^-1 through a Cholesky solve; P must be symmetric positive definite."""
        try:
            factor = cho_factor(symmetrize(P))
        except LinAlgError as e:
            raise CertificationError("P is not positive definite") from e
        return symmetrize(cho_solve(factor, np.eye(P.shape[0])))

    @staticmethod
    def delta(cl: ClosedLoop, S: np.ndarray) -> np.ndarray:
        """A^T S + S A + S B_h B_h^T S + S B_f B_f^T S."""
        SBh, SBf = S @ cl.B_h, S @ cl.B_f
        return cl.A.T @ S + S @ cl.A + SBh @ SBh.T + SBf @ SBf.T

    def _delta_checked(self, cl: ClosedLoop, S: np.ndarray) -> np.ndarray:
        if not np.allclose(S, S.T, rtol=0.0, atol=self._tol(S)):
            raise CertificationError("S is not symmetric")
        if eigvalsh(symmetrize(S))[0] <= 0.0:
            raise CertificationError("S is not positive definite")
        D = self.delta(cl, S)
        if not np.allclose(D, D.T, rtol=0.0, atol=self._tol(D)):
            raise CertificationError("Delta lost symmetry")
        return symmetrize(D)

    def check_theorem1(self, cl: ClosedLoop, S: np.ndarray, slack: float = 1.0) -> Theorem1Verdict:
        """Delta <= 0 up to tolerance (scaled by `slack`)."""
        D = self._delta_checked(cl, S)
        lam = float(eigvalsh(D)[-1])
        tol = slack * self._tol(D)
        return Theorem1Verdict(lambda_max=lam, tolerance=tol, passed=lam <= tol)

    def theorem2_block(self, cl: ClosedLoop, P: np.ndarray, bounds: FaultBounds) -> np.ndarray:
        """[[A P + P A^T + 4P, B], [B^T, -I]] with B = [sqrt2 a B_f, sqrt2 b B_h, B_w]."""
        B = cl.B_bar(bounds.alpha, bounds.beta)
        top = cl.A @ P + P @ cl.A.T + 4.0 * P
        return symmetrize(np.block([[top, B], [B.T, -np.eye(B.shape[1])]]))

    def check_theorem2_lmi(self, cl: ClosedLoop, P: np.ndarray, bounds: FaultBounds) -> Theorem2Verdict:
        """
        Eigenvalue test of the block inequality and of its Schur complement.

        Args:
            cl: Closed loop
            P: Candidate certificate
            bounds: Fault bounds

        Returns:
            Theorem2Verdict; both forms must agree away from the boundary
        """
        block = self.theorem2_block(cl, P, bounds)
        B = cl.B_bar(bounds.alpha, bounds.beta)
        schur = symmetrize(cl.A @ P + P @ cl.A.T + 4.0 * P + B @ B.T)
        block_max = float(eigvalsh(block)[-1])
        schur_max = float(eigvalsh(schur)[-1])
        tol = self._tol(block)
        p_min = float(eigvalsh(symmetrize(P))[0])
        verdict = Theorem2Verdict(
            block_max_eig=block_max,
            schur_max_eig=schur_max,
            tolerance=tol,
            block_passed=block_max <= tol,
            schur_passed=schur_max <= self._tol(schur),
            p_min_eig=p_min,
            p_positive=p_min > 0.0,
        )
        if not verdict.agree:
            log.warning(f"Block and Schur forms disagree: {block_max:.3e} vs {schur_max:.3e}")
        if not verdict.p_positive:
            log.warning(f"P is not positive definite (lambda_min = {p_min:.3e})")
        return verdict

    @staticmethod
    def corollary1_matrix(cl: ClosedLoop, P: np.ndarray, bounds: FaultBounds) -> np.ndarray:
        a2, b2 = 2.0 * bounds.alpha ** 2 - 1.0, 2.0 * bounds.beta ** 2 - 1.0
        return symmetrize(
            4.0 * P
            + a2 * cl.B_f @ cl.B_f.T
            + b2 * cl.B_h @ cl.B_h.T
            + cl.B_w @ cl.B_w.T
        )

    def check_corollary1(self, cl: ClosedLoop, P: np.ndarray, bounds: FaultBounds) -> Corollary1Verdict:
        """4P + (2a^2-1) B_f B_f^T + (2b^2-1) B_h B_h^T + B_w B_w^T >= 0."""
        M = self.corollary1_matrix(cl, P, bounds)
        lam = float(eigvalsh(M)[0])
        tol = self._tol(M)
        return Corollary1Verdict(min_eig=lam, tolerance=tol, passed=lam >= -tol)

    def implication_audit(
        self,
        cl: ClosedLoop,
        P: np.ndarray,
        bounds: FaultBounds,
        theorem2: Optional[Theorem2Verdict] = None,
        corollary1: Optional[Corollary1Verdict] = None,
    ) -> ImplicationVerdict:
        """Theorem 2 and Corollary 1 together must give Theorem 1 for S = P^-1."""
        theorem2 = theorem2 or self.check_theorem2_lmi(cl, P, bounds)
        corollary1 = corollary1 or self.check_corollary1(cl, P, bounds)
        if not (theorem2.passed and corollary1.passed):
            return ImplicationVerdict(applicable=False, passed=True, slack=self.audit_slack)
        t1 = self.check_theorem1(cl, self.inverse(P), slack=self.audit_slack)
        if not t1.passed:
            log.error(
                f"Implication audit failed: lambda_max(Delta) = {t1.lambda_max:.3e} > {t1.tolerance:.3e}"
            )
        return ImplicationVerdict(applicable=True, passed=t1.passed, theorem1=t1, slack=self.audit_slack)

    def build_certificate(self, cl: ClosedLoop, P: np.ndarray, bounds: FaultBounds, gamma: float) -> Certificate:
        """
        Decay pair (c, tau) for S = P^-1.

        c is -lambda_max of the pencil (Delta, S), so z^T Delta z <= -c z^T S z.
        """
        S = self.inverse(P)
        D = self._delta_checked(cl, S)
        c = -float(eigh(D, S, eigvals_only=True)[-1])
        if c <= 0.0:
            raise CertificationError(f"decay rate c = {c:.3e} is not positive")
        rate_ratio = -float(eigvalsh(D)[-1]) / float(eigvalsh(S)[0])
        tau = bounds.alpha ** 2 + bounds.beta ** 2 + float(np.trace(cl.B_w.T @ S @ cl.B_w))
        return Certificate(P=symmetrize(P), S=S, n=cl.n, c=c, tau=tau, gamma=gamma, rate_ratio=rate_ratio)

    def certify(
        self,
        cl: ClosedLoop,
        P: np.ndarray,
        bounds: FaultBounds,
        gamma: float,
        margin_required: float = 0.0,
    ) -> CertificationReport:
        """Run every check on (cl, P) and attach the certificate when Theorem 1 holds."""
        notes: List[str] = []
        if not bounds.declared:
            notes.append("alpha or beta is zero: no fault declared")
        t2 = self.check_theorem2_lmi(cl, P, bounds)
        c1 = self.check_corollary1(cl, P, bounds)
        try:
            S = self.inverse(P)
            t1 = self.check_theorem1(cl, S)
        except CertificationError as e:
            notes.append(str(e))
            t1 = Theorem1Verdict(lambda_max=float("inf"), tolerance=0.0, passed=False)
        implication = (
            self.implication_audit(cl, P, bounds, t2, c1)
            if t2.p_positive
            else ImplicationVerdict(applicable=False, passed=True, slack=self.audit_slack)
        )

        certificate = None
        if t1.passed:
            try:
                certificate = self.build_certificate(cl, P, bounds, gamma)
            except CertificationError as e:
                notes.append(str(e))

        report = CertificationReport(
            theorem1=t1,
            theorem2=t2,
            corollary1=c1,
            implication=implication,
            margin_required=margin_required,
            trace_y2=float(np.trace(P[cl.n:, cl.n:])),
            gamma=gamma,
            certificate=certificate,
            notes=notes,
        )
        log.info(
            f"Certification: T1 {t1.passed}, T2 {t2.passed} (margin {t2.margin:.2e}), "
            f"C1 {c1.passed}, Tr(Y2) = {report.trace_y2:.6g} vs gamma {gamma:.6g}"
        )
        return report

    @staticmethod
    def decay_envelope(cert: Certificate, g0: float) -> Callable[[np.ndarray], np.ndarray]:
        """t -> e^{-ct} g0 + tau / c."""
        if cert.c <= 0.0:
            raise CertificationError(f"decay rate c = {cert.c:.3e} is not positive")
        if cert.tau < 0.0:
            raise CertificationError(f"offset tau = {cert.tau:.3e} is negative")
        return lambda t: cert.envelope(t, g0)

    @staticmethod
    def noise_commutator_trace(B_w: np.ndarray, S: np.ndarray, theta_w: np.ndarray) -> float:
        """Tr(B_w^T S B_w Theta_w); zero for symmetric S."""
        return float(np.trace(B_w.T @ S @ B_w @ theta_w))
