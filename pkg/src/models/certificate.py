"""
Data models for certificates, verdicts and synthesis outcomes.
"""
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .matrix import Matrix
from .systems import Gains


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class PBlocks:
    """Named blocks of P = [[Y1, N], [N^T, Y2]] for models carrying `P` and `n`."""

    @property
    def Y1(self) -> np.ndarray:
        return self.P[: self.n, : self.n]

    @property
    def N(self) -> np.ndarray:
        return self.P[: self.n, self.n:]

    @property
    def Y2(self) -> np.ndarray:
        return self.P[self.n:, self.n:]

    @property
    def trace_y2(self) -> float:
        return float(np.trace(self.Y2))


class Certificate(PBlocks, _Frozen):
    """P with S = P^-1 and the decay pair (c, tau) of the mean-square bound."""
    P: Matrix
    S: Matrix
    n: int = Field(..., gt=0)
    c: float = Field(..., description="Generalized-eigenvalue decay rate")
    tau: float = Field(..., ge=0.0)
    gamma: float = Field(..., gt=0.0)
    rate_ratio: float = Field(..., description="-lambda_max(Delta) / lambda_min(S)")

    def envelope(self, t: np.ndarray, g0: float) -> np.ndarray:
        """e^{-ct} g0 + tau / c."""
        return np.exp(-self.c * np.asarray(t)) * g0 + self.tau / self.c


class Theorem1Verdict(_Frozen):
    lambda_max: float
    tolerance: float
    passed: bool


class Theorem2Verdict(_Frozen):
    block_max_eig: float
    schur_max_eig: float
    tolerance: float
    block_passed: bool
    schur_passed: bool
    p_min_eig: float
    p_positive: bool

    @property
    def agree(self) -> bool:
        return self.block_passed == self.schur_passed

    @property
    def passed(self) -> bool:
        return self.block_passed and self.schur_passed and self.p_positive

    @property
    def margin(self) -> float:
        return -self.block_max_eig


class Corollary1Verdict(_Frozen):
    min_eig: float
    tolerance: float
    passed: bool


class ImplicationVerdict(_Frozen):
    applicable: bool
    passed: bool
    theorem1: Optional[Theorem1Verdict] = None
    slack: float


class CertificationReport(_Frozen):
    """All verdicts for one (closed loop, P, bounds, gamma)."""
    theorem1: Theorem1Verdict
    theorem2: Theorem2Verdict
    corollary1: Corollary1Verdict
    implication: ImplicationVerdict
    margin_required: float
    trace_y2: float
    gamma: float
    certificate: Optional[Certificate] = None
    notes: List[str] = Field(default_factory=list)

    @property
    def trace_ok(self) -> bool:
        return self.trace_y2 <= self.gamma

    @property
    def margin_ok(self) -> bool:
        return self.theorem2.margin >= self.margin_required - self.theorem2.tolerance

    @property
    def passed(self) -> bool:
        return (
            self.theorem1.passed
            and self.theorem2.passed
            and self.corollary1.passed
            and self.implication.passed
            and self.margin_ok
            and self.trace_ok
        )


class SolverDiagnostics(_Frozen):
    iterations: int = 0
    restarts_used: int = 0
    accepted_restart: Optional[int] = None
    converged: bool = False
    equality_residual: float = float("nan")
    rank_residual: float = float("nan")
    step: float = float("nan")
    z_min_eig: float = float("nan")
    # equality, rank and PSD tolerances all met by the final Z
    lifted_ok: bool = False
    # projection: gains and P both read from Z; extracted_gains: gains from Z,
    # P from the fixed-gain certificate; warm_start: neither comes from Z
    source: Literal["projection", "extracted_gains", "warm_start", "fixed_gains", "none"] = "none"


class SynthesisResult(PBlocks, _Frozen):
    """Gains with a certifying P."""
    kind: Literal["feasible"] = "feasible"
    gains: Gains
    P: Matrix
    n: int
    gamma_requested: float
    gamma_achieved: float
    G: Matrix
    report: CertificationReport
    diagnostics: SolverDiagnostics = Field(default_factory=SolverDiagnostics)

    def satisfies(self, gamma: float) -> bool:
        """A certified solution stays valid for any larger bound."""
        return self.report.passed and self.gamma_achieved <= gamma


class Infeasible(_Frozen):
    """No certified solution; carries the best evidence found."""
    kind: Literal["infeasible"] = "infeasible"
    reason: str
    gamma_requested: float
    G: Matrix
    min_trace_y2: Optional[float] = None
    spectral_abscissa: Optional[float] = None
    best_gains: Optional[Gains] = None
    diagnostics: SolverDiagnostics = Field(default_factory=SolverDiagnostics)
    residuals: List[float] = Field(default_factory=list)


Outcome = Union[SynthesisResult, Infeasible]


class GammaProbe(_Frozen):
    gamma: float
    feasible: bool
    trace_y2: Optional[float] = None


class GammaSearch(_Frozen):
    """Bisection over gamma: re-run the synthesis with adjusted bounds."""
    requested: float
    lower: float = Field(..., description="Largest probed gamma without a certified solution")
    upper: Optional[float] = Field(None, description="Smallest certified Tr(Y2) found")
    probes: List[GammaProbe] = Field(default_factory=list)
    result: Optional[SynthesisResult] = None
    last_infeasible: Optional[Infeasible] = None

    @property
    def found(self) -> bool:
        return self.result is not None
