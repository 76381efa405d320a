"""Data models package."""
from .matrix import Matrix, Tensor, as_matrix, diag_j
from .plant import (
    QuantumPlant,
    CommutationStructure,
    MeasurementMatrix,
    FaultBounds,
    TransformedPlant,
    ResidualCheck,
    RealizabilityReport,
    MeasurementReport,
    PlantSpec,
)
from .systems import AugmentedSystem, ReducedSystem, Gains, ErrorSystem, ClosedLoop
from .certificate import (
    Certificate,
    Theorem1Verdict,
    Theorem2Verdict,
    Corollary1Verdict,
    ImplicationVerdict,
    CertificationReport,
    SolverDiagnostics,
    SynthesisResult,
    Infeasible,
    Outcome,
    GammaProbe,
    GammaSearch,
)
from .lifted import Expr, Term, EqualityGroup, InequalityBlock, BlockShape, LiftedProblem, LiftPrimitives
from .simulation import FaultPiece, FaultSignal, MomentTrajectory, MonteCarloMoments, EnvelopeVerdict, SimulationSummary
from .run import RunConfig, SimulationOptions, MonteCarloOptions, SynthesisOptions, ValidatedPlant

__all__ = [
    "Matrix", "Tensor", "as_matrix", "diag_j",
    "QuantumPlant", "CommutationStructure", "MeasurementMatrix", "FaultBounds",
    "TransformedPlant", "ResidualCheck", "RealizabilityReport", "MeasurementReport", "PlantSpec",
    "AugmentedSystem", "ReducedSystem", "Gains", "ErrorSystem", "ClosedLoop",
    "Certificate", "Theorem1Verdict", "Theorem2Verdict", "Corollary1Verdict", "ImplicationVerdict",
    "CertificationReport", "SolverDiagnostics", "SynthesisResult", "Infeasible", "Outcome", "GammaProbe", "GammaSearch",
    "Expr", "Term", "EqualityGroup", "InequalityBlock", "BlockShape", "LiftedProblem", "LiftPrimitives",
    "FaultPiece", "FaultSignal", "MomentTrajectory", "MonteCarloMoments", "EnvelopeVerdict", "SimulationSummary",
    "RunConfig", "SimulationOptions", "MonteCarloOptions", "SynthesisOptions", "ValidatedPlant",
]
