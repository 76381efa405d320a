"""
Realizability skills: physical-realizability and measurement checks, and the
permutation transform that moves the estimated observables to the bottom.
"""
from itertools import combinations
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..models.matrix import as_matrix, max_abs
from ..models.plant import (
    CommutationStructure,
    FaultBounds,
    MeasurementMatrix,
    MeasurementReport,
    PlantSpec,
    QuantumPlant,
    RealizabilityReport,
    ResidualCheck,
    TransformedPlant,
)
from ..utils.errors import ConfigError, DimensionMismatchError, StructureError
from ..utils.logger import log
from config.settings import settings

PLANT_FIELDS = ("n", "n_w", "n_u", "n_f", "n_y", "A", "B_w", "B_u", "B_f", "C", "D")


class RealizabilitySkills:
    """Structural checks on quantum plants (pure functions of their inputs)."""

    def __init__(self, rtol: Optional[float] = None, rank_rtol: Optional[float] = None):
        self.rtol = settings.structural_rtol if rtol is None else rtol
        self.rank_rtol = settings.rank_rtol if rank_rtol is None else rank_rtol

    def _tolerance(self, *inputs: np.ndarray) -> float:
        return self.rtol * (1.0 + max_abs(*inputs))

    def _residual(self, name: str, residual: np.ndarray, *inputs: np.ndarray) -> ResidualCheck:
        size = max_abs(residual)
        tol = self._tolerance(*inputs)
        return ResidualCheck(name=name, residual=residual, max_abs=size, tolerance=tol, passed=size <= tol)

    def parse_plant_spec(self, data: Dict[str, Any]) -> PlantSpec:
        """
        Build a PlantSpec from the JSON plant file contents.

        Args:
            data: Decoded JSON object

        Returns:
            Validated PlantSpec (T is None when the file gives none)
        """
        if not isinstance(data, dict):
            raise ConfigError("plant file must contain a JSON object")
        missing = [k for k in PLANT_FIELDS + ("G", "n_o") if k not in data]
        if missing:
            raise ConfigError(f"plant file is missing fields: {', '.join(missing)}")
        try:
            plant = QuantumPlant(**{k: data[k] for k in PLANT_FIELDS})
            G = MeasurementMatrix(G=data["G"])
            bounds = FaultBounds(alpha=data.get("alpha", 0.0), beta=data.get("beta", 0.0))
            T = as_matrix(data["T"]) if data.get("T") is not None else None
            return PlantSpec(plant=plant, measurement=G, T=T, n_o=data["n_o"], bounds=bounds)
        except (ValidationError, ValueError, TypeError) as e:
            raise ConfigError(f"invalid plant specification: {e}") from e

    def check_physical_realizability(
        self, plant: QuantumPlant, comm: CommutationStructure, override_condition_ii: bool = False
    ) -> RealizabilityReport:
        """
        Evaluate conditions (i)-(iii) with B = [B_w B_u] and D padded to [D 0].

        Args:
            plant: Plant to check
            comm: Commutation matrices sized for the plant
            override_condition_ii: Admit plants failing only condition (ii)

        Returns:
            RealizabilityReport with one residual per condition
        """
        theta, theta_w, theta_y = comm.theta, comm.theta_w, comm.theta_y
        if theta.shape != (plant.n, plant.n):
            raise DimensionMismatchError("Theta", (plant.n, plant.n), theta.shape)
        if theta_w.shape != (plant.n_w + plant.n_u,) * 2:
            raise DimensionMismatchError("Theta_w", (plant.n_w + plant.n_u,) * 2, theta_w.shape)
        if theta_y.shape != (plant.n_y, plant.n_y):
            raise DimensionMismatchError("Theta_y", (plant.n_y, plant.n_y), theta_y.shape)

        B, D = plant.B, plant.D_padded
        A, C = plant.A, plant.C
        report = RealizabilityReport(
            conditions=[
                self._residual("i", A @ theta + theta @ A.T + B @ theta_w @ B.T, A, B, theta, theta_w),
                self._residual("ii", B @ theta_w @ D.T + theta @ C.T, B, D, C, theta, theta_w),
                self._residual("iii", D @ theta_w @ D.T - theta_y, D, theta_w, theta_y),
            ],
            override_condition_ii=override_condition_ii,
        )
        for c in report.conditions:
            level = "INFO" if c.passed else "WARNING"
            log.log(level, f"Realizability ({c.name}): max-abs residual {c.max_abs:.3e} (tol {c.tolerance:.1e})")
        if not report.condition("ii").passed and override_condition_ii:
            log.warning("Condition (ii) fails; admitted by override")
        return report

    def check_measurement_matrix(self, measurement: MeasurementMatrix, theta_y: np.ndarray) -> MeasurementReport:
        """G Theta_y G^T = 0 and rank(G) <= n_y / 2."""
        G = measurement.G
        n_y = theta_y.shape[0]
        if G.shape[1] != n_y:
            raise DimensionMismatchError("G", (G.shape[0], n_y), G.shape)
        residual = G @ theta_y @ G.T
        size = max_abs(residual)
        sv = np.linalg.svd(G, compute_uv=False)
        rank = int(np.sum(sv > self.rank_rtol * sv[0])) if sv.size and sv[0] > 0 else 0
        report = MeasurementReport(
            residual=residual,
            max_abs=size,
            rank=rank,
            rank_bound=n_y // 2,
            annihilates=size <= self._tolerance(G, theta_y),
            rank_ok=rank <= n_y // 2,
        )
        log.info(f"Measurement matrix: |G Theta_y G^T| = {size:.3e}, rank {rank} (bound {n_y // 2})")
        return report

    @staticmethod
    def _check_permutation(T: np.ndarray, n: int) -> None:
        if T.shape != (n, n):
            raise DimensionMismatchError("T", (n, n), T.shape)
        binary = np.all((T == 0.0) | (T == 1.0))
        if not (binary and np.all(T.sum(axis=0) == 1.0) and np.all(T.sum(axis=1) == 1.0)):
            raise StructureError("T is not a permutation matrix")

    def apply_transformation(
        self, plant: QuantumPlant, comm: CommutationStructure, T: np.ndarray, n_o: int
    ) -> TransformedPlant:
        """
        Reorder the plant variables so the last n_o entries are commuting observables.

        Args:
            plant: Plant to transform
            comm: Commutation structure of the plant
            T: Permutation matrix
            n_o: Size of the estimated block

        Returns:
            TransformedPlant with A~ = T A T^T, B~ = T B, C~ = C T^T
        """
        T = as_matrix(T)
        self._check_permutation(T, plant.n)
        if not 1 <= n_o <= plant.n // 2:
            raise StructureError(f"n_o must lie in [1, {plant.n // 2}], got {n_o}")

        theta_t = T @ comm.theta @ T.T
        corner = theta_t[plant.n - n_o:, plant.n - n_o:]
        if np.any(corner != 0.0):
            rows, cols = np.nonzero(corner)
            offending = ", ".join(
                f"({r + plant.n - n_o},{c + plant.n - n_o})={corner[r, c]:+g}" for r, c in zip(rows, cols)
            )
            raise StructureError(f"estimated block does not commute; non-zero T Theta T^T entries: {offending}")

        return TransformedPlant(
            plant=plant,
            T=T,
            n_o=n_o,
            A=T @ plant.A @ T.T,
            B_w=T @ plant.B_w,
            B_u=T @ plant.B_u,
            B_f=T @ plant.B_f,
            C=plant.C @ T.T,
            D=plant.D,
        )

    @staticmethod
    def invert_transformation(tp: TransformedPlant) -> QuantumPlant:
        """Undo the permutation; exact in floating point."""
        T = tp.T
        p = tp.plant
        return QuantumPlant(
            n=p.n, n_w=p.n_w, n_u=p.n_u, n_f=p.n_f, n_y=p.n_y,
            A=T.T @ tp.A @ T,
            B_w=T.T @ tp.B_w,
            B_u=T.T @ tp.B_u,
            B_f=T.T @ tp.B_f,
            C=tp.C @ T,
            D=tp.D,
        )

    @staticmethod
    def enumerate_transformations(comm: CommutationStructure, max_n: int = 8) -> List[Tuple[np.ndarray, int]]:
        """
        All commuting estimated blocks for n <= max_n.

        Permutations that only reorder inside the x~_uo or x~_o block are
        equivalent; one canonical T (both blocks in ascending index order) is
        returned per admissible index set.
        """
        theta = comm.theta
        n = theta.shape[0]
        if n > max_n:
            raise StructureError(f"enumeration limited to n <= {max_n}, got n = {n}")
        found: List[Tuple[np.ndarray, int]] = []
        for n_o in range(1, n // 2 + 1):
            for chosen in combinations(range(n), n_o):
                if np.any(theta[np.ix_(chosen, chosen)] != 0.0):
                    continue
                order = [i for i in range(n) if i not in chosen] + list(chosen)
                found.append((np.eye(n)[order], n_o))
        log.debug(f"{len(found)} admissible (T, n_o) pairs for n = {n}")
        return found
