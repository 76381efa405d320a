"""
Assembly skills: augmented, reduced, error and closed-loop systems.
"""
import numpy as np

from ..models.plant import TransformedPlant
from ..models.systems import AugmentedSystem, ClosedLoop, ErrorSystem, Gains, ReducedSystem
from ..utils.errors import DimensionMismatchError


class AssemblySkills:
    """Deterministic block assembly from a transformed plant and gains."""

    @staticmethod
    def build_augmented(tp: TransformedPlant) -> AugmentedSystem:
        n, n_f = tp.n, tp.plant.n_f
        A = np.zeros((n + n_f, n + n_f))
        A[:n, :n] = tp.A
        A[:n, n:] = tp.B_f
        return AugmentedSystem(
            A=A,
            B_w=np.vstack([tp.B_w, np.zeros((n_f, tp.plant.n_w))]),
            B_u=np.vstack([tp.B_u, np.zeros((n_f, tp.plant.n_u))]),
            B_h=np.vstack([np.zeros((n, n_f)), np.eye(n_f)]),
            C=np.hstack([tp.C, np.zeros((tp.plant.n_y, n_f))]),
        )

    @staticmethod
    def build_reduced(tp: TransformedPlant) -> ReducedSystem:
        """xi = [x~_o; f]: A_hat = [[A~22, B~f2], [0, 0]], C_hat = [C~2 0]."""
        n_o, n_f = tp.n_o, tp.plant.n_f
        A = np.zeros((n_o + n_f, n_o + n_f))
        A[:n_o, :n_o] = tp.A22
        A[:n_o, n_o:] = tp.B_f2
        return ReducedSystem(
            n_o=n_o,
            n_f=n_f,
            A=A,
            A_uo=np.vstack([tp.A21, np.zeros((n_f, tp.n_uo))]),
            B_w=np.vstack([tp.B_w2, np.zeros((n_f, tp.plant.n_w))]),
            B_u=np.vstack([tp.B_u2, np.zeros((n_f, tp.plant.n_u))]),
            B_h=np.vstack([np.zeros((n_o, n_f)), np.eye(n_f)]),
            C=np.hstack([tp.C2, np.zeros((tp.plant.n_y, n_f))]),
        )

    @staticmethod
    def _check_gains(tp: TransformedPlant, gains: Gains, G: np.ndarray) -> None:
        n_hat = tp.n_hat
        if gains.L.shape != (n_hat, G.shape[0]):
            raise DimensionMismatchError("L", (n_hat, G.shape[0]), gains.L.shape)
        if gains.K.shape != (tp.plant.n_u, n_hat):
            raise DimensionMismatchError("K", (tp.plant.n_u, n_hat), gains.K.shape)
        if gains.n_o != tp.n_o:
            raise DimensionMismatchError("K_x", (tp.plant.n_u, tp.n_o), gains.K_x.shape)
        if G.shape[1] != tp.plant.n_y:
            raise DimensionMismatchError("G", (G.shape[0], tp.plant.n_y), G.shape)

    def build_error_system(self, rs: ReducedSystem, gains: Gains, G: np.ndarray, tp: TransformedPlant) -> ErrorSystem:
        """A_e = A_hat - L G C_hat, B_e = [B_hat_w - L G D~, B_hat_u], E = A_hat_uo - L G C~1."""
        self._check_gains(tp, gains, G)
        LG = gains.L @ G
        return ErrorSystem(
            A_e=rs.A - LG @ rs.C,
            B_e=np.hstack([rs.B_w - LG @ tp.D, rs.B_u]),
            E=rs.A_uo - LG @ tp.C1,
        )

    def build_closed_loop(self, tp: TransformedPlant, rs: ReducedSystem, es: ErrorSystem, gains: Gains) -> ClosedLoop:
        """
        Interconnection in z = (x~, e) with u = K xi_hat = K (xi - e).

        The K_x term acts on x~_o only: [0 B~_u K_x] has n - n_o leading zero columns.
        """
        n, n_hat, n_f = tp.n, tp.n_hat, tp.plant.n_f
        if es.A_e.shape != (n_hat, n_hat):
            raise DimensionMismatchError("A_e", (n_hat, n_hat), es.A_e.shape)

        A_c = tp.A.copy()
        A_c[:, tp.n_uo:] += tp.B_u @ gains.K_x

        A = np.zeros((n + n_hat, n + n_hat))
        A[:n, :n] = A_c
        A[:n, n:] = -tp.B_u @ gains.K
        A[n:, : tp.n_uo] = es.E
        A[n:, n:] = es.A_e

        B_w = np.vstack([np.hstack([tp.B_w, tp.B_u]), es.B_e])
        B_f = np.vstack([tp.B_f + tp.B_u @ gains.K_f, np.zeros((n_hat, n_f))])
        B_h = np.vstack([np.zeros((n, n_f)), rs.B_h])
        return ClosedLoop(n=n, n_o=tp.n_o, n_f=n_f, A=A, B_w=B_w, B_f=B_f, B_h=B_h)

    def close_loop(self, tp: TransformedPlant, gains: Gains, G: np.ndarray) -> ClosedLoop:
        """Reduced system, error system and interconnection in one call."""
        rs = self.build_reduced(tp)
        es = self.build_error_system(rs, gains, G, tp)
        return self.build_closed_loop(tp, rs, es, gains)
