"""
Lifting skills: build the Gram-matrix constraint system for the synthesis problem.

Z = V V^T with V = [I; x-blocks; v-blocks], every block bs x bs (true shapes
zero-padded into the top-left corner). The bilinear couplings between gains
and certificate appear as slices Z[a, c] = V_a V_c^T, so every constraint is
affine in Z and the nonconvexity is carried by rank(Z) <= bs.

Block numbering (Case 1, bs = n; 10 x-blocks + 19 v-blocks = 29):
    0 I        1 X1      2 Y1      3 M1^T    4 M2^T    5 N^T
    6 L^T      7 K^T     8 Y2      9 N
    10 X1 Bu           = X1 B~_u
    11 X1 Bu K         = Z[10, 7]
    12 M2 L            = Z[4, 6]
    13 Om1             = X1 A_c + M2^T [E 0]
    14 M1 Y1           = Z[3, 2]
    15 Om1 Y1 M1       = Z[13, 14]
    16 F               = M2^T A_e - X1 B~_u K
    17 M1 N            = Z[3, 5]
    18 F N M1          = Z[16, 17]
    19 M1 Bu           = M1^T B~_u
    20 M1 Bu K         = Z[19, 7]
    21 Om2             = M1^T A_c
    22 Om2 Y1 M1       = Z[21, 14]
    23 M1 Bu K N M1    = Z[20, 17]
    24 M1 Y1 M1        = Z[14, 3]
    25 Y1 X1 = Z[2, 1]   26 N M2 = Z[9, 4]   27 N X1 = Z[5, 1]   28 Y2 M2 = Z[8, 4]

Case 2 (bs = n_hat, 27 blocks) replaces X1 Bu and M1 Bu by a single
K Bu = K^T B~_u^T, reads X1 Bu K = Z[X1, K Bu] and M1 Bu K = Z[M1^T, K Bu],
and takes M1^T Y1 M1 directly from Z[M1^T, M1 Y1].
"""
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..models.lifted import (
    BlockShape,
    EqualityGroup,
    Expr,
    InequalityBlock,
    LiftedProblem,
    LiftPrimitives,
    Term,
)
from ..models.matrix import symmetrize
from ..models.plant import FaultBounds, TransformedPlant
from ..models.systems import Gains, ReducedSystem
from ..utils.errors import StructureError
from ..utils.logger import log
from config.settings import settings

PRIMITIVES = ("X1", "Y1", "M1T", "M2T", "NT", "LT", "KT", "Y2", "N")

# (name, kind, factors) in block order; linear definitions are built per plant
CASE1_V = (
    ("X1Bu", "linear", None),
    ("X1BuK", "product", ("X1Bu", "KT")),
    ("M2L", "product", ("M2T", "LT")),
    ("Om1", "linear", None),
    ("M1Y1", "product", ("M1T", "Y1")),
    ("Om1Y1M1", "product", ("Om1", "M1Y1")),
    ("F", "linear", None),
    ("M1N", "product", ("M1T", "NT")),
    ("FNM1", "product", ("F", "M1N")),
    ("M1Bu", "linear", None),
    ("M1BuK", "product", ("M1Bu", "KT")),
    ("Om2", "linear", None),
    ("Om2Y1M1", "product", ("Om2", "M1Y1")),
    ("M1BuKNM1", "product", ("M1BuK", "M1N")),
    ("M1Y1M1", "product", ("M1Y1", "M1T")),
    ("Y1X1", "product", ("Y1", "X1")),
    ("NM2", "product", ("N", "M2T")),
    ("NX1", "product", ("NT", "X1")),
    ("Y2M2", "product", ("Y2", "M2T")),
)

CASE2_V = (
    ("KBu", "linear", None),
    ("X1BuK", "product", ("X1", "KBu")),
    ("M2L", "product", ("M2T", "LT")),
    ("Om1", "linear", None),
    ("M1Y1", "product", ("M1T", "Y1")),
    ("Om1Y1M1", "product", ("Om1", "M1Y1")),
    ("F", "linear", None),
    ("M1N", "product", ("M1T", "NT")),
    ("FNM1", "product", ("F", "M1N")),
    ("M1BuK", "product", ("M1T", "KBu")),
    ("Om2", "linear", None),
    ("Om2Y1M1", "product", ("Om2", "M1Y1")),
    ("M1BuKNM1", "product", ("M1BuK", "M1N")),
    ("Y1X1", "product", ("Y1", "X1")),
    ("NM2", "product", ("N", "M2T")),
    ("NX1", "product", ("NT", "X1")),
    ("Y2M2", "product", ("Y2", "M2T")),
)

SYMMETRIC = ("X1", "Y1", "Y2")


def _pad(m: np.ndarray, bs: int) -> np.ndarray:
    out = np.zeros((bs, bs))
    out[: m.shape[0], : m.shape[1]] = m
    return out


class _Builder:
    """Block bookkeeping shared by the constraint assembly."""

    def __init__(self, bs: int):
        self.bs = bs
        self.blocks: List[BlockShape] = []
        self.index: Dict[str, int] = {}

    def add(self, name: str, rows: int, cols: int, kind: str,
            factors: Optional[Tuple[str, str]] = None, definition: Optional[Expr] = None) -> None:
        if rows > self.bs or cols > self.bs:
            raise StructureError(f"block {name} ({rows}x{cols}) does not fit block side {self.bs}")
        self.index[name] = len(self.blocks)
        self.blocks.append(BlockShape(
            name=name,
            index=len(self.blocks),
            rows=rows,
            cols=cols,
            kind=kind,
            factors=None if factors is None else (self.index[factors[0]], self.index[factors[1]]),
            definition=definition,
        ))

    def s(self, name: str) -> Expr:
        """True-shape part of Z[name, 0]."""
        b = self.blocks[self.index[name]]
        return Expr.slice(b.index, 0, self.bs, b.rows, b.cols)

    def g(self, a: str, c: str) -> Expr:
        """True-shape part of Z[a, c] = V_a V_c^T."""
        ba, bc = self.blocks[self.index[a]], self.blocks[self.index[c]]
        return Expr.slice(ba.index, bc.index, self.bs, ba.rows, bc.rows)

    def full(self, a: str, c: str = "I") -> Expr:
        return Expr.slice(self.index[a], self.index[c], self.bs)


class LiftingSkills:
    """Assembly, embedding, extraction and self-audit of the lifted problem."""

    def __init__(self, strict_scale: Optional[float] = None):
        self.strict_scale = settings.strict_scale if strict_scale is None else strict_scale

    @staticmethod
    def select_case(tp: TransformedPlant) -> str:
        return "Case1" if tp.n >= tp.n_hat else "Case2"

    def assemble_lifted(
        self,
        tp: TransformedPlant,
        rs: ReducedSystem,
        G: np.ndarray,
        bounds: FaultBounds,
        gamma: float,
        audit: bool = True,
    ) -> LiftedProblem:
        """
        Build the complete constraint system for one (plant, G, bounds, gamma).

        Args:
            tp: Transformed plant
            rs: Reduced system of tp
            G: Measurement matrix
            bounds: Fault bounds alpha, beta
            gamma: Requested bound on Tr(Y2)
            audit: Run the Gram-structure self-audit on a random embedding

        Returns:
            LiftedProblem with equality groups, semidefinite blocks and the trace constraint
        """
        if gamma <= 0:
            raise StructureError(f"gamma must be positive, got {gamma}")

        n, n_o, n_uo = tp.n, tp.n_o, tp.n_uo
        n_f, n_u, n_w = tp.plant.n_f, tp.plant.n_u, tp.plant.n_w
        n_hat, n_ym = tp.n_hat, G.shape[0]
        case = self.select_case(tp)
        bs = n if case == "Case1" else n_hat
        if n_u > bs or n_ym > bs:
            raise StructureError(
                f"{case} needs n_u ({n_u}) and n_ym ({n_ym}) not above block side {bs}"
            )

        Sx = np.zeros((n_hat, n))
        Sx[:n_o, n_uo:] = np.eye(n_o)
        Su = np.eye(n_uo, n)
        Ef = np.vstack([np.zeros((n_o, n_f)), np.eye(n_f)])
        Bu, Bt = tp.B_u, np.hstack([tp.B_w, tp.B_u])

        b = _Builder(bs)
        b.add("I", bs, bs, "identity")
        shapes = {
            "X1": (n, n), "Y1": (n, n), "M1T": (n_hat, n), "M2T": (n, n_hat), "NT": (n_hat, n),
            "LT": (n_ym, n_hat), "KT": (n_hat, n_u), "Y2": (n_hat, n_hat), "N": (n, n_hat),
        }
        for name in PRIMITIVES:
            b.add(name, *shapes[name], "primitive")

        def linear(name: str) -> Expr:
            if name == "X1Bu":
                return b.s("X1") @ Bu
            if name == "KBu":
                return b.s("KT") @ Bu.T
            if name == "M1Bu":
                return b.s("M1T") @ Bu
            if name == "Om1":
                return (
                    b.s("X1") @ tp.A
                    + b.s("X1BuK") @ Sx
                    + b.s("M2T") @ (rs.A_uo @ Su)
                    - b.s("M2L") @ (G @ tp.C1 @ Su)
                )
            if name == "F":
                return b.s("M2T") @ rs.A - b.s("M2L") @ (G @ rs.C) - b.s("X1BuK")
            if name == "Om2":
                return b.s("M1T") @ tp.A + b.s("M1BuK") @ Sx
            raise KeyError(name)

        for name, kind, factors in CASE1_V if case == "Case1" else CASE2_V:
            if kind == "linear":
                expr = linear(name)
                b.add(name, *expr.shape, "linear", definition=expr)
            else:
                rows = b.blocks[b.index[factors[0]]].rows
                cols = b.blocks[b.index[factors[1]]].rows
                b.add(name, rows, cols, "product", factors=factors)

        expected = 29 if case == "Case1" else 27
        if len(b.blocks) != expected:
            raise StructureError(f"{case} lift has {len(b.blocks)} blocks, expected {expected}")

        equalities = self._equalities(b, n, n_hat)
        epsilon = self.strict_scale * (1.0 + np.linalg.norm(tp.A, 2) + np.linalg.norm(rs.A, 2))

        # congruence-transformed synthesis inequality
        root2 = np.sqrt(2.0)
        X1, M2T, M1T = b.s("X1"), b.s("M2T"), b.s("M1T")
        M1Y1M1 = b.s("M1Y1M1") if case == "Case1" else b.g("M1T", "M1Y1")
        Om1 = b.s("Om1")
        Om3 = b.s("Om2Y1M1") - b.s("M1BuKNM1")
        blk11 = Om1 + Om1.T + 4.0 * X1
        blk12 = b.s("Om1Y1M1") + b.s("FNM1") + b.s("Om2").T + 4.0 * M1T.T
        blk22 = Om3 + Om3.T + 4.0 * M1Y1M1
        om4 = Expr.hstack([
            root2 * bounds.alpha * (X1 @ tp.B_f + b.s("X1BuK") @ Ef),
            root2 * bounds.beta * (M2T @ rs.B_h),
            X1 @ Bt + M2T @ np.hstack([rs.B_w, rs.B_u])
            - b.s("M2L") @ (G @ np.hstack([tp.D, np.zeros((tp.plant.n_y, n_u))])),
        ])
        om5 = Expr.hstack([
            root2 * bounds.alpha * (M1T @ tp.B_f + b.s("M1BuK") @ Ef),
            Expr.zeros(n_hat, n_f),
            M1T @ Bt,
        ])
        tail = 2 * n_f + n_w + n_u
        lmi = Expr.block([
            [blk11, blk12, om4],
            [blk12.T, blk22, om5],
            [om4.T, om5.T, Expr.constant(-np.eye(tail))],
        ])

        P = Expr.block([[b.s("Y1"), b.s("N")], [b.s("N").T, b.s("Y2")]])
        B_h_bar = np.vstack([np.zeros((n, n_f)), rs.B_h])
        weight = min(2.0 * bounds.beta ** 2 - 1.0, 0.0)
        corollary = 4.0 * P + weight * (B_h_bar @ B_h_bar.T)

        inequalities = [
            InequalityBlock(name="synthesis", expr=self._sym(lmi), sense="nsd", bound=-epsilon),
            InequalityBlock(name="P", expr=self._sym(P), sense="psd", bound=epsilon),
            InequalityBlock(name="corollary", expr=self._sym(corollary), sense="psd", bound=0.0),
        ]
        i_y2 = b.index["Y2"]
        eye = np.eye(bs)
        trace = Expr((1, 1), [Term(eye[i:i + 1], i_y2, 0, eye[:, i:i + 1]) for i in range(n_hat)])

        problem = LiftedProblem(
            case=case,
            bs=bs,
            n_blocks=len(b.blocks),
            rank=bs,
            blocks=b.blocks,
            equalities=equalities,
            inequalities=inequalities,
            trace=trace,
            gamma=gamma,
            trace_floor=1e-12 * gamma,
            epsilon=epsilon,
            n=n,
            n_hat=n_hat,
            n_u=n_u,
            n_ym=n_ym,
        )
        log.info(
            f"Lifted problem: {case}, Z side {problem.m}, {len(equalities)} equality groups, "
            f"rank bound {bs}, eps_strict {epsilon:.2e}"
        )
        if audit:
            self.self_audit(problem)
        return problem

    @staticmethod
    def _sym(expr: Expr) -> Expr:
        return 0.5 * (expr + expr.T)

    @staticmethod
    def _equalities(b: _Builder, n: int, n_hat: int) -> List[EqualityGroup]:
        bs = b.bs
        groups = [EqualityGroup(name="Z00", expr=b.full("I") - np.eye(bs))]

        for block in b.blocks:
            if block.kind == "product":
                a, c = (b.blocks[i].name for i in block.factors)
                groups.append(EqualityGroup(name=f"def:{block.name}", expr=b.full(block.name) - b.full(a, c)))
            elif block.kind == "linear":
                groups.append(EqualityGroup(
                    name=f"def:{block.name}",
                    expr=b.full(block.name) - block.definition.place(bs, bs),
                ))

        for name in SYMMETRIC:
            groups.append(EqualityGroup(name=f"sym:{name}", expr=b.full(name) - b.full(name).T))
        groups.append(EqualityGroup(name="link:N", expr=b.full("NT") - b.full("N").T))

        # P [X1; M2] = [I; 0]
        groups.append(EqualityGroup(name="couple:11", expr=b.s("Y1X1") + b.s("NM2") - np.eye(n)))
        groups.append(EqualityGroup(name="couple:21", expr=b.s("NX1") + b.s("Y2M2")))

        eye = np.eye(bs)
        for name in PRIMITIVES:
            block = b.blocks[b.index[name]]
            if block.rows < bs:
                groups.append(EqualityGroup(name=f"pad:{name}:rows", expr=eye[block.rows:] @ b.full(name)))
            if block.cols < bs:
                groups.append(EqualityGroup(
                    name=f"pad:{name}:cols",
                    expr=eye[: block.rows] @ b.full(name) @ eye[:, block.cols:],
                ))
        return groups

    def embed(self, problem: LiftedProblem, prim: LiftPrimitives) -> Tuple[np.ndarray, np.ndarray]:
        """
        Gram factor V of the given primitives and Z = V V^T.

        Args:
            problem: Lifted problem (fixes the block layout)
            prim: Primitive unknowns

        Returns:
            (V, Z)
        """
        bs = problem.bs
        values = {
            "X1": prim.X1, "Y1": prim.Y1, "M1T": prim.M1.T, "M2T": prim.M2.T, "NT": prim.N.T,
            "LT": prim.L.T, "KT": prim.K.T, "Y2": prim.Y2, "N": prim.N,
        }
        V: List[np.ndarray] = []

        def gram(a: int, c: int) -> np.ndarray:
            return V[a] @ V[c].T

        for block in problem.blocks:
            if block.kind == "identity":
                V.append(np.eye(bs))
            elif block.kind == "primitive":
                value = np.asarray(values[block.name], dtype=float)
                if value.shape != (block.rows, block.cols):
                    raise StructureError(f"primitive {block.name}: expected {(block.rows, block.cols)}, got {value.shape}")
                V.append(_pad(value, bs))
            elif block.kind == "product":
                V.append(gram(*block.factors))
            else:
                V.append(_pad(block.definition.evaluate(gram), bs))
        stacked = np.vstack(V)
        return stacked, stacked @ stacked.T

    @staticmethod
    def primitives(problem: LiftedProblem, Z: np.ndarray) -> LiftPrimitives:
        """Read all primitives back from the first block column of Z."""
        gram = problem.gram(Z)

        def part(name: str) -> np.ndarray:
            block = problem.block(name)
            return gram(block.index, 0)[: block.rows, : block.cols]

        return LiftPrimitives(
            X1=symmetrize(part("X1")),
            Y1=symmetrize(part("Y1")),
            M1=part("M1T").T,
            M2=part("M2T").T,
            N=part("N"),
            L=part("LT").T,
            K=part("KT").T,
            Y2=symmetrize(part("Y2")),
        )

    def extract(self, problem: LiftedProblem, Z: np.ndarray, n_o: int) -> Tuple[Gains, np.ndarray]:
        """Gains (L, K) and P = [[Y1, N], [N^T, Y2]] from an accepted Z."""
        prim = self.primitives(problem, Z)
        return Gains(L=prim.L, K=prim.K, n_o=n_o), prim.P

    def self_audit(self, problem: LiftedProblem, seed: int = 20240101) -> Dict[str, float]:
        """
        Embed random primitives and verify every equality vanishes on V V^T.

        X1 and M2 are taken from P^-1 so the coupling groups hold; everything
        else is free. Raises StructureError naming the first failing group.
        """
        rng = np.random.default_rng(seed)
        n, n_hat = problem.n, problem.n_hat
        R = rng.standard_normal((n + n_hat, n + n_hat))
        P = R @ R.T + (n + n_hat) * np.eye(n + n_hat)
        S = np.linalg.inv(P)
        prim = LiftPrimitives(
            X1=0.5 * (S[:n, :n] + S[:n, :n].T),
            Y1=P[:n, :n],
            M1=rng.standard_normal((n, n_hat)),
            M2=S[n:, :n],
            N=P[:n, n:],
            L=rng.standard_normal((n_hat, problem.n_ym)),
            K=rng.standard_normal((problem.n_u, n_hat)),
            Y2=P[n:, n:],
        )
        _, Z = self.embed(problem, prim)
        scale = 1.0 + float(np.max(np.abs(Z)))
        residuals = problem.equality_residuals(Z)
        for name, value in residuals.items():
            if value > 1e-8 * scale:
                raise StructureError(f"lift self-audit failed on {name}: residual {value:.3e}")
        log.debug(f"Lift self-audit passed on {len(residuals)} groups (scale {scale:.2e})")
        return residuals
