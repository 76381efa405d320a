"""
Tests for the lifted Gram-matrix problem.

Usage:
    pytest test_lifting.py
"""
import numpy as np
import pytest
from scipy.linalg import block_diag

from conftest import EXAMPLE_G, transformed
from src.models.lifted import Expr, LiftPrimitives
from src.models.plant import FaultBounds, QuantumPlant
from src.models.systems import Gains
from src.skills.assembly_skills import AssemblySkills
from src.skills.certification_skills import CertificationSkills
from src.skills.lifting_skills import LiftingSkills
from src.utils.errors import StructureError

lifting = LiftingSkills()
BOUNDS = FaultBounds(alpha=0.9, beta=0.4)


def case2_plant():
    """n = 2 with two fault channels, so n_hat = 3 > n."""
    rng = np.random.default_rng(9)
    plant = QuantumPlant(
        n=2, n_w=2, n_u=2, n_f=2, n_y=2,
        A=rng.standard_normal((2, 2)), B_w=rng.standard_normal((2, 2)), B_u=rng.standard_normal((2, 2)),
        B_f=rng.standard_normal((2, 2)), C=rng.standard_normal((2, 2)), D=rng.standard_normal((2, 2)),
    )
    tp, rs = transformed(plant)
    return tp, rs, np.array([[1.0, 0.5]])


def example_problem(example_plant, gamma=1e-3):
    tp, rs = transformed(example_plant)
    return tp, rs, lifting.assemble_lifted(tp, rs, EXAMPLE_G, BOUNDS, gamma)


def random_primitives(rng, n, n_hat, n_u, n_ym):
    R = rng.standard_normal((n + n_hat, n + n_hat))
    P = R @ R.T + (n + n_hat) * np.eye(n + n_hat)
    S = np.linalg.inv(P)
    return P, LiftPrimitives(
        X1=0.5 * (S[:n, :n] + S[:n, :n].T),
        Y1=P[:n, :n],
        M1=rng.standard_normal((n, n_hat)),
        M2=S[n:, :n],
        N=P[:n, n:],
        L=rng.standard_normal((n_hat, n_ym)),
        K=rng.standard_normal((n_u, n_hat)),
        Y2=P[n:, n:],
    )


def test_case_selection(example_plant):
    tp, _, problem = example_problem(example_plant)
    assert problem.case == "Case1"
    assert problem.n_blocks == 29
    assert problem.rank == problem.bs == tp.n

    tp2, rs2, G2 = case2_plant()
    problem2 = lifting.assemble_lifted(tp2, rs2, G2, BOUNDS, 1.0)
    assert problem2.case == "Case2"
    assert problem2.n_blocks == 27
    assert problem2.bs == tp2.n_hat


def test_self_audit_passes_on_both_cases(example_plant):
    _, _, problem = example_problem(example_plant)
    assert max(lifting.self_audit(problem, seed=1).values()) < 1e-8
    tp2, rs2, G2 = case2_plant()
    problem2 = lifting.assemble_lifted(tp2, rs2, G2, BOUNDS, 1.0, audit=False)
    assert max(lifting.self_audit(problem2, seed=2).values()) < 1e-8


@pytest.mark.parametrize("case", ["Case1", "Case2"])
def test_synthesis_block_is_congruence_of_theorem2(case, example_plant):
    if case == "Case1":
        tp, rs = transformed(example_plant)
        G = EXAMPLE_G
    else:
        tp, rs, G = case2_plant()
    problem = lifting.assemble_lifted(tp, rs, G, BOUNDS, 1.0)
    rng = np.random.default_rng(31)
    P, prim = random_primitives(rng, tp.n, tp.n_hat, tp.plant.n_u, G.shape[0])
    _, Z = lifting.embed(problem, prim)
    gram = problem.gram(Z)

    lmi = next(b for b in problem.inequalities if b.name == "synthesis").expr.evaluate(gram)
    cl = AssemblySkills().close_loop(tp, Gains(L=prim.L, K=prim.K, n_o=tp.n_o), G)
    block = CertificationSkills().theorem2_block(cl, P, BOUNDS)
    congruence = block_diag(prim.Pi, np.eye(block.shape[0] - P.shape[0]))
    expected = congruence.T @ block @ congruence
    np.testing.assert_allclose(lmi, expected, atol=1e-8 * (1.0 + np.max(np.abs(expected))))

    trace = problem.trace.evaluate(gram)[0, 0]
    assert trace == pytest.approx(np.trace(prim.Y2))


def test_primitives_read_back(example_plant):
    tp, _, problem = example_problem(example_plant)
    rng = np.random.default_rng(4)
    P, prim = random_primitives(rng, tp.n, tp.n_hat, tp.plant.n_u, 2)
    _, Z = lifting.embed(problem, prim)
    gains, P_back = lifting.extract(problem, Z, tp.n_o)
    np.testing.assert_allclose(P_back, P, atol=1e-12)
    np.testing.assert_allclose(gains.L, prim.L, atol=1e-12)
    np.testing.assert_allclose(gains.K, prim.K, atol=1e-12)


def test_embedding_has_block_rank(example_plant):
    tp, _, problem = example_problem(example_plant)
    _, prim = random_primitives(np.random.default_rng(8), tp.n, tp.n_hat, tp.plant.n_u, 2)
    V, Z = lifting.embed(problem, prim)
    assert V.shape == (problem.m, problem.bs)
    assert np.linalg.matrix_rank(Z) <= problem.rank


def test_non_positive_gamma_is_rejected(example_plant):
    tp, rs = transformed(example_plant)
    with pytest.raises(StructureError):
        lifting.assemble_lifted(tp, rs, EXAMPLE_G, BOUNDS, 0.0)


def test_expr_algebra():
    e = Expr.slice(1, 0, 2)
    Z = np.arange(16.0).reshape(4, 4)
    Z = Z + Z.T

    def gram(a, c):
        return Z[a * 2:(a + 1) * 2, c * 2:(c + 1) * 2]

    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose((M @ e @ M.T + np.eye(2)).evaluate(gram), M @ gram(1, 0) @ M.T + np.eye(2))
    np.testing.assert_allclose(e.T.evaluate(gram), gram(0, 1))
    op, const = (2.0 * e).operator(2, 2)
    np.testing.assert_allclose(op @ Z.ravel() + const, 2.0 * gram(1, 0).ravel())
