"""
Tests for the plant checks and the permutation transform.

Usage:
    pytest test_realizability.py
"""
import numpy as np
import pytest
from hypothesis import given, seed, settings as hsettings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import build_plant, load_example
from src.models.matrix import J, as_matrix, diag_j
from src.models.plant import CommutationStructure, MeasurementMatrix, QuantumPlant
from src.skills.assembly_skills import AssemblySkills
from src.skills.realizability_skills import RealizabilitySkills
from src.utils.errors import ConfigError, DimensionMismatchError, StructureError

skills = RealizabilitySkills()


def example_report(override: bool = False):
    plant = build_plant(load_example())
    return skills.check_physical_realizability(plant, CommutationStructure.for_plant(plant), override)


def test_example_condition_i_vanishes():
    report = example_report()
    c = report.condition("i")
    assert c.passed
    assert c.max_abs == 0.0


def test_example_condition_ii_residual():
    c = example_report().condition("ii")
    assert not c.passed
    np.testing.assert_allclose(c.residual, [[1.0, -2.0], [4.0, -2.0]], atol=1e-12)
    assert c.max_abs == pytest.approx(4.0)


def test_example_condition_iii_passes():
    assert example_report().condition("iii").passed


def test_override_admits_condition_ii_only():
    assert not example_report(override=False).passed
    assert example_report(override=True).passed


def test_identity_drift_fails_condition_i():
    plant = QuantumPlant(
        n=2, n_w=2, n_u=2, n_f=1, n_y=2,
        A=np.eye(2), B_w=np.zeros((2, 2)), B_u=np.zeros((2, 2)), B_f=np.zeros((2, 1)),
        C=np.zeros((2, 2)), D=np.zeros((2, 2)),
    )
    c = skills.check_physical_realizability(plant, CommutationStructure.for_plant(plant)).condition("i")
    np.testing.assert_allclose(c.residual, 2.0 * J)
    assert c.max_abs == pytest.approx(2.0)
    assert not c.passed


def test_condition_i_residual_is_antisymmetric():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.choice([2, 4]))
        plant = QuantumPlant(
            n=n, n_w=2, n_u=2, n_f=1, n_y=2,
            A=rng.standard_normal((n, n)),
            B_w=rng.standard_normal((n, 2)),
            B_u=rng.standard_normal((n, 2)),
            B_f=rng.standard_normal((n, 1)),
            C=rng.standard_normal((2, n)),
            D=rng.standard_normal((2, 2)),
        )
        r = skills.check_physical_realizability(plant, CommutationStructure.for_plant(plant)).condition("i").residual
        np.testing.assert_allclose(r, -r.T, atol=1e-12)


def test_wrong_commutation_size_is_rejected(example_plant):
    comm = CommutationStructure(theta=diag_j(4), theta_w=diag_j(4), theta_y=diag_j(2))
    with pytest.raises(DimensionMismatchError):
        skills.check_physical_realizability(example_plant, comm)


def test_default_measurement_matrix_passes():
    report = skills.check_measurement_matrix(MeasurementMatrix(G=[[1, 0], [1, 0]]), J)
    assert report.passed
    assert report.rank == 1
    assert report.max_abs == 0.0


def test_identity_measurement_fails():
    report = skills.check_measurement_matrix(MeasurementMatrix(G=np.eye(2)), J)
    assert not report.annihilates
    assert not report.rank_ok
    assert not report.passed


@seed(3)
@hsettings(max_examples=200)
@given(row=arrays(np.float64, (1, 4), elements=st.floats(min_value=-1e3, max_value=1e3)))
def test_single_row_measurement_always_annihilates(row):
    report = skills.check_measurement_matrix(MeasurementMatrix(G=row), diag_j(4))
    assert report.annihilates
    assert report.rank <= 1


def test_example_transform_blocks(example_plant):
    comm = CommutationStructure.for_plant(example_plant)
    tp = skills.apply_transformation(example_plant, comm, np.eye(2), 1)
    np.testing.assert_array_equal(tp.A22, [[-1.0]])
    np.testing.assert_array_equal(tp.B_f2, [[1.0]])
    np.testing.assert_array_equal(tp.A21, [[3.0]])
    np.testing.assert_array_equal(tp.C2, [[1.0], [-2.0]])


def test_example_augmented_and_reduced(example_plant):
    tp = skills.apply_transformation(example_plant, CommutationStructure.for_plant(example_plant), np.eye(2), 1)
    aug = AssemblySkills.build_augmented(tp)
    np.testing.assert_array_equal(aug.A, [[-1, 0, 0], [3, -1, 1], [0, 0, 0]])
    rs = AssemblySkills.build_reduced(tp)
    np.testing.assert_array_equal(rs.A, [[-1, 1], [0, 0]])
    np.testing.assert_array_equal(rs.A_uo, [[3], [0]])
    np.testing.assert_array_equal(rs.B_w, [[2, -1], [0, 0]])
    np.testing.assert_array_equal(rs.B_u, [[4, 3], [0, 0]])
    np.testing.assert_array_equal(rs.C, [[1, 0], [-2, 0]])


def test_identity_transform_is_a_no_op(example_plant):
    tp = skills.apply_transformation(example_plant, CommutationStructure.for_plant(example_plant), np.eye(2), 1)
    for name in ("A", "B_w", "B_u", "B_f", "C", "D"):
        np.testing.assert_array_equal(getattr(tp, name), getattr(example_plant, name))


def test_transform_round_trip_is_exact():
    rng = np.random.default_rng(11)
    plant = QuantumPlant(
        n=4, n_w=2, n_u=2, n_f=1, n_y=2,
        A=rng.standard_normal((4, 4)), B_w=rng.standard_normal((4, 2)), B_u=rng.standard_normal((4, 2)),
        B_f=rng.standard_normal((4, 1)), C=rng.standard_normal((2, 4)), D=rng.standard_normal((2, 2)),
    )
    comm = CommutationStructure.for_plant(plant)
    for T, n_o in skills.enumerate_transformations(comm):
        back = skills.invert_transformation(skills.apply_transformation(plant, comm, T, n_o))
        for name in ("A", "B_w", "B_u", "B_f", "C", "D"):
            np.testing.assert_array_equal(getattr(back, name), getattr(plant, name))


def test_non_permutation_is_rejected(example_plant):
    comm = CommutationStructure.for_plant(example_plant)
    with pytest.raises(StructureError, match="permutation"):
        skills.apply_transformation(example_plant, comm, np.array([[1.0, 1.0], [0.0, 1.0]]), 1)


def test_non_commuting_block_names_entries():
    plant = QuantumPlant(
        n=4, n_w=2, n_u=2, n_f=1, n_y=2,
        A=-np.eye(4), B_w=np.zeros((4, 2)), B_u=np.zeros((4, 2)), B_f=np.ones((4, 1)),
        C=np.zeros((2, 4)), D=np.eye(2),
    )
    with pytest.raises(StructureError, match=r"\(2,3\)"):
        skills.apply_transformation(plant, CommutationStructure.for_plant(plant), np.eye(4), 2)


@pytest.mark.parametrize("n, count", [(2, 2), (4, 8)])
def test_enumerate_transformations_counts(n, count):
    comm = CommutationStructure(theta=diag_j(n), theta_w=diag_j(4), theta_y=diag_j(2))
    found = skills.enumerate_transformations(comm)
    assert len(found) == count
    for T, n_o in found:
        corner = (T @ comm.theta @ T.T)[n - n_o:, n - n_o:]
        assert not np.any(corner)


def test_parse_missing_fields():
    data = load_example()
    del data["C"]
    with pytest.raises(ConfigError, match="C"):
        skills.parse_plant_spec(data)


def test_parse_odd_dimension():
    data = load_example()
    data["n_w"] = 3
    with pytest.raises(StructureError):
        skills.parse_plant_spec(data)


def test_parse_shape_mismatch():
    data = load_example()
    data["B_w"] = [[0, 0, 0], [2, -1, 0]]
    with pytest.raises(DimensionMismatchError, match="B_w"):
        skills.parse_plant_spec(data)


def test_parse_defaults():
    data = load_example()
    del data["T"], data["alpha"], data["beta"]
    spec = skills.parse_plant_spec(data)
    assert spec.T is None
    assert spec.bounds.alpha == 0.0
    assert not spec.bounds.declared


def test_flat_list_is_read_as_a_row():
    assert as_matrix([1.0, 0.0]).shape == (1, 2)
    assert as_matrix(3.0).shape == (1, 1)
    data = load_example()
    data["G"] = [1, 0]
    spec = skills.parse_plant_spec(data)
    assert spec.measurement.G.shape == (1, 2)
    assert skills.check_measurement_matrix(spec.measurement, diag_j(2)).passed


def test_flat_column_field_names_the_matrix():
    data = load_example()
    data["B_f"] = [0, 1]
    with pytest.raises(DimensionMismatchError, match="B_f"):
        skills.parse_plant_spec(data)


@pytest.mark.parametrize("field, value, message", [
    ("theta", np.array([[0.0, 1.0], [1.0, 0.0]]), "antisymmetric"),
    ("theta", 2.0 * J, "block-diagonal"),
    ("theta_y", np.kron(np.eye(2), J)[[1, 0, 2, 3]][:, [1, 0, 2, 3]], "block-diagonal"),
    ("theta_w", np.zeros((3, 3)), "even size"),
])
def test_commutation_structure_rejects_non_j_blocks(field, value, message):
    matrices = {"theta": diag_j(2), "theta_w": diag_j(4), "theta_y": diag_j(2)}
    matrices[field] = value
    with pytest.raises(StructureError, match=message):
        CommutationStructure(**matrices)
