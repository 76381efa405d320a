"""
Shared fixtures: the bundled example plant and two small toy plants.
"""
import json
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import LinAlgError, solve_continuous_are

from config.settings import settings
from src.models.plant import CommutationStructure, FaultBounds, QuantumPlant
from src.models.systems import Gains
from src.skills.assembly_skills import AssemblySkills
from src.skills.realizability_skills import RealizabilitySkills

ROOT = Path(__file__).resolve().parent
FIXTURES = ROOT / "config" / "fixtures"

EXAMPLE_G = np.array([[1.0, 0.0], [1.0, 0.0]])
EXAMPLE_L = np.array([[-4.07, 1.03], [9.22, -30.21]])
EXAMPLE_K = np.array([[-0.15, -2.6643], [0.30, 2.6857]])

# Realizable: A = -4I, B_w = B_u = 2I, C = -2I, D = I
REALIZABLE_TOY = {
    "n": 2, "n_w": 2, "n_u": 2, "n_f": 1, "n_y": 2,
    "A": [[-4, 0], [0, -4]],
    "B_w": [[2, 0], [0, 2]],
    "B_u": [[2, 0], [0, 2]],
    "B_f": [[0], [1]],
    "C": [[-2, 0], [0, -2]],
    "D": [[1, 0], [0, 1]],
    "G": [[0, 1], [0, 1]],
    "T": [[1, 0], [0, 1]],
    "n_o": 1,
    "alpha": 0.1,
    "beta": 0.1,
}
# A_e has a double eigenvalue at -5, E = 0, K = 0
REALIZABLE_TOY_GAINS = {"L": [[-3.0, 0.0], [-12.5, 0.0]], "K": [[0.0, 0.0], [0.0, 0.0]]}


def build_plant(data: dict) -> QuantumPlant:
    keys = ("n", "n_w", "n_u", "n_f", "n_y", "A", "B_w", "B_u", "B_f", "C", "D")
    return QuantumPlant(**{k: data[k] for k in keys})


def transformed(plant: QuantumPlant, n_o: int = 1, T=None):
    """(tp, rs) for a plant and permutation."""
    comm = CommutationStructure.for_plant(plant)
    tp = RealizabilitySkills().apply_transformation(plant, comm, np.eye(plant.n) if T is None else T, n_o)
    return tp, AssemblySkills.build_reduced(tp)


def load_example() -> dict:
    with open(FIXTURES / "example_plant.json", "r", encoding="utf-8") as f:
        return json.load(f)


def damped_toy():
    """
    Strongly damped 2-state plant with a fault on x2 (not physically realizable).

    Returns (tp, rs, G, bounds) with G = [[0, 1], [0, 1]] and alpha = beta = 0.1.
    """
    plant = QuantumPlant(
        n=2, n_w=2, n_u=2, n_f=1, n_y=2,
        A=-5.0 * np.eye(2),
        B_w=0.1 * np.eye(2),
        B_u=0.1 * np.eye(2),
        B_f=[[0.0], [1.0]],
        C=np.eye(2),
        D=0.01 * np.eye(2),
    )
    tp, rs = transformed(plant)
    return tp, rs, np.array([[0.0, 1.0], [0.0, 1.0]]), FaultBounds(alpha=0.1, beta=0.1)


def damped_toy_gains() -> Gains:
    # A_e = [[-10, 1], [-50, 0]], eigenvalues -5 +- 5i
    return Gains(L=[[5.0, 0.0], [50.0, 0.0]], K=[[0.0, 0.0], [0.0, 0.0]], n_o=1)


def random_stable_closed_loop(rng: np.random.Generator, n: int = 2, n_o: int = 1, n_f: int = 1):
    """Random transformed plant and gains whose closed loop clears the -2 decay line."""
    n_hat = n_o + n_f
    while True:
        A = rng.standard_normal((n, n)) - 6.0 * np.eye(n)
        plant = QuantumPlant(
            n=n, n_w=2, n_u=2, n_f=n_f, n_y=2,
            A=A,
            B_w=0.3 * rng.standard_normal((n, 2)),
            B_u=0.3 * rng.standard_normal((n, 2)),
            B_f=rng.standard_normal((n, n_f)),
            C=rng.standard_normal((2, n)),
            D=0.1 * rng.standard_normal((2, 2)),
        )
        tp, rs = transformed(plant, n_o)
        G = rng.standard_normal((1, 2))
        GC = G @ rs.C
        try:
            X = solve_continuous_are((rs.A + 3.0 * np.eye(n_hat)).T, GC.T, np.eye(n_hat), np.eye(1))
        except (LinAlgError, ValueError):
            continue
        gains = Gains(
            L=X @ GC.T,
            K=0.2 * rng.standard_normal((2, n_hat)),
            n_o=n_o,
        )
        cl = AssemblySkills().close_loop(tp, gains, G)
        if cl.is_hurwitz(2.5):
            return tp, rs, G, gains, cl


@pytest.fixture
def example_data() -> dict:
    return load_example()


@pytest.fixture
def example_plant() -> QuantumPlant:
    return build_plant(load_example())


@pytest.fixture
def small_solver(monkeypatch):
    """Shrink the restart budget so solver tests stay fast."""
    monkeypatch.setattr(settings, "max_iters", 20)
    monkeypatch.setattr(settings, "restarts", 2)
    monkeypatch.setattr(settings, "threads", 2)
    monkeypatch.setattr(settings, "warm_start_iters", 40)
    monkeypatch.setattr(settings, "bisect_iters", 3)
    return settings
