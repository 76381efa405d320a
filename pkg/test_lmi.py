"""
Tests for the fixed-gain certificate, the projection kernels, the
rank-constrained solver and the gamma search.

Usage:
    pytest test_lmi.py
"""
import asyncio

import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from conftest import EXAMPLE_G, EXAMPLE_K, EXAMPLE_L, damped_toy, damped_toy_gains, transformed
from config.settings import settings
from src.models.certificate import GammaSearch, Infeasible, SolverDiagnostics, SynthesisResult
from src.models.plant import FaultBounds
from src.models.systems import Gains
from src.skills.lmi_skills import LMISkills, duplication, pack, project_rank_psd, unpack

lmi = LMISkills()


def test_rank_projection_truncates():
    Z, spread = project_rank_psd(np.diag([3.0, 1.0]), 1)
    np.testing.assert_allclose(Z, np.diag([3.0, 0.0]), atol=1e-14)
    assert spread == pytest.approx(1.0 / 3.0)


def test_rank_projection_clips_negative_part():
    Z, _ = project_rank_psd(np.diag([2.0, -5.0, 1.0]), 2)
    np.testing.assert_allclose(Z, np.diag([2.0, 0.0, 1.0]), atol=1e-14)


def test_packing_is_an_isometry():
    rng = np.random.default_rng(0)
    R = rng.standard_normal((5, 5))
    M = R + R.T
    x = pack(M)
    assert np.linalg.norm(x) == pytest.approx(np.linalg.norm(M))
    np.testing.assert_allclose(unpack(x, 5), M)
    np.testing.assert_allclose(duplication(5) @ x, M.ravel())


def test_damped_toy_is_certified_at_generous_gamma():
    tp, rs, G, bounds = damped_toy()
    outcome = lmi.certify_fixed_gains(tp, rs, G, damped_toy_gains(), bounds, 10.0)
    assert isinstance(outcome, SynthesisResult)
    assert outcome.report.passed
    assert outcome.gamma_achieved <= 10.0
    assert outcome.report.certificate.c > 0.0
    assert outcome.diagnostics.source == "fixed_gains"


def test_damped_toy_reports_minimal_trace_when_gamma_is_too_small():
    tp, rs, G, bounds = damped_toy()
    feasible = lmi.certify_fixed_gains(tp, rs, G, damped_toy_gains(), bounds, 10.0)
    outcome = lmi.certify_fixed_gains(tp, rs, G, damped_toy_gains(), bounds, 0.01)
    assert isinstance(outcome, Infeasible)
    assert outcome.min_trace_y2 == pytest.approx(feasible.gamma_achieved)
    assert outcome.min_trace_y2 > 0.01
    assert "Tr(Y2)" in outcome.reason
    np.testing.assert_array_equal(outcome.G, G)


def test_minimal_certificate_is_trace_minimal_along_feasible_directions():
    tp, rs, G, bounds = damped_toy()
    cl = lmi.assembly.close_loop(tp, damped_toy_gains(), G)
    P, report = lmi.minimal_certificate(cl, bounds, 10.0)
    assert report.passed
    # moving along F X + X F^T = -I keeps the certificate and raises Tr(Y2)
    F = cl.A + 2.0 * np.eye(cl.size)
    X = solve_continuous_lyapunov(F, -np.eye(cl.size))
    bigger = lmi.certification.certify(cl, P + 0.1 * (X + X.T) / 2.0, bounds, 10.0)
    assert bigger.theorem2.passed
    assert bigger.trace_y2 > report.trace_y2


def test_example_gains_are_not_certifiable(example_plant):
    tp, rs = transformed(example_plant)
    gains = Gains(L=EXAMPLE_L, K=EXAMPLE_K, n_o=1)
    outcome = lmi.certify_fixed_gains(tp, rs, EXAMPLE_G, gains, FaultBounds(alpha=0.9, beta=0.4), 1e-3)
    assert isinstance(outcome, Infeasible)
    assert "not Hurwitz" in outcome.reason
    assert outcome.spectral_abscissa > -2.0
    np.testing.assert_array_equal(outcome.best_gains.L, EXAMPLE_L)


def test_seed_gains_stabilize_the_observer():
    tp, rs, G, _ = damped_toy()
    gains = lmi.seed_gains(tp, rs, G, 0, np.random.SeedSequence(0))
    A_e = lmi.assembly.build_error_system(rs, gains, G, tp).A_e
    assert np.max(np.linalg.eigvals(A_e).real) < -2.0
    # K_f cancels the fault input
    np.testing.assert_allclose(tp.B_f + tp.B_u @ gains.K_f, 0.0, atol=1e-12)


def test_solver_finds_certified_gains(small_solver):
    tp, rs, G, bounds = damped_toy()
    outcome = asyncio.run(lmi.synthesize(tp, rs, G, bounds, 10.0, seed=0))
    assert isinstance(outcome, SynthesisResult)
    assert outcome.report.passed
    assert outcome.satisfies(10.0)
    assert outcome.diagnostics.accepted_restart is not None
    assert 1 <= outcome.diagnostics.restarts_used <= small_solver.restarts


def test_solver_is_deterministic_across_thread_counts(small_solver):
    tp, rs, G, bounds = damped_toy()
    one = asyncio.run(lmi.synthesize(tp, rs, G, bounds, 10.0, seed=3, threads=1))
    two = asyncio.run(lmi.synthesize(tp, rs, G, bounds, 10.0, seed=3, threads=2))
    assert one.diagnostics.accepted_restart == two.diagnostics.accepted_restart
    np.testing.assert_allclose(one.gains.L, two.gains.L, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(one.P, two.P, rtol=1e-12, atol=1e-12)


def test_solver_reports_infeasible_gamma(small_solver):
    tp, rs, G, bounds = damped_toy()
    outcome = asyncio.run(lmi.synthesize(tp, rs, G, bounds, 1e-6, seed=0))
    assert isinstance(outcome, Infeasible)
    assert outcome.min_trace_y2 > 1e-6
    assert outcome.diagnostics.restarts_used == small_solver.restarts
    assert len(outcome.residuals) == small_solver.restarts


def fake_solver(threshold: float):
    """Feasible exactly when gamma >= threshold, always achieving the threshold."""
    tp, rs, G, bounds = damped_toy()
    feasible = lmi.certify_fixed_gains(tp, rs, G, damped_toy_gains(), bounds, 10.0)
    calls = []

    async def solve(gamma: float):
        calls.append(gamma)
        if gamma >= threshold:
            return feasible.model_copy(update={"gamma_requested": gamma, "gamma_achieved": threshold})
        return Infeasible(reason="below threshold", gamma_requested=gamma, G=G, min_trace_y2=threshold)

    return solve, calls


def test_bisection_returns_at_once_when_feasible():
    solve, calls = fake_solver(0.37)
    search = asyncio.run(lmi.bisect_gamma(solve, 1.0))
    assert isinstance(search, GammaSearch)
    assert search.found
    assert calls == [1.0]
    assert search.upper == pytest.approx(0.37)


def test_bisection_brackets_the_threshold():
    solve, calls = fake_solver(0.37)
    search = asyncio.run(lmi.bisect_gamma(solve, 0.01, ceiling=100.0, iters=20))
    assert search.found
    assert calls[:2] == [0.01, 100.0]
    assert search.upper == pytest.approx(0.37)
    assert 0.01 < search.lower <= 0.37
    assert search.result.gamma_achieved == pytest.approx(0.37)
    assert all(p.feasible == (p.gamma >= 0.37) for p in search.probes)


def test_bisection_gives_up_at_the_ceiling():
    solve, _ = fake_solver(1e9)
    search = asyncio.run(lmi.bisect_gamma(solve, 0.01, ceiling=100.0))
    assert not search.found
    assert search.lower == 100.0
    assert search.last_infeasible is not None


def test_corollary_bound_certificate_improves_on_the_deficit_direction():
    tp, rs, G, bounds = damped_toy()
    gains = damped_toy_gains()
    cl = lmi.assembly.close_loop(tp, gains, G)
    F = cl.A + 2.0 * np.eye(cl.size)
    eq = 1.01 * lmi.strict_margin(cl)
    B = cl.B_bar(bounds.alpha, bounds.beta)
    P_star = solve_continuous_lyapunov(F, -(B @ B.T / (1.0 - eq) + eq * np.eye(cl.size)))
    P_star = (P_star + P_star.T) / 2.0
    assert not lmi.certification.check_corollary1(cl, P_star, bounds).passed
    _, D1, t = lmi.repair_along_deficit(cl, P_star, bounds, F)
    single = float(np.trace((P_star + t * D1)[cl.n:, cl.n:]))

    P, report = lmi.minimal_certificate(cl, bounds, 10.0)
    assert report.passed
    assert report.trace_y2 < 0.95 * single
    # a gamma the single direction cannot reach is certified
    outcome = lmi.certify_fixed_gains(tp, rs, G, gains, bounds, 0.97 * single)
    assert isinstance(outcome, SynthesisResult)
    assert outcome.report.passed


def test_seed_gains_clear_the_decay_line_on_the_example(example_plant):
    tp, rs = transformed(example_plant)
    gains = lmi.seed_gains(tp, rs, EXAMPLE_G, 0, np.random.SeedSequence(0))
    cl = lmi.assembly.close_loop(tp, gains, EXAMPLE_G)
    assert cl.is_hurwitz(2.0)
    np.testing.assert_allclose(tp.B_f + tp.B_u @ gains.K_f, 0.0, atol=1e-12)


def test_example_synthesis_is_certified(example_plant, small_solver):
    tp, rs = transformed(example_plant)
    bounds = FaultBounds(alpha=0.9, beta=0.4)
    outcome = asyncio.run(lmi.synthesize(tp, rs, EXAMPLE_G, bounds, 1e6, seed=0))
    assert isinstance(outcome, SynthesisResult)
    assert outcome.report.passed
    assert outcome.satisfies(1e6)
    assert outcome.report.margin_ok


def test_gate_checks_every_lifted_tolerance():
    Z = np.diag([2.0, 0.0])
    good = SolverDiagnostics(equality_residual=1e-9, rank_residual=1e-9, z_min_eig=0.0)
    assert LMISkills.gate(good, Z).lifted_ok
    for update in ({"equality_residual": 1e-3}, {"rank_residual": 1e-3}, {"z_min_eig": -1e-3}):
        assert not LMISkills.gate(good.model_copy(update=update), Z).lifted_ok


def test_accepted_projection_meets_lifted_tolerances(small_solver):
    tp, rs, G, bounds = damped_toy()
    outcome = asyncio.run(lmi.synthesize(tp, rs, G, bounds, 10.0, seed=0))
    d = outcome.diagnostics
    assert d.source in ("projection", "extracted_gains", "warm_start")
    if d.source == "projection":
        assert d.lifted_ok
        assert d.equality_residual <= settings.equality_tol
        assert d.rank_residual <= settings.rank_tol


def test_loose_projection_is_not_reported_as_lifted(small_solver, monkeypatch):
    tp, rs, G, bounds = damped_toy()
    run = LMISkills.run_projections

    def loose(projector, x0, max_iters, tol):
        Z, diagnostics = run(projector, x0, max_iters, tol)
        return Z, diagnostics.model_copy(update={"equality_residual": 1e-2, "lifted_ok": False})

    monkeypatch.setattr(LMISkills, "run_projections", staticmethod(loose))
    outcome = asyncio.run(lmi.synthesize(tp, rs, G, bounds, 10.0, seed=0))
    assert isinstance(outcome, SynthesisResult)
    assert outcome.report.passed
    assert outcome.diagnostics.source in ("extracted_gains", "warm_start")
    assert not outcome.diagnostics.lifted_ok
