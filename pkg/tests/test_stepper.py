import numpy as np
import pytest

from core.errors import ContractViolation, NoConvergence, StiffnessError
from experiments import make_initial_state, make_rng
from lattice import GridSpec, ModelParams, apply_propagator, mass, norm_dx, random_state
from stepper import (
    SolverParams,
    effective_tolerance,
    evolve,
    implicit_residual,
    midpoint_step,
    midpoint_step_direct,
    psi_leading_term,
    psi_map,
    reference_flow,
    rk2_stepper,
)


def test_solver_params_validation():
    with pytest.raises(ContractViolation):
        SolverParams(h=0.0)
    with pytest.raises(ContractViolation):
        SolverParams(h=0.01, fp_tol=0.0)
    with pytest.raises(ContractViolation):
        SolverParams(h=0.01, max_iters=0)
    # 负步长表示向后推进
    assert SolverParams(h=-0.01).h == -0.01
    assert SolverParams(h=0.01).with_step(0.02).h == 0.02


def test_effective_tolerance_has_rounding_floor(small_grid, rng):
    solver = SolverParams(h=0.01, fp_tol=1e-30)
    u = random_state(small_grid, rng, radius=2.0)
    assert effective_tolerance(small_grid, solver, u) == pytest.approx(64 * np.finfo(float).eps * 2.0)


def test_linear_step_is_exact_propagator(small_grid, linear, rng):
    u = random_state(small_grid, rng)
    solver = SolverParams(h=0.05)
    u_next, diagnostics = midpoint_step(small_grid, linear, solver, u)
    assert diagnostics.converged and diagnostics.iterations == 1
    np.testing.assert_allclose(u_next, apply_propagator(small_grid, 0.05, u), atol=1e-14)


@pytest.mark.parametrize("lam", [1, -1])
def test_split_form_solves_implicit_equation(small_grid, rng, lam):
    params = ModelParams(lam, 1)
    solver = SolverParams(h=0.01)
    u = random_state(small_grid, rng, radius=0.5)
    split, _ = midpoint_step(small_grid, params, solver, u)
    direct, _ = midpoint_step_direct(small_grid, params, solver, u)
    assert implicit_residual(small_grid, params, solver.h, u, split) <= 1e-10
    assert float(norm_dx(small_grid, split - direct)) <= 2 * solver.fp_tol


def test_anderson_acceleration_agrees_with_picard(small_grid, cubic, rng):
    u = random_state(small_grid, rng, radius=1.0)
    plain, _ = midpoint_step(small_grid, cubic, SolverParams(h=0.02), u)
    fast, diagnostics = midpoint_step(small_grid, cubic, SolverParams(h=0.02, accelerate=True), u)
    assert diagnostics.converged
    assert float(norm_dx(small_grid, plain - fast)) <= 1e-12


def test_iteration_budget_exhaustion_raises(small_grid, cubic, rng):
    u = random_state(small_grid, rng)
    with pytest.raises(NoConvergence) as excinfo:
        midpoint_step(small_grid, cubic, SolverParams(h=0.01, max_iters=1), u)
    assert excinfo.value.iterations == 1
    assert excinfo.value.residual > excinfo.value.tolerance


def test_step_is_time_symmetric(small_grid, cubic, rng):
    u = random_state(small_grid, rng, radius=0.5)
    forward, _ = midpoint_step(small_grid, cubic, SolverParams(h=0.01), u)
    back, _ = midpoint_step(small_grid, cubic, SolverParams(h=-0.01), forward)
    assert float(norm_dx(small_grid, back - u)) <= 1e-11


def test_psi_map_with_zero_eps_is_identity(small_grid, cubic, rng):
    u = random_state(small_grid, rng)
    psi, _ = psi_map(small_grid, cubic, 0.01, 0.0, u)
    np.testing.assert_array_equal(psi, u)


def test_psi_first_order_term(small_grid, cubic, rng):
    u = random_state(small_grid, rng)
    eps = 1e-5
    psi, _ = psi_map(small_grid, cubic, 0.01, eps, u)
    leading = psi_leading_term(small_grid, cubic, 0.01, u)
    assert float(norm_dx(small_grid, (psi - u) / eps - leading)) <= 1e-4 * float(norm_dx(small_grid, leading))


def _mass_drift(lam: int, n_steps: int) -> float:
    grid = GridSpec(32, 0.25)
    params = ModelParams(lam, 1)
    u0 = make_initial_state("bump", grid, make_rng(0), 0.5)
    start = float(mass(grid, u0))
    drift = 0.0

    def track(_index, u, _diagnostics):
        nonlocal drift
        drift = max(drift, abs(float(mass(grid, u)) - start))

    evolve(grid, params, SolverParams(h=0.01), u0, n_steps, track)
    return drift


@pytest.mark.parametrize("lam", [1, -1])
def test_mass_is_conserved(lam):
    assert _mass_drift(lam, 1000) <= 1e-8, "中点法应当保持离散质量"


@pytest.mark.slow
@pytest.mark.parametrize("lam", [1, -1])
def test_mass_is_conserved_over_ten_thousand_steps(lam):
    assert _mass_drift(lam, 10_000) <= 1e-8


def test_explicit_scheme_does_not_conserve_mass(cubic, rng):
    grid = GridSpec(8, 0.25)
    u0 = random_state(grid, rng, radius=0.5)
    final = evolve(grid, cubic, SolverParams(h=0.01), u0, 100, step=rk2_stepper)
    assert float(mass(grid, final)) - float(mass(grid, u0)) > 1e-6


def test_reference_flow_of_rotation():
    u = np.array([1.0 + 0.5j, -0.25j, 2.0])
    result = reference_flow(lambda y: 1j * y, u, 1.5, 1e-12)
    np.testing.assert_allclose(result, np.exp(1.5j) * u, rtol=1e-9)
    np.testing.assert_array_equal(reference_flow(lambda y: 1j * y, u, 0.0, 1e-12), u)


def test_reference_flow_blow_up_raises():
    with pytest.raises(StiffnessError):
        reference_flow(lambda y: y * y, np.array([1.0 + 0.0j]), 2.0, 1e-10)


def test_evolve_reports_every_step(small_grid, cubic, rng):
    seen = []
    evolve(small_grid, cubic, SolverParams(h=0.01), random_state(small_grid, rng), 5, lambda i, _u, _d: seen.append(i))
    assert seen == [1, 2, 3, 4, 5]
