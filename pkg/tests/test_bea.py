import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm, logm

from bea import (
    CflSpec,
    CommutatorField,
    DenseLinearField,
    ExtractedRemainderField,
    FieldOperator,
    Jet,
    SpectralField,
    ZeroField,
    a0_energy,
    a0_field,
    ad_series,
    bernoulli,
    cfl_max_step,
    check_cfl,
    commutator,
    conjugate_field,
    extract_remainder_field,
    hamiltonian_from_field,
    modified_energy,
    p0_energy,
    p0_field,
    p1_energy,
    p1_field,
    remainder_field,
    sampled_operator_norm,
    time_one_generator,
    z_field,
)
from core.errors import CflViolation, ContractViolation, Unsupported
from lattice import (
    GridSpec,
    ModelParams,
    SpectralOperator,
    apply_propagator,
    energy,
    from_real,
    kinetic_energy,
    nonlinearity,
    norm_dx,
    potential_energy,
    random_state,
    to_real,
    zeros,
)
from stepper import reference_flow


def _relative(grid, actual, expected) -> float:
    return float(norm_dx(grid, actual - expected)) / float(norm_dx(grid, expected))


def _gradient_field(grid, functional, u, step=1e-6):
    """X = iδx⁻¹∇_ū P 的中心差分近似，∇_ū = (∂_p + i∂_q)/√2。"""
    x = to_real(u)
    gradient = np.empty_like(x)
    for index in range(x.size):
        offset = np.zeros_like(x)
        offset[index] = step
        gradient[index] = (functional(from_real(x + offset)) - functional(from_real(x - offset))) / (2 * step)
    half = x.size // 2
    return 1j / grid.delta_x * (gradient[:half] + 1j * gradient[half:]) / math.sqrt(2.0)


# --- Bernoulli 数 ---

def test_bernoulli_numbers():
    assert bernoulli(0) == 1
    assert bernoulli(1) == Fraction(-1, 2)
    assert bernoulli(2) == Fraction(1, 6)
    assert bernoulli(3) == 0
    assert bernoulli(4) == Fraction(-1, 30)
    with pytest.raises(ContractViolation):
        bernoulli(33)


# --- 哈密顿量与向量场 ---

def test_a0_energy_tends_to_kinetic_energy():
    grid = GridSpec(1, 1.0)
    u = np.array([0.0, 1.0, 0.0])
    assert a0_energy(grid, 1e-6, u) == pytest.approx(2.0, rel=1e-9)


def test_a0_flow_over_one_step_is_the_propagator(rng):
    grid = GridSpec(4, 0.5)
    h = 0.05
    u = random_state(grid, rng)
    flowed = reference_flow(a0_field(grid, h), u, h, 1e-12)
    assert _relative(grid, flowed, apply_propagator(grid, h, u)) <= 1e-9


def test_a0_energy_is_coercive_under_step_restriction(rng):
    grid = GridSpec(8, 0.25)
    C = 1.0
    h = C * grid.delta_x**2
    c = math.atan(2 * C) / (2 * C)
    for _ in range(20):
        u = random_state(grid, rng)
        assert a0_energy(grid, h, u) >= c * float(kinetic_energy(grid, u)) - 1e-12


def test_a0_requires_positive_step(small_grid):
    with pytest.raises(ContractViolation):
        a0_field(small_grid, 0.0)


def test_p0_at_zero_step_is_potential_energy(small_grid, cubic, rng):
    u = random_state(small_grid, rng)
    assert p0_energy(small_grid, cubic, 0.0, u) == pytest.approx(float(potential_energy(small_grid, cubic, u)), rel=1e-12)
    np.testing.assert_allclose(p0_field(small_grid, cubic, 0.0)(u), 1j * nonlinearity(cubic, u), atol=1e-14)


@pytest.mark.parametrize("which", ["p0", "p1"])
def test_fields_are_hamiltonian_gradients(small_grid, rng, which):
    params = ModelParams(-1, 1)
    h = 0.05
    u = random_state(small_grid, rng)
    if which == "p0":
        field, functional = p0_field(small_grid, params, h), lambda v: p0_energy(small_grid, params, h, v)
    else:
        field, functional = p1_field(small_grid, params, h), lambda v: p1_energy(small_grid, params, h, v)
    numeric = _gradient_field(small_grid, functional, u)
    assert _relative(small_grid, numeric, field(u)) <= 1e-6


def test_hamiltonian_from_field_recovers_energies(rng):
    grid = GridSpec(4, 0.5)
    params = ModelParams(1, 1)
    h = 0.05
    for _ in range(20):
        u = random_state(grid, rng)
        assert hamiltonian_from_field(grid, a0_field(grid, h), u) == pytest.approx(a0_energy(grid, h, u), rel=1e-10)
        assert hamiltonian_from_field(grid, p0_field(grid, params, h), u) == pytest.approx(
            p0_energy(grid, params, h, u), rel=1e-10
        )
        assert hamiltonian_from_field(grid, p1_field(grid, params, h), u) == pytest.approx(
            p1_energy(grid, params, h, u), rel=1e-10, abs=1e-15
        )


def test_hamiltonian_from_field_requires_degree(small_grid, cubic, rng):
    u = random_state(small_grid, rng)
    with pytest.raises(ContractViolation):
        hamiltonian_from_field(small_grid, a0_field(small_grid, 0.1) + p0_field(small_grid, cubic, 0.1), u)


def test_conjugated_field_is_field_of_rotated_hamiltonian(small_grid, cubic, rng):
    h = 0.05
    u = random_state(small_grid, rng)
    rotated = conjugate_field(p0_field(small_grid, cubic, h), small_grid, h)
    expected = p0_energy(small_grid, cubic, h, apply_propagator(small_grid, h, u, adjoint=True))
    assert hamiltonian_from_field(small_grid, rotated, u) == pytest.approx(expected, rel=1e-10)
    # A₀ 与 R(hA) 可交换
    np.testing.assert_allclose(
        conjugate_field(a0_field(small_grid, h), small_grid, h)(u), a0_field(small_grid, h)(u), atol=1e-12
    )
    base = p0_field(small_grid, cubic, h)
    assert conjugate_field(base, small_grid, 0) is base


def test_commutator_of_linear_fields_matches_matrices(rng):
    grid = GridSpec(1, 1.0)
    first = rng.standard_normal((3, 3))
    second = rng.standard_normal((3, 3))
    B, C = first + first.T, second + second.T
    u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    bracket = commutator(DenseLinearField(grid, B), DenseLinearField(grid, C))
    np.testing.assert_allclose(bracket(u), (C @ B - B @ C) @ u, atol=1e-12)
    assert bracket.degree == 1


def test_commutator_is_antisymmetric(small_grid, cubic, rng):
    h = 0.05
    u = random_state(small_grid, rng)
    left, right = a0_field(small_grid, h), p0_field(small_grid, cubic, h)
    forward = commutator(left, right)(u)
    np.testing.assert_allclose(forward, -commutator(right, left)(u), atol=1e-12)
    np.testing.assert_allclose(commutator(right, right)(u), np.zeros_like(u), atol=1e-12)
    assert commutator(left, right).degree == 3


def test_exact_jvp_matches_finite_differences(small_grid, cubic, rng):
    field = p1_field(small_grid, cubic, 0.05)
    u, v = random_state(small_grid, rng), random_state(small_grid, rng)
    exact = field.jvp(u, v)
    numeric = FieldOperator.jvp(field, u, v)
    assert _relative(small_grid, numeric, exact) <= 1e-6


def test_sampled_operator_norm_of_linear_field(small_grid, rng):
    field = a0_field(small_grid, 0.05)
    value = sampled_operator_norm(field, small_grid, rng, samples=16)
    assert 0 < value <= float(np.max(np.abs(field.multiplier))) + 1e-12


# --- ad 级数 ---

def test_ad_series_of_commuting_fields_is_the_field(small_grid, rng):
    h = 0.05
    u = random_state(small_grid, rng)
    generator = time_one_generator(small_grid, h).negated()
    series = ad_series(generator, a0_field(small_grid, h))
    assert _relative(small_grid, series(u), a0_field(small_grid, h)(u)) <= 1e-11
    np.testing.assert_array_equal(ad_series(generator, ZeroField(small_grid, 1))(u), zeros(small_grid))


def test_ad_series_rejects_unsupported_inputs(small_grid, cubic):
    generator = time_one_generator(small_grid, 0.05)
    dense = DenseLinearField(small_grid, np.eye(small_grid.n))
    with pytest.raises(Unsupported):
        ad_series(dense, p0_field(small_grid, cubic, 0.05))
    with pytest.raises(Unsupported):
        ad_series(generator, CommutatorField(dense, dense))
    with pytest.raises(ContractViolation):
        ad_series(generator, dense, k_max=40)


def test_ad_series_without_terms_is_leading_field(small_grid, cubic, rng):
    h = 0.05
    u = random_state(small_grid, rng)
    leading = conjugate_field(p0_field(small_grid, cubic, h), small_grid, h)
    np.testing.assert_allclose(z_field(small_grid, cubic, h, 1, 0, k_max=0)(u), leading(u), atol=1e-13)


def test_ad_series_returns_partial_sum_when_tolerance_is_out_of_reach(small_grid, cubic, rng):
    h = 0.01
    u = random_state(small_grid, rng)
    series = z_field(small_grid, cubic, h, 1, 0, tol=0.0, k_max=6)
    evaluation = series.resolve(u)
    assert not evaluation.converged
    assert evaluation.truncation == 6

    values = series.expand(u, 6).val
    expected = sum(float(bernoulli(k)) * values[k] for k in range(7))
    np.testing.assert_allclose(evaluation.value, expected, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(series(u), expected, rtol=1e-12, atol=1e-15)
    assert z_field(small_grid, cubic, h, 1, 0).resolve(u).converged


def test_ad_series_matches_matrix_logarithm(rng):
    # log(e^M e^{εP}) 对 ε 的导数等于 Σ_k (B_k/k!) ad_M^k Q，Q = e^M P e^{−M}
    grid = GridSpec(1, 1.0)
    theta = np.array([0.3, 0.7, 1.1])
    M = SpectralOperator(grid, 1j * theta).matrix()
    symmetric = rng.standard_normal((3, 3))
    P = 0.5j * (symmetric + symmetric.T)
    Q = expm(M) @ P @ expm(-M)
    eps = 1e-5
    derivative = (logm(expm(M) @ expm(eps * P)) - logm(expm(M) @ expm(-eps * P))) / (2 * eps)

    generator = SpectralField(SpectralOperator(grid, -1j * theta), "-X_M")
    series = ad_series(generator, DenseLinearField(grid, Q, "X_Q"))
    u = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    expected = derivative @ u
    assert np.linalg.norm(series(u) - expected) <= 1e-6 * np.linalg.norm(expected)


def test_ad_series_jvp_matches_finite_differences(cubic, rng):
    grid = GridSpec(4, 0.5)
    field = z_field(grid, cubic, 0.05, 1, 0)
    u, v = random_state(grid, rng), random_state(grid, rng)
    numeric = FieldOperator.jvp(field, u, v)
    assert _relative(grid, numeric, field.jvp(u, v)) <= 1e-5


def test_series_terms_decay_at_the_cfl_boundary(cubic, rng):
    grid = GridSpec(8, 0.5)
    h = cfl_max_step(grid.delta_x, CflSpec(0, cubic.r))
    field = z_field(grid, cubic, h, 1, 0)
    for _ in range(5):
        norms = field.term_norms(random_state(grid, rng))
        keys = sorted(norms)
        floor = 1e-10 * norms[0]
        for previous, k in zip(keys, keys[1:]):
            if k >= 2 and norms[k] > floor:
                assert norms[k] / norms[previous] < 0.9, f"k={k} 的项没有衰减"


# --- Z 场与修正能量 ---

def test_z_field_degrees_and_names(small_grid, cubic):
    h = 0.05
    assert z_field(small_grid, cubic, h, 0, 0).degree == 1
    assert z_field(small_grid, cubic, h, 1, 0).degree == 3
    assert z_field(small_grid, cubic, h, 1, 1).degree == 5
    assert z_field(small_grid, cubic, h, 2, 0).degree == 5
    assert z_field(small_grid, cubic, h, 1, 0).name == "Z(1,0)"
    with pytest.raises(Unsupported):
        z_field(small_grid, cubic, h, 2, 1)


def test_z_fields_vanish_for_linear_model(small_grid, linear, rng):
    u = random_state(small_grid, rng)
    for ell, j in [(1, 0), (1, 1), (2, 0)]:
        np.testing.assert_array_equal(z_field(small_grid, linear, 0.05, ell, j)(u), zeros(small_grid))


def test_first_z_field_is_homogeneous(cubic, rng):
    grid = GridSpec(4, 0.5)
    field = z_field(grid, cubic, 0.05, 1, 0)
    u = random_state(grid, rng)
    assert _relative(grid, field(2 * u), 2 ** (2 * cubic.r + 1) * field(u)) <= 1e-8


def test_cfl_step_values():
    assert cfl_max_step(1.0, CflSpec(0, 1, math.pi / 2)) == pytest.approx(0.267949, abs=1e-6)
    assert cfl_max_step(1.0, CflSpec(1, 1, math.pi / 2)) == pytest.approx(0.158384, abs=1e-6)
    assert cfl_max_step(0.1, CflSpec(0, 1, math.pi / 2)) == pytest.approx(0.00267949, abs=1e-8)
    with pytest.raises(ContractViolation):
        CflSpec(0, 1, math.pi)
    with pytest.raises(ContractViolation):
        CflSpec(-1, 1)


def test_cfl_violation_is_rejected(cubic, rng):
    grid = GridSpec(4, 0.25)
    spec = CflSpec(0, 1)
    h_max = check_cfl(0.01, grid.delta_x, spec)
    assert h_max == pytest.approx(0.0625 * math.tan(math.pi / 12))
    with pytest.raises(CflViolation) as excinfo:
        modified_energy(grid, cubic, 2 * h_max, 0, random_state(grid, rng))
    assert excinfo.value.h_max == pytest.approx(h_max)


def test_modified_energy_rejects_higher_orders(small_grid, cubic, rng):
    with pytest.raises(Unsupported):
        modified_energy(small_grid, cubic, 0.001, 2, random_state(small_grid, rng))


def test_modified_energy_tends_to_energy(cubic, rng):
    grid = GridSpec(4, 0.5)
    u = random_state(grid, rng)
    expected = float(energy(grid, cubic, u))
    for N in (0, 1):
        assert modified_energy(grid, cubic, 1e-6, N, u) == pytest.approx(expected, rel=1e-4)


def test_modified_energy_of_zero_state(small_grid, cubic):
    for N in (0, 1):
        assert modified_energy(small_grid, cubic, 0.005, N, zeros(small_grid)) == 0.0


def test_modified_energy_of_linear_model_is_a0(small_grid, linear, rng):
    u = random_state(small_grid, rng)
    h = 0.005
    assert modified_energy(small_grid, linear, h, 1, u) == pytest.approx(a0_energy(small_grid, h, u), rel=1e-12)


# --- 剩余项提取 ---

def test_extracted_remainder_matches_closed_form(cubic, rng):
    grid = GridSpec(4, 0.5)
    h = 0.05
    u = random_state(grid, rng)
    extracted = extract_remainder_field(grid, cubic, h, u)
    assert _relative(grid, extracted, p1_field(grid, cubic, h)(u)) <= 5e-3


def test_extracted_remainder_scaling(cubic, rng):
    grid = GridSpec(4, 0.5)
    h = 0.05
    u = random_state(grid, rng, radius=0.5)
    small = extract_remainder_field(grid, cubic, h, u)
    large = extract_remainder_field(grid, cubic, h, 2 * u)
    ratio = float(norm_dx(grid, large)) / float(norm_dx(grid, small))
    assert ratio == pytest.approx(2 ** (4 * cubic.r + 1), rel=0.05)


def test_extracted_remainder_vanishes_for_linear_model(small_grid, linear, rng):
    extracted = extract_remainder_field(small_grid, linear, 0.05, random_state(small_grid, rng))
    np.testing.assert_array_equal(extracted, zeros(small_grid))


def test_extracted_remainder_jet_matches_point_value(cubic, rng):
    grid = GridSpec(4, 0.5)
    h = 0.02
    u = random_state(grid, rng)
    field = ExtractedRemainderField(grid, cubic, h)
    assert field.degree == 5
    from_jet = field.evaluate_jet(Jet.constant(u)).val[0]
    assert _relative(grid, from_jet, p1_field(grid, cubic, h)(u)) <= 5e-3
    assert _relative(grid, from_jet, field(u)) <= 1e-3


def test_first_order_energy_runs_on_extracted_remainder(cubic, rng):
    grid = GridSpec(4, 0.5)
    h = 0.02
    u = random_state(grid, rng)
    closed = z_field(grid, cubic, h, 1, 1)(u)
    extracted = z_field(grid, cubic, h, 1, 1, source="extracted")(u)
    assert _relative(grid, extracted, closed) <= 5e-3

    expected = modified_energy(grid, cubic, h, 1, u)
    assert modified_energy(grid, cubic, h, 1, u, remainder="extracted") == pytest.approx(expected, rel=1e-4)


def test_remainder_source_is_validated(small_grid, cubic, linear, rng):
    with pytest.raises(ContractViolation):
        z_field(small_grid, cubic, 0.01, 1, 1, source="guess")
    u = random_state(small_grid, rng)
    np.testing.assert_array_equal(remainder_field(small_grid, linear, 0.01, "extracted")(u), zeros(small_grid))
