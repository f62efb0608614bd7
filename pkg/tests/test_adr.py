import math

import numpy as np
import pytest
import scipy.sparse as sp
from pydantic import ValidationError
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from app.core.errors import FiniteTimeBlowupError, ParameterError, ShapeMismatchError
from app.engine.adr import (
    box_field,
    build_linear_matrix,
    build_linear_matrix_profile,
    euler_step_nonlinear,
    evolve_nonlinear,
    gaussian_velocity_profile,
    linear_matrix,
    localized_field,
    logistic_carleman_euler,
    logistic_carleman_matrix,
    logistic_carleman_truncated,
    logistic_exact,
    logistic_reference_errors,
    uniform_field,
)
from app.models.lattice import LatticeField
from app.schemas.adr import AdrParams, ConstantVelocity, InitialBox, ProfileVelocity
from tests.oracles import dense_linear_matrix


def test_linear_matrix_matches_elementwise_oracle(small_params):
    assert np.allclose(build_linear_matrix(small_params).toarray(), dense_linear_matrix(small_params), atol=1e-14)


def test_linear_matrix_row_sums_equal_minus_a(default_params):
    rows = np.asarray(build_linear_matrix(default_params).sum(axis=1)).ravel()
    assert np.allclose(rows, -default_params.a, atol=1e-13)


def test_linear_matrix_two_sites_merges_neighbours():
    params = AdrParams(n_sites=2)
    # j−1 与 j+1 是同一个格点，平流项相互抵消
    assert np.allclose(build_linear_matrix(params).toarray(), [[-3.0, 2.0], [2.0, -3.0]])


def test_profile_builder_with_constant_profile_matches_constant_builder(small_params):
    profile = ProfileVelocity(values=[0.9] * small_params.n_sites)
    params = small_params.model_copy(update={"velocity": profile})
    assert np.allclose(
        build_linear_matrix_profile(params).toarray(), build_linear_matrix(small_params).toarray(), atol=1e-14
    )


def test_profile_builder_matches_oracle(rng):
    values = rng.uniform(-1.0, 1.0, size=7).tolist()
    params = AdrParams(n_sites=7, velocity=ProfileVelocity(values=values), dx=0.5)
    assert np.allclose(linear_matrix(params).toarray(), dense_linear_matrix(params), atol=1e-13)


def test_builders_reject_wrong_velocity_kind(small_params):
    with pytest.raises(ParameterError):
        build_linear_matrix_profile(small_params)
    params = AdrParams(n_sites=3, velocity=ProfileVelocity(values=[1.0, 2.0, 3.0]))
    with pytest.raises(ParameterError):
        build_linear_matrix(params)


def test_profile_length_must_match_sites():
    with pytest.raises(ValidationError):
        AdrParams(n_sites=4, velocity=ProfileVelocity(values=[1.0, 2.0]))


def test_derived_numbers_standard_setup(default_params):
    derived = default_params.derived()
    assert derived.gamma_d == pytest.approx(0.01)
    assert derived.gamma_a == pytest.approx(0.01)
    assert derived.gamma_r == pytest.approx(0.01)
    assert derived.peclet_cell == pytest.approx(1.0)
    assert derived.lambda0 == pytest.approx(0.97)
    assert derived.lambda1 == pytest.approx(0.005)
    assert derived.lambda2 == pytest.approx(0.015)
    assert derived.is_euler_stable


def test_zero_diffusion_gives_infinite_peclet():
    derived = AdrParams(diffusion=0.0).derived()
    assert math.isinf(derived.peclet_cell)


def test_euler_step_without_quadratic_term_is_linear(small_params, rng):
    params = small_params.model_copy(update={"b": 0.0})
    phi = LatticeField(rng.normal(size=params.n_sites))
    expected = (np.eye(params.n_sites) + params.dt * dense_linear_matrix(params)) @ phi.values
    assert np.allclose(euler_step_nonlinear(phi, params).values, expected, atol=1e-14)


def test_euler_step_rejects_wrong_length(small_params):
    with pytest.raises(ShapeMismatchError):
        euler_step_nonlinear(LatticeField(np.ones(small_params.n_sites + 1)), small_params)


def test_evolve_nonlinear_marks_overflow_with_nan():
    params = AdrParams(n_sites=4, b=50.0, dt=0.5)
    trajectory = evolve_nonlinear(uniform_field(4, 10.0), params, 50)
    assert np.all(np.isfinite(trajectory[0]))
    assert np.all(np.isnan(trajectory[-1]))


def test_box_field_default_center():
    field = box_field(InitialBox(height=1.0, width=5), 20)
    assert np.flatnonzero(field.values).tolist() == [8, 9, 10, 11, 12]
    assert field.values.sum() == pytest.approx(5.0)


def test_box_wraps_periodically():
    field = box_field(InitialBox(height=2.0, width=3, center=0), 6)
    assert np.flatnonzero(field.values).tolist() == [0, 1, 5]


def test_box_wider_than_lattice_is_rejected():
    with pytest.raises(ParameterError):
        box_field(InitialBox(width=7), 6)


def test_localized_and_uniform_fields():
    assert localized_field(5, 7).values.tolist() == [0.0, 0.0, 1.0, 0.0, 0.0]
    assert uniform_field(3, 0.5).values.tolist() == [0.5, 0.5, 0.5]


def test_gaussian_profile_peak_and_length():
    profile = gaussian_velocity_profile(20, amplitude=2.0)
    assert len(profile.values) == 20
    assert max(profile.values) == pytest.approx(2.0)
    assert int(np.argmax(profile.values)) == 10


def test_logistic_exact_initial_value_and_decay():
    assert logistic_exact(0.8, 1.0, 0.6, 0.0) == pytest.approx(0.8)
    # b = 0 退化为指数衰减
    assert logistic_exact(1.0, 2.0, 0.0, 1.5) == pytest.approx(math.exp(-3.0))


def test_logistic_exact_detects_blowup():
    with pytest.raises(FiniteTimeBlowupError):
        logistic_exact(2.0, 1.0, 1.0, np.linspace(0.0, 2.0, 5))


def test_truncated_series_converges_to_exact():
    phi0, a, b = 1.0, 1.0, 0.6
    ratio = b * phi0 / a
    times = np.linspace(0.0, 10.0, 101)
    exact = logistic_exact(phi0, a, b, times)
    for order in (5, 10, 20):
        series = logistic_carleman_truncated(phi0, a, b, times, order)
        relative = np.abs(exact - series) / np.abs(exact)
        assert np.max(relative) <= ratio ** (order + 1) / (1.0 - ratio) + 1e-15


def test_single_site_carleman_equals_truncated_series_exactly():
    phi0, a, b, order = 0.7, 1.0, 0.6, 5
    system = logistic_carleman_matrix(a, b, order)
    u0 = phi0 ** np.arange(1, order + 1)
    for t in (0.1, 1.0, 5.0):
        u1 = (expm(t * system) @ u0)[0]
        # 含 u_1..u_K 的系统对应 K−1 阶几何级数
        assert u1 == pytest.approx(logistic_carleman_truncated(phi0, a, b, t, order - 1), abs=1e-12)


def test_single_site_carleman_euler_matches_series_at_small_step():
    phi0, a, b, order, dt, n_steps = 0.5, 1.0, 0.6, 5, 1e-5, 10000
    trajectory = logistic_carleman_euler(phi0, a, b, order, dt, n_steps)
    times = dt * np.arange(n_steps + 1)
    series = logistic_carleman_truncated(phi0, a, b, times, order - 1)
    assert np.max(np.abs(trajectory - series)) < 1e-6


def test_logistic_reference_errors_bounded_by_geometric_tail():
    reference = logistic_reference_errors(1.0, 1.0, 0.6, 5, 0.01, 1000)
    assert reference.times.shape == (1001,)
    assert reference.exact_relative[0] == 0.0
    assert reference.max_exact <= 0.6 ** 5 + 1e-12
    assert reference.max_euler < 0.1


def test_params_are_frozen(default_params):
    with pytest.raises(ValidationError):
        default_params.n_sites = 5


def test_constant_velocity_default_is_unit():
    assert AdrParams().velocity == ConstantVelocity(value=1.0)


@pytest.mark.parametrize("offset", [1, 3, -2, 7])
def test_euler_step_commutes_with_cyclic_shift(small_params, rng, offset):
    phi = LatticeField(rng.uniform(size=small_params.n_sites))
    shifted_then_stepped = euler_step_nonlinear(phi.shifted(offset), small_params)
    stepped_then_shifted = euler_step_nonlinear(phi, small_params).shifted(offset)
    assert np.allclose(shifted_then_stepped.values, stepped_then_shifted.values, rtol=0.0, atol=1e-14)


def test_euler_step_conserves_mass_without_reaction(rng):
    params = AdrParams(n_sites=8, b=0.0)
    # 去掉 −a 对角项，只保留扩散与平流
    transport = linear_matrix(params) + params.a * sp.identity(8, format="csr")
    phi = LatticeField(rng.uniform(size=8))
    assert euler_step_nonlinear(phi, params, matrix=transport).values.sum() == pytest.approx(phi.values.sum(), abs=1e-12)


def test_euler_step_overflow_raises_blowup():
    params = AdrParams(n_sites=4, b=0.6)
    with pytest.raises(FiniteTimeBlowupError):
        euler_step_nonlinear(uniform_field(4, 1e200), params)


def test_logistic_exact_matches_ode_integration():
    phi0, a, b = 1.0, 1.0, 0.6
    solution = solve_ivp(
        lambda t, y: -a * y + b * y ** 2, (0.0, 1.0), [phi0], method="DOP853", rtol=1e-12, atol=1e-14
    )
    assert logistic_exact(phi0, a, b, 1.0) == pytest.approx(solution.y[0, -1], abs=1e-8)


def test_truncated_series_error_decreases_with_order():
    phi0, a, b = 1.0, 1.0, 0.6
    ratio = b * phi0 / a
    times = np.linspace(0.0, 10.0, 201)
    exact = logistic_exact(phi0, a, b, times)
    errors = []
    for order in range(0, 8):
        series = logistic_carleman_truncated(phi0, a, b, times, order)
        errors.append(np.max(np.abs(exact - series) / np.abs(exact)))
        assert errors[-1] <= ratio ** (order + 1) / (1.0 - ratio) + 1e-15
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
