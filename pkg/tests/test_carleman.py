import math

import numpy as np
import pytest

from app.core.errors import DegenerateSeriesError, ParameterError, ShapeMismatchError
from app.engine.adr import (
    box_field,
    evolve_nonlinear,
    linear_matrix,
    logistic_carleman_euler,
    uniform_field,
)
from app.engine.carleman import (
    CarlemanOperator,
    absolute_error_series,
    apply_carleman,
    assemble_carleman,
    carleman_sparsity,
    convergence_study,
    euler_step_carleman,
    evolve_carleman,
    initial_carleman_state,
    log_linear_slope,
    propagate_exact,
    relative_error_series,
)
from app.models.carleman import CarlemanState
from app.models.lattice import LatticeField
from app.schemas.adr import AdrParams, InitialBox
from tests.oracles import dense_carleman, dense_linear_matrix


@pytest.mark.parametrize("n_sites,order", [(2, 3), (3, 3), (4, 2), (3, 4)])
def test_assembled_matrix_matches_kronecker_oracle(n_sites, order):
    params = AdrParams(n_sites=n_sites, b=0.45)
    op = CarlemanOperator.from_params(params, order)
    expected = dense_carleman(dense_linear_matrix(params), params.b, order)
    assert np.allclose(assemble_carleman(op).toarray(), expected, atol=1e-14)


@pytest.mark.parametrize("n_sites,order", [(3, 3), (4, 4), (5, 2)])
def test_matrix_free_apply_matches_assembled(n_sites, order, rng):
    params = AdrParams(n_sites=n_sites)
    op = CarlemanOperator.from_params(params, order)
    state = CarlemanState.from_flat(rng.normal(size=op.dimension), n_sites, order)
    applied = op.apply(state).flatten()
    assert np.allclose(applied, op.assemble() @ state.flatten(), rtol=1e-13, atol=1e-13)


def test_dimension_and_structure_for_four_sites_third_order():
    op = CarlemanOperator.from_params(AdrParams(n_sites=4), 3)
    assert op.dimension == 4 + 16 + 64
    rows, cols = carleman_sparsity(op)
    assert rows.size == op.assemble().nnz
    # 块上三角：u_k 只与 u_k、u_{k+1} 耦合
    row_block = np.searchsorted([4, 20, 84], rows, side="right")
    col_block = np.searchsorted([4, 20, 84], cols, side="right")
    assert np.all(col_block >= row_block)
    assert np.all(col_block <= row_block + 1)


def test_apply_rejects_mismatched_state():
    op = CarlemanOperator.from_params(AdrParams(n_sites=3), 2)
    state = initial_carleman_state(LatticeField(np.ones(3)), 3)
    with pytest.raises(ShapeMismatchError):
        op.apply(state)


def test_first_order_evolution_is_linear_euler(small_params, rng):
    phi0 = LatticeField(rng.normal(size=small_params.n_sites))
    op = CarlemanOperator.from_params(small_params, 1)
    trajectory = evolve_carleman(phi0, op, small_params.dt, 20)
    step = np.eye(small_params.n_sites) + small_params.dt * dense_linear_matrix(small_params)
    assert np.allclose(trajectory[20], np.linalg.matrix_power(step, 20) @ phi0.values, atol=1e-13)


def test_uniform_field_reduces_to_single_site_logistic():
    params = AdrParams(n_sites=3, b=0.6)
    phi0 = uniform_field(3, 0.8)
    op = CarlemanOperator.from_params(params, 4)
    trajectory = evolve_carleman(phi0, op, params.dt, 200)
    reference = logistic_carleman_euler(0.8, params.a, params.b, 4, params.dt, 200)
    for site in range(3):
        assert np.allclose(trajectory[:, site], reference, atol=1e-12)


def test_rank_one_structure_preserved_by_exact_propagator_without_nonlinearity(rng):
    params = AdrParams(n_sites=4, b=0.0)
    phi0 = LatticeField(rng.normal(size=4))
    op = CarlemanOperator.from_params(params, 3)
    state = propagate_exact(initial_carleman_state(phi0, 3), op, 0.3)
    u1 = state.u1
    assert np.allclose(state.blocks[1], np.kron(u1, u1), atol=1e-10)
    assert np.allclose(state.blocks[2], np.kron(np.kron(u1, u1), u1), atol=1e-10)


def test_euler_step_matches_assembled_update(rng):
    params = AdrParams(n_sites=3)
    op = CarlemanOperator.from_params(params, 3)
    state = initial_carleman_state(LatticeField(rng.uniform(size=3)), 3)
    stepped = euler_step_carleman(state, op, params.dt).flatten()
    expected = state.flatten() + params.dt * (op.assemble() @ state.flatten())
    assert np.allclose(stepped, expected, atol=1e-15)


def test_relative_error_series_small_example():
    euler = np.array([[1.0, 2.0], [2.0, 4.0]])
    carleman = np.array([[1.0, 2.2], [2.0, 5.0]])
    series = relative_error_series(euler, carleman)
    assert series.relative.tolist() == pytest.approx([0.1, 0.25])
    assert series.t_star_index == 1
    assert series.max_relative == pytest.approx(0.25)
    assert series.mean_relative == pytest.approx(0.125)
    assert absolute_error_series(euler, carleman).tolist() == pytest.approx([0.2, 1.0])


def test_relative_error_guard_excludes_empty_sites():
    euler = np.array([[0.0, 1.0], [0.0, 2.0]])
    carleman = np.array([[0.5, 1.0], [0.5, 2.2]])
    series = relative_error_series(euler, carleman)
    assert series.max_relative == pytest.approx(0.1)


def test_relative_error_all_sites_below_guard():
    with pytest.raises(DegenerateSeriesError):
        relative_error_series(np.zeros((3, 2)), np.ones((3, 2)))


def test_relative_error_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        relative_error_series(np.ones((3, 2)), np.ones((2, 2)))


def test_log_linear_slope_of_exponential_decay():
    orders = [1, 2, 3, 4]
    assert log_linear_slope(orders, [math.exp(-2.0 * k) for k in orders]) == pytest.approx(-2.0)
    assert math.isnan(log_linear_slope([1, 2], [0.1, math.nan]))


def test_convergence_study_requires_ascending_orders(default_params):
    phi0 = box_field(InitialBox(), default_params.n_sites)
    with pytest.raises(ParameterError):
        convergence_study(default_params, phi0, [3, 1], 10)


def test_convergence_study_small_case_improves_with_order():
    params = AdrParams(n_sites=6)
    phi0 = box_field(InitialBox(width=3), 6)
    study = convergence_study(params, phi0, [1, 2, 3, 4], 300, workers=1, keep_trajectories=True)
    errors = [row.max_relative for row in study.rows]
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert study.log_slope < 0.0
    assert len(study.carleman_trajectories) == 4
    assert np.allclose(study.euler_trajectory, evolve_nonlinear(phi0, params, 300))


@pytest.mark.slow
def test_standard_setup_converges_below_ten_percent(default_params):
    phi0 = box_field(InitialBox(height=1.0, width=5), default_params.n_sites)
    study = convergence_study(default_params, phi0, [1, 2, 3, 4, 5], 1000)
    errors = [row.max_relative for row in study.rows]
    assert errors[-1] < 0.1
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert study.log_slope < 0.0
    assert all(row.finite for row in study.rows)


@pytest.mark.slow
def test_gaussian_velocity_converges_below_ten_percent():
    from app.engine.adr import gaussian_velocity_profile

    params = AdrParams(velocity=gaussian_velocity_profile(20))
    phi0 = box_field(InitialBox(), 20)
    study = convergence_study(params, phi0, [5], 1000)
    assert study.rows[0].max_relative < 0.1
    assert np.allclose(linear_matrix(params).toarray(), dense_linear_matrix(params), atol=1e-14)


@pytest.mark.parametrize("n_sites,order", [(2, 2), (3, 3), (4, 3)])
def test_matrix_free_apply_matches_dense_oracle_for_random_states(n_sites, order, rng):
    params = AdrParams(n_sites=n_sites)
    op = CarlemanOperator.from_params(params, order)
    dense = dense_carleman(dense_linear_matrix(params), params.b, order)
    for _ in range(100):
        u = rng.normal(size=op.dimension)
        applied = apply_carleman(op, CarlemanState.from_flat(u, n_sites, order)).flatten()
        assert np.linalg.norm(applied - dense @ u) <= 1e-13 * np.linalg.norm(u)


def test_initial_state_two_sites_second_order():
    p, q = 0.3, -1.7
    state = initial_carleman_state(LatticeField(np.array([p, q])), 2)
    assert state.blocks[0].tolist() == [p, q]
    assert state.blocks[1].tolist() == pytest.approx([p * p, p * q, q * p, q * q])


def test_without_nonlinearity_each_block_sees_only_itself(rng):
    params = AdrParams(n_sites=3, b=0.0)
    op = CarlemanOperator.from_params(params, 3)
    base = CarlemanState.from_flat(rng.normal(size=op.dimension), 3, 3)
    for k in range(3):
        # 只保留 u_k，其余块换成新的随机值
        other = CarlemanState.from_flat(rng.normal(size=op.dimension), 3, 3)
        other.blocks[k] = base.blocks[k].copy()
        assert np.allclose(
            apply_carleman(op, other).blocks[k], apply_carleman(op, base).blocks[k], rtol=0.0, atol=1e-14
        )


def test_linear_problem_is_reproduced_to_roundoff():
    params = AdrParams(n_sites=6, b=0.0)
    phi0 = box_field(InitialBox(width=3), 6)
    study = convergence_study(params, phi0, [1, 2, 3], 200, workers=1)
    assert all(row.max_relative < 1e-12 for row in study.rows)


def test_weak_nonlinearity_converges_faster():
    phi0 = box_field(InitialBox(height=1.0, width=3), 6)
    errors = {}
    for b in (0.1, 0.9):
        params = AdrParams(n_sites=6, b=b)
        errors[b] = convergence_study(params, phi0, [5], 300, workers=1).rows[0].max_relative
    assert errors[0.1] < errors[0.9]


def test_raising_order_changes_trajectory_less_than_series_tail():
    params = AdrParams(n_sites=4)
    phi0 = box_field(InitialBox(height=1.0, width=2), 4)
    ratio = params.b * float(np.max(phi0.values)) / params.a
    fifth = evolve_carleman(phi0, CarlemanOperator.from_params(params, 5), params.dt, 300)
    sixth = evolve_carleman(phi0, CarlemanOperator.from_params(params, 6), params.dt, 300)
    assert np.max(np.abs(sixth - fifth)) < ratio ** 5 / (1.0 - ratio)
