import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from app.core.errors import ApplicabilityError, ParameterError
from app.engine.block_encoding import (
    BhatOperator,
    ToeplitzL,
    block_encoding_unitary,
    build_be_circuit_B,
    build_be_circuit_L,
    check_applicability,
    combined_step_probability,
    p0_analytic_B,
    p0_analytic_L,
    p0_bound_B,
    p0_ceiling_B,
    simulate_be,
    top_left_block,
)
from app.experiments.be_verify import random_gammas
from app.schemas.adr import AdrParams, DerivedNumbers
from app.schemas.report import ConditionStatus, ExplicitState, LocalizedState, UniformState
from tests.oracles import dense_toeplitz, random_unit_vector

STANDARD = (0.1, 0.1, 0.01)


def test_toeplitz_matrix_matches_oracle():
    toeplitz = ToeplitzL.from_gammas(8, 0.2, 0.3, 0.05)
    assert np.allclose(toeplitz.matrix().toarray(), dense_toeplitz(8, *toeplitz.lambdas))


def test_toeplitz_from_params_is_one_plus_dt_a():
    params = AdrParams(n_sites=8, dt=0.05)
    from app.engine.adr import linear_matrix

    expected = np.eye(8) + params.dt * linear_matrix(params).toarray()
    assert np.allclose(ToeplitzL.from_params(params).matrix().toarray(), expected, atol=1e-14)


def test_oracle_spec_reproduces_l():
    toeplitz = ToeplitzL.from_gammas(4, *STANDARD)
    spec = toeplitz.oracle_spec()
    assert spec.sparsity == 3 and spec.column_qubits == 2
    assert spec.columns[1].tolist() == [1, 2, 3, 0]
    assert spec.columns[2].tolist() == [3, 0, 1, 2]
    assert np.allclose(spec.matrix().toarray(), toeplitz.matrix().toarray())
    assert spec.angles[3, 0] == pytest.approx(math.pi)


def test_oracle_spec_reproduces_bhat():
    bhat = BhatOperator(4, 0.6, 0.01)
    spec = bhat.oracle_spec()
    assert np.allclose(spec.matrix().toarray(), bhat.matrix().toarray())
    mapping = bhat.column_map()
    assert all(mapping[mapping[j]] == j for j in range(bhat.dimension))


def test_l_encoding_on_localized_state():
    toeplitz = ToeplitzL.from_gammas(4, *STANDARD)
    psi = np.zeros(4)
    psi[0] = 1.0
    residual, probability = simulate_be(build_be_circuit_L(toeplitz), psi)
    assert np.allclose(residual * 4, toeplitz.matrix() @ psi, atol=1e-12)
    assert probability == pytest.approx(p0_analytic_L(toeplitz, LocalizedState(site=0)), abs=1e-12)


def test_l_encoding_with_negative_lambda1(rng):
    toeplitz = ToeplitzL.from_gammas(8, 0.05, 0.6, 0.01)
    assert toeplitz.lambdas[1] < 0
    psi = random_unit_vector(rng, 8)
    residual, _ = simulate_be(build_be_circuit_L(toeplitz), psi)
    assert np.allclose(residual * 4, toeplitz.matrix() @ psi, atol=1e-12)


def test_zero_time_step_is_identity_with_one_sixteenth(rng):
    toeplitz = ToeplitzL.from_gammas(4, 0.0, 0.0, 0.0)
    psi = random_unit_vector(rng, 4)
    residual, probability = simulate_be(build_be_circuit_L(toeplitz), psi)
    assert np.allclose(residual, psi / 4, atol=1e-14)
    assert probability == pytest.approx(1 / 16, abs=1e-14)


@pytest.mark.parametrize("n_sites", [2, 4, 8])
def test_l_encoding_random_parameters_and_states(n_sites):
    rng = np.random.default_rng(n_sites)
    for _ in range(50):
        toeplitz = ToeplitzL.from_gammas(n_sites, *random_gammas(rng))
        encoding = build_be_circuit_L(toeplitz)
        target = toeplitz.matrix().toarray()
        for _ in range(20):
            psi = random_unit_vector(rng, n_sites)
            residual, probability = simulate_be(encoding, psi)
            assert np.max(np.abs(residual * 4 - target @ psi)) <= 1e-11
            expected = p0_analytic_L(toeplitz, ExplicitState.from_vector(psi))
            assert probability == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("n_sites", [2, 4, 8])
def test_uniform_probability_closed_form(n_sites):
    toeplitz = ToeplitzL.from_gammas(n_sites, *STANDARD)
    psi = np.full(n_sites, 1 / np.sqrt(n_sites))
    _, probability = simulate_be(build_be_circuit_L(toeplitz), psi)
    assert probability == pytest.approx((1 - 0.01) ** 2 / 16, abs=1e-12)
    assert p0_analytic_L(toeplitz, UniformState()) == pytest.approx(probability, abs=1e-12)


def test_uniform_probability_independent_of_transport():
    values = {
        p0_analytic_L(ToeplitzL.from_gammas(100, gamma_d, gamma_a, 0.01), UniformState())
        for gamma_d, gamma_a in [(0.01, 0.9), (0.1, 0.1), (0.3, 0.2)]
    }
    assert max(values) - min(values) < 1e-15


def test_localized_probability_closed_form():
    toeplitz = ToeplitzL.from_gammas(100, 0.01, 0.9, 0.01)
    expected = (0.97 ** 2 + 0.44 ** 2 + 0.46 ** 2) / 16
    assert p0_analytic_L(toeplitz, LocalizedState(site=17)) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.08413125)


def test_eigenvector_probability(rng):
    n_sites = 8
    toeplitz = ToeplitzL.from_gammas(n_sites, 0.2, 0.1, 0.05)
    k = 3
    psi = np.exp(2j * np.pi * k * np.arange(n_sites) / n_sites) / np.sqrt(n_sites)
    l0, l1, l2 = toeplitz.lambdas
    mu = l0 + l1 * np.exp(2j * np.pi * k / n_sites) + l2 * np.exp(-2j * np.pi * k / n_sites)
    _, probability = simulate_be(build_be_circuit_L(toeplitz), psi)
    assert probability == pytest.approx(abs(mu) ** 2 / 16, abs=1e-12)


def test_probability_tends_to_one_sixteenth(rng):
    psi = random_unit_vector(rng, 8)
    for dt in (1e-2, 1e-3, 1e-4):
        params = AdrParams(n_sites=8, dt=dt)
        p0 = p0_analytic_L(params, ExplicitState.from_vector(psi))
        assert abs(p0 - 1 / 16) < 10 * dt


@pytest.mark.parametrize("n_sites", [4, 16])
def test_l_circuit_unitary_and_top_left_block(n_sites):
    encoding = build_be_circuit_L(ToeplitzL.from_gammas(n_sites, *STANDARD))
    unitary = block_encoding_unitary(encoding)
    assert encoding.layout.total_qubits == 3 + int(math.log2(n_sites))
    assert np.allclose(unitary.conj().T @ unitary, np.eye(unitary.shape[0]), atol=1e-11)
    assert np.allclose(top_left_block(encoding, unitary) * 4, encoding.target, atol=1e-11)


def test_l_circuit_requires_power_of_two():
    with pytest.raises(ApplicabilityError):
        build_be_circuit_L(ToeplitzL.from_gammas(6, *STANDARD))


def test_l_circuit_rejects_violated_conditions():
    with pytest.raises(ApplicabilityError):
        build_be_circuit_L(ToeplitzL.from_gammas(4, 1.2, 0.1, 0.01))


def test_applicability_report():
    report = check_applicability(DerivedNumbers.from_gammas(0.1, 0.1, 0.01))
    assert report.all_pass
    failing = check_applicability(DerivedNumbers.from_gammas(1.2, 0.1, 0.01))
    assert failing.any_fail
    assert failing.conditions[0].status == ConditionStatus.FAIL
    boundary = check_applicability(DerivedNumbers.from_gammas(0.1, 0.1, 0.0))
    reaction = [c for c in boundary.conditions if c.name == "reaction"][0]
    assert reaction.status == ConditionStatus.BOUNDARY
    assert reaction.margin == 0.0
    assert not boundary.all_pass and not boundary.any_fail


def test_applicability_from_params():
    report = check_applicability(AdrParams())
    assert report.all_pass
    assert report.conditions[0].value == pytest.approx(0.97)


def test_bhat_matrix_structure():
    bhat = BhatOperator(2, 0.6, 0.01)
    assert bhat.logical_dimension == 6 and bhat.n_qubits == 3
    dense = bhat.matrix().toarray()
    expected = np.eye(8)
    expected[0, 2] = expected[1, 5] = 0.006
    assert np.allclose(dense, expected)
    assert np.allclose(np.tril(dense, -1), 0.0)


def test_bhat_rejects_large_coupling():
    with pytest.raises(ApplicabilityError):
        BhatOperator(4, 200.0, 0.01)


def test_bhat_zero_coupling_is_identity_over_two(rng):
    bhat = BhatOperator(4, 0.0, 0.01)
    psi = random_unit_vector(rng, bhat.logical_dimension)
    residual, probability = simulate_be(build_be_circuit_B(bhat), psi)
    assert np.allclose(residual * 2, psi, atol=1e-12)
    assert probability == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("n_sites", [2, 4])
@pytest.mark.parametrize("coupling", [0.006, 0.5])
def test_bhat_encoding_matches_dense_oracle(n_sites, coupling, rng):
    bhat = BhatOperator(n_sites, coupling / 0.01, 0.01)
    encoding = build_be_circuit_B(bhat)
    dense = bhat.matrix().toarray()
    for _ in range(20):
        psi = random_unit_vector(rng, bhat.logical_dimension)
        padded = np.zeros(bhat.dimension, dtype=complex)
        padded[: psi.size] = psi
        residual, probability = simulate_be(encoding, psi)
        assert np.max(np.abs(residual * 2 - (dense @ padded)[: psi.size])) <= 1e-11
        assert probability == pytest.approx(p0_analytic_B(bhat, psi), abs=1e-12)


def test_bhat_quadratic_component_feeds_first_block():
    bhat = BhatOperator(4, 0.6, 0.01)
    psi = np.zeros(bhat.logical_dimension)
    psi[bhat.partner(2)] = 1.0
    residual, probability = simulate_be(build_be_circuit_B(bhat), psi)
    assert residual[2] * 2 == pytest.approx(0.006, abs=1e-12)
    assert residual[bhat.partner(2)] * 2 == pytest.approx(1.0, abs=1e-12)
    assert probability == pytest.approx(p0_bound_B(bhat), abs=1e-12)
    assert p0_bound_B(bhat) == pytest.approx(0.250009, abs=1e-12)


@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_bhat_probability_never_exceeds_ceiling(seed):
    rng = np.random.default_rng(seed)
    bhat = BhatOperator(2, 0.6, 0.5)
    psi = random_unit_vector(rng, bhat.logical_dimension)
    assert p0_analytic_B(bhat, psi) <= p0_ceiling_B(bhat) + 1e-15


def test_bhat_ceiling_equals_largest_singular_value():
    bhat = BhatOperator(4, 0.6, 0.5)
    sigma = np.linalg.norm(bhat.matrix().toarray(), 2)
    assert p0_ceiling_B(bhat) == pytest.approx(sigma ** 2 / 4, rel=1e-12)
    assert p0_ceiling_B(bhat) > p0_bound_B(bhat)


@pytest.mark.parametrize("n_sites", [2, 4])
def test_b_circuit_unitary_and_top_left_block(n_sites):
    encoding = build_be_circuit_B(BhatOperator(n_sites, 0.6, 0.01))
    unitary = block_encoding_unitary(encoding)
    assert np.allclose(unitary.conj().T @ unitary, np.eye(unitary.shape[0]), atol=1e-11)
    assert np.allclose(top_left_block(encoding, unitary) * 2, encoding.target, atol=1e-11)


def test_combined_step_probability():
    assert combined_step_probability(1 / 16, 0.25) == pytest.approx(1 / 64)
    with pytest.raises(ParameterError):
        combined_step_probability(1.5, 0.25)


def test_localized_site_out_of_range():
    with pytest.raises(ParameterError):
        p0_analytic_L(ToeplitzL.from_gammas(4, *STANDARD), LocalizedState(site=4))


def test_explicit_state_must_be_normalized():
    from pydantic import ValidationError

    with pytest.raises(ValidationError):
        ExplicitState(real=[1.0, 1.0])
    state = ExplicitState.from_vector(np.array([0.6, 0.8j]))
    assert np.allclose(state.vector(), [0.6, 0.8j])
