"""块编码电路对照稠密矩阵的验证"""
import logging
import os
from typing import List

import numpy as np

from app.engine.block_encoding import (
    BhatOperator,
    ToeplitzL,
    block_encoding_unitary,
    build_be_circuit_B,
    build_be_circuit_L,
    check_applicability,
    p0_analytic_B,
    p0_analytic_L,
    p0_bound_B,
    simulate_be,
    top_left_block,
)
from app.experiments.output import build_metadata, write_csv
from app.models.results import ExperimentResult
from app.schemas.experiment import ExperimentConfig
from app.schemas.report import ExplicitState, UniformState
from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-12
COLUMNS = ["case", "N", "draw", "state", "gamma_d", "gamma_a", "gamma_r", "coupling",
           "max_component_err", "p0_sim", "p0_analytic"]


def random_state(rng: np.random.Generator, size: int) -> np.ndarray:
    psi = rng.normal(size=size) + 1j * rng.normal(size=size)
    return psi / np.linalg.norm(psi)


def random_gammas(rng: np.random.Generator):
    """满足四个严格条件的随机 (γ_d, γ_a, γ_r)"""
    while True:
        gamma_d = rng.uniform(0.0, 0.45)
        gamma_a = rng.uniform(0.0, 1.98 * (1.0 - gamma_d))
        gamma_r = rng.uniform(1e-3, 0.5)
        toeplitz = ToeplitzL.from_gammas(2, gamma_d, gamma_a, gamma_r)
        if check_applicability(toeplitz.numbers).all_pass:
            return gamma_d, gamma_a, gamma_r


def _l_rows(n_sites: int, draw: int, seed: np.random.SeedSequence, n_states: int) -> List[list]:
    rng = np.random.default_rng(seed)
    gammas = random_gammas(rng)
    toeplitz = ToeplitzL.from_gammas(n_sites, *gammas)
    encoding = build_be_circuit_L(toeplitz)
    rows = []
    for state in range(n_states):
        psi = random_state(rng, n_sites)
        residual, probability = simulate_be(encoding, psi)
        error = float(np.max(np.abs(residual * encoding.subnormalization - encoding.target @ psi)))
        analytic = p0_analytic_L(toeplitz, ExplicitState.from_vector(psi))
        rows.append(["L", n_sites, draw, state, *gammas, None, error, probability, analytic])
    return rows


def _b_rows(n_sites: int, coupling: float, dt: float, seed: np.random.SeedSequence, n_states: int) -> List[list]:
    rng = np.random.default_rng(seed)
    bhat = BhatOperator(n_sites, coupling / dt, dt)
    encoding = build_be_circuit_B(bhat)
    target = bhat.matrix()
    rows = []
    states = [random_state(rng, bhat.logical_dimension) for _ in range(n_states)]
    # u₂ 的对角分量取到计算基态上的最大概率
    basis = np.zeros(bhat.logical_dimension)
    basis[bhat.partner(0)] = 1.0
    for state, psi in enumerate(states + [basis]):
        residual, probability = simulate_be(encoding, psi)
        padded = np.zeros(bhat.dimension, dtype=complex)
        padded[: psi.size] = psi
        expected = (target @ padded)[: psi.size]
        error = float(np.max(np.abs(residual * encoding.subnormalization - expected)))
        case = "B" if state < n_states else "B_bound"
        analytic = p0_analytic_B(bhat, psi) if state < n_states else p0_bound_B(bhat)
        rows.append([case, n_sites, 0, state, None, None, None, coupling, error, probability, analytic])
    return rows


def _special_rows(rng: np.random.Generator) -> List[list]:
    rows = []
    # Δt = 0：L 退化为单位阵，p₀ = 1/16
    for n_sites in (2, 4, 8):
        identity = build_be_circuit_L(ToeplitzL.from_gammas(n_sites, 0.0, 0.0, 0.0))
        psi = random_state(rng, n_sites)
        residual, probability = simulate_be(identity, psi)
        error = float(np.max(np.abs(residual * 4.0 - psi)))
        rows.append(["L_identity", n_sites, 0, 0, 0.0, 0.0, 0.0, None, error, probability, 1.0 / 16.0])

    gammas = (0.1, 0.1, 0.01)
    for n_sites in (4, 8):
        toeplitz = ToeplitzL.from_gammas(n_sites, *gammas)
        psi = np.full(n_sites, 1.0 / np.sqrt(n_sites))
        residual, probability = simulate_be(build_be_circuit_L(toeplitz), psi)
        error = float(np.max(np.abs(residual * 4.0 - toeplitz.matrix() @ psi)))
        rows.append(["L_uniform", n_sites, 0, 0, *gammas, None, error, probability,
                     p0_analytic_L(toeplitz, UniformState())])

    # 稠密酉矩阵：幺正性与左上块
    for n_sites in (4, 16):
        encoding = build_be_circuit_L(ToeplitzL.from_gammas(n_sites, *gammas))
        rows.append(["L_unitary", n_sites, 0, 0, *gammas, None, _unitary_error(encoding), None, None])
    for n_sites in (2, 4):
        encoding = build_be_circuit_B(BhatOperator(n_sites, 0.6, 0.01))
        rows.append(["B_unitary", n_sites, 0, 0, None, None, None, 0.006, _unitary_error(encoding), None, None])
    return rows


def _unitary_error(encoding) -> float:
    unitary = block_encoding_unitary(encoding)
    identity = np.eye(unitary.shape[0])
    unitarity = np.max(np.abs(unitary.conj().T @ unitary - identity))
    block = top_left_block(encoding, unitary)
    embedding = np.max(np.abs(block * encoding.subnormalization - encoding.target))
    return float(max(unitarity, embedding))


def run_be_verify(config: ExperimentConfig, out_dir: str) -> ExperimentResult:
    section = config.be
    result = ExperimentResult(name="beverify", out_dir=out_dir)
    root = np.random.SeedSequence(config.run.seed)
    l_seeds, b_seeds, special_seed = root.spawn(3)

    l_jobs = [(n, draw) for n in section.l_sites for draw in range(section.l_draws)]
    l_children = l_seeds.spawn(len(l_jobs))
    logger.info("验证 L 块编码：%d 组参数 × %d 个态", len(l_jobs), section.l_states)
    l_rows = ordered_map(
        lambda job: _l_rows(job[0][0], job[0][1], job[1], section.l_states),
        list(zip(l_jobs, l_children)),
        config.run.threads,
    )

    b_jobs = [(n, c) for n in section.b_sites for c in section.b_couplings]
    b_children = b_seeds.spawn(len(b_jobs))
    logger.info("验证 B̂ 块编码：%d 组 (N, b·Δt)", len(b_jobs))
    b_rows = ordered_map(
        lambda job: _b_rows(job[0][0], job[0][1], config.adr.dt, job[1], section.b_states),
        list(zip(b_jobs, b_children)),
        config.run.threads,
    )

    rows = [row for chunk in l_rows + b_rows for row in chunk]
    rows.extend(_special_rows(np.random.default_rng(special_seed)))

    for row in rows:
        case, n_sites, error, p0_sim, p0_analytic = row[0], row[1], row[8], row[9], row[10]
        if error > section.tolerance:
            result.fail(f"{case} N={n_sites}：分量误差 {error:.3g} 超过 {section.tolerance:g}")
        if p0_sim is not None and abs(p0_sim - p0_analytic) > PROBABILITY_TOLERANCE:
            result.fail(f"{case} N={n_sites}：p₀ 模拟 {p0_sim:.17g} 与解析 {p0_analytic:.17g} 不一致")

    extra = {"result.rows": len(rows), "result.failures": len(result.failures)}
    result.files.append(write_csv(
        os.path.join(out_dir, "be_verify.csv"), COLUMNS, rows, build_metadata("beverify", config.metadata(), extra),
    ))
    return result
