"""Carleman 矩阵与 A 矩阵的 Pauli 截断距离及 m*(ε) 标度"""
import logging
import os
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.sparse as sp

from app.core.config import settings
from app.core.errors import CapExceededError
from app.engine.carleman import CarlemanOperator, assemble_carleman, carleman_sparsity
from app.engine.adr import linear_matrix
from app.engine.pauli import decompose, distance_curve, pad_to_power_of_two, terms_for_epsilon
from app.experiments.output import build_metadata, write_csv
from app.models.pauli import PauliExpansion
from app.models.results import ExperimentResult
from app.schemas.experiment import ExperimentConfig
from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

PARSEVAL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class MatrixCase:
    family: str     # "carleman" 或 "linear"
    n_sites: int
    order: int      # 只含 A 时为 1
    matrix: sp.csr_matrix


@dataclass(frozen=True)
class ScalingRow:
    case: MatrixCase
    n_qubits: int
    nonzeros: int
    expansion: PauliExpansion
    parseval_error: float


def matrix_cases(config: ExperimentConfig) -> List[MatrixCase]:
    cases = []
    for n_sites in config.pauli.sites:
        params = config.adr.model_copy(update={"n_sites": n_sites}).to_params()
        op = CarlemanOperator(linear_matrix(params), params.b, config.pauli.order)
        cases.append(MatrixCase("carleman", n_sites, config.pauli.order, assemble_carleman(op)))
    for q in config.pauli.linear_qubits:
        params = config.adr.model_copy(update={"n_sites": 2 ** q}).to_params()
        cases.append(MatrixCase("linear", 2 ** q, 1, linear_matrix(params)))
    return cases


def _analyse(case: MatrixCase) -> ScalingRow:
    padded, q = pad_to_power_of_two(case.matrix)
    if q > settings.max_pauli_qubits:
        raise CapExceededError("max_pauli_qubits", settings.max_pauli_qubits, q)
    expansion = decompose(padded, workers=1)
    parseval = float(np.sum(np.abs(expansion.coefficients) ** 2) * 2.0 ** q)
    norm_sq = expansion.source_norm ** 2
    error = abs(parseval - norm_sq) / norm_sq if norm_sq else 0.0
    logger.info(
        "%s N=%d K=%d：q=%d，非零元 %d，Pauli 项 %d",
        case.family, case.n_sites, case.order, q, case.matrix.nnz, len(expansion),
    )
    return ScalingRow(case, q, int(case.matrix.nnz), expansion, error)


def run_pauli_scaling(config: ExperimentConfig, out_dir: str) -> ExperimentResult:
    result = ExperimentResult(name="pauli", out_dir=out_dir)
    metadata = build_metadata("pauli", config.metadata())
    rows = ordered_map(_analyse, matrix_cases(config), config.run.threads)

    distance_rows, mstar_rows = [], []
    for row in rows:
        case = row.case
        curve = distance_curve(row.expansion)
        for m, d in enumerate(curve):
            distance_rows.append([case.family, case.n_sites, case.order, row.n_qubits, m, m / row.nonzeros, d])
        for epsilon in config.pauli.epsilons:
            m_star = terms_for_epsilon(row.expansion, epsilon)
            mstar_rows.append([
                case.family, case.n_sites, case.order, row.n_qubits, row.nonzeros, len(row.expansion),
                epsilon, m_star, m_star / row.nonzeros, row.parseval_error,
            ])
        if row.parseval_error > PARSEVAL_TOLERANCE:
            result.fail(f"{case.family} N={case.n_sites} 的 Parseval 误差 {row.parseval_error:.3g}")

    result.files.append(write_csv(
        os.path.join(out_dir, "pauli_distance.csv"),
        ["family", "N", "K", "q", "m", "m_fraction", "d"],
        distance_rows,
        metadata,
    ))
    result.files.append(write_csv(
        os.path.join(out_dir, "pauli_mstar.csv"),
        ["family", "N", "K", "q", "nnz", "terms", "epsilon", "m_star", "m_star_fraction", "parseval_error"],
        mstar_rows,
        metadata,
    ))

    structure_params = config.adr.model_copy(update={"n_sites": config.pauli.structure_sites}).to_params()
    structure_op = CarlemanOperator(linear_matrix(structure_params), structure_params.b, config.pauli.structure_order)
    rows_idx, cols_idx = carleman_sparsity(structure_op)
    result.files.append(write_csv(
        os.path.join(out_dir, "carleman_structure.csv"),
        ["row", "col"],
        zip(rows_idx, cols_idx),
        {**metadata, "structure.dimension": structure_op.dimension},
    ))

    if config.run.plots:
        from app.experiments.plots import line_plot

        for family in ("carleman", "linear"):
            selected = [row for row in rows if row.case.family == family]
            if not selected:
                continue
            path = os.path.join(out_dir, f"pauli_distance_{family}.svg")
            fig_rows = {f"N={row.case.n_sites}": distance_curve(row.expansion) for row in selected}
            longest = max(len(curve) for curve in fig_rows.values())
            padded = {k: np.pad(v, (0, longest - len(v)), constant_values=np.nan) for k, v in fig_rows.items()}
            result.files.append(line_plot(path, np.arange(longest), padded, "m", "d(m)", logy=True))
    return result
