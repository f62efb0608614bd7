"""稀疏矩阵在张量 Pauli 基上的分解、截断距离 d(m) 与 m*(ε)"""
import logging
import math
from itertools import product
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from app.core.config import settings
from app.core.errors import CapExceededError, ParameterError, ShapeMismatchError
from app.models.pauli import PAULI_LABELS, PauliExpansion
from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

# 相对 Frobenius 范数的保留阈值
ZERO_THRESHOLD = 1e-14
DENSE_ORACLE_MAX_QUBITS = 4
RECONSTRUCT_MAX_QUBITS = 8

# i^k 与 (−i)^k 的精确取值
_POWERS_OF_I = np.array([1, 1j, -1, -1j])
_POWERS_OF_MINUS_I = np.array([1, -1j, -1, 1j])

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def qubits_for(size: int) -> int:
    """q = ⌈log₂ n⌉，至少 1"""
    return max(1, math.ceil(math.log2(size))) if size > 1 else 1


def pad_to_power_of_two(matrix: sp.spmatrix) -> Tuple[sp.csr_matrix, int]:
    """左上角放原矩阵，其余补零"""
    matrix = sp.csr_matrix(matrix)
    n_rows, n_cols = matrix.shape
    if n_rows != n_cols or n_rows < 1:
        raise ShapeMismatchError(f"需要非空方阵，实际形状 {matrix.shape}")
    q = qubits_for(n_rows)
    size = 2 ** q
    if size == n_rows:
        return matrix, q
    coo = matrix.tocoo()
    padded = sp.csr_matrix((coo.data, (coo.row, coo.col)), shape=(size, size))
    return padded, q


def _check_power_of_two(matrix: sp.spmatrix) -> int:
    size = matrix.shape[0]
    if matrix.shape[0] != matrix.shape[1] or size < 2 or size & (size - 1):
        raise ShapeMismatchError(f"矩阵尺寸必须是 2 的幂，实际形状 {matrix.shape}")
    return size.bit_length() - 1


def _label(x: int, z: int, q: int) -> str:
    chars = []
    for bit in range(q - 1, -1, -1):
        xb, zb = (x >> bit) & 1, (z >> bit) & 1
        chars.append("IXZY"[xb + 2 * zb])
    return "".join(chars)


def _walsh_hadamard(rows: np.ndarray) -> np.ndarray:
    """对每一行做未归一化的快速 Walsh–Hadamard 变换"""
    data = rows.copy()
    count, size = data.shape
    h = 1
    while h < size:
        view = data.reshape(count, size // (2 * h), 2, h)
        low = view[:, :, 0, :].copy()
        high = view[:, :, 1, :]
        view[:, :, 0, :] = low + high
        view[:, :, 1, :] = low - high
        h *= 2
    return data


def _sorted_expansion(
    labels: list, coefficients: np.ndarray, q: int, norm: float, nonzeros: int
) -> PauliExpansion:
    magnitudes = np.round(np.abs(coefficients) / max(norm, 1e-300), 12)
    order = sorted(range(len(labels)), key=lambda i: (-magnitudes[i], labels[i]))
    return PauliExpansion(
        n_qubits=q,
        labels=tuple(labels[i] for i in order),
        coefficients=np.asarray(coefficients, dtype=complex)[order],
        source_norm=norm,
        nonzeros=nonzeros,
    )


def decompose(matrix: sp.spmatrix, workers: Optional[int] = None) -> PauliExpansion:
    """α_s = Tr(Σ_s†·M)/2^q，按 x = i⊕j 分组后对 z 做 Walsh–Hadamard 变换"""
    matrix = sp.csr_matrix(matrix)
    q = _check_power_of_two(matrix)
    if q > settings.max_pauli_qubits:
        raise CapExceededError("max_pauli_qubits", settings.max_pauli_qubits, q)

    size = 2 ** q
    coo = matrix.tocoo()
    keep = coo.data != 0
    rows, cols, data = coo.row[keep], coo.col[keep], coo.data[keep].astype(complex)
    norm = float(np.sqrt(np.sum(np.abs(data) ** 2)))
    if norm == 0.0:
        return PauliExpansion(q, (), np.zeros(0, dtype=complex), 0.0, 0)

    masks = rows ^ cols
    unique_masks = np.unique(masks)
    logger.debug("Pauli 分解：q=%d，非零元 %d，掩码 %d 个", q, data.size, unique_masks.size)

    def transform(mask_chunk: np.ndarray):
        # f_x(c) = M[c⊕x, c]
        position = {int(m): i for i, m in enumerate(mask_chunk)}
        selected = np.isin(masks, mask_chunk)
        table = np.zeros((mask_chunk.size, size), dtype=complex)
        rows_of = np.fromiter((position[int(m)] for m in masks[selected]), dtype=int, count=int(selected.sum()))
        np.add.at(table, (rows_of, cols[selected]), data[selected])
        return _walsh_hadamard(table)

    chunk = max(1, 2 ** 18 // size)
    chunks = [unique_masks[i:i + chunk] for i in range(0, unique_masks.size, chunk)]
    spectra = ordered_map(transform, chunks, workers)

    threshold = ZERO_THRESHOLD * norm
    labels, coefficients = [], []
    z_values = np.arange(size)
    popcount = np.array([bin(v).count("1") for v in range(size)])
    for mask_chunk, spectrum in zip(chunks, spectra):
        for x, row in zip(mask_chunk, spectrum):
            # α = (−i)^{|x∧z|}·WHT(f_x)(z)/2^q
            phases = _POWERS_OF_MINUS_I[popcount[int(x) & z_values] % 4]
            alphas = phases * row / size
            for z in np.nonzero(np.abs(alphas) > threshold)[0]:
                labels.append(_label(int(x), int(z), q))
                coefficients.append(alphas[z])

    return _sorted_expansion(labels, np.asarray(coefficients, dtype=complex), q, norm, int(data.size))


def pauli_matrix(label: str) -> np.ndarray:
    """Pauli 串的稠密矩阵，首字符对应最高位"""
    result = np.ones((1, 1), dtype=complex)
    for char in label:
        result = np.kron(result, _SINGLE[char])
    return result


def decompose_dense(matrix) -> PauliExpansion:
    """4^q 次迹运算的稠密参考分解（q ≤ 4）"""
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    q = _check_power_of_two(sp.csr_matrix(dense))
    if q > DENSE_ORACLE_MAX_QUBITS:
        raise CapExceededError("dense_oracle_qubits", DENSE_ORACLE_MAX_QUBITS, q)
    size = 2 ** q
    norm = float(np.linalg.norm(dense))
    labels, coefficients = [], []
    for chars in product(PAULI_LABELS, repeat=q):
        label = "".join(chars)
        alpha = np.trace(pauli_matrix(label).conj().T @ dense) / size
        if abs(alpha) > ZERO_THRESHOLD * norm:
            labels.append(label)
            coefficients.append(alpha)
    return _sorted_expansion(labels, np.asarray(coefficients, dtype=complex), q, norm, int(np.count_nonzero(dense)))


def reconstruct(expansion: PauliExpansion, n_terms: Optional[int] = None) -> np.ndarray:
    """Σ_{i≤m} α_i Σ_i 的稠密矩阵（q ≤ 8）"""
    q = expansion.n_qubits
    if q > RECONSTRUCT_MAX_QUBITS:
        raise CapExceededError("reconstruct_qubits", RECONSTRUCT_MAX_QUBITS, q)
    size = 2 ** q
    count = len(expansion) if n_terms is None else n_terms
    columns = np.arange(size)
    popcount = np.array([bin(v).count("1") for v in range(size)])
    result = np.zeros((size, size), dtype=complex)
    for term in expansion.terms[:count]:
        x, z = term.masks()
        # (X^x Z^z)[c⊕x, c] = (−1)^{|z∧c|}，再乘 i^{|x∧z|}
        signs = 1 - 2 * (popcount[z & columns] % 2)
        phase = _POWERS_OF_I[bin(x & z).count("1") % 4]
        result[columns ^ x, columns] += term.coefficient * phase * signs
    return result


def truncation_distance(expansion: PauliExpansion, n_terms: int) -> float:
    """d(m) = ‖M − Σ_{i≤m} α_iΣ_i‖_F/‖M‖_F，由 Parseval 关系计算"""
    if not 0 <= n_terms <= len(expansion):
        raise ParameterError(f"项数 m={n_terms} 超出范围 [0, {len(expansion)}]")
    if expansion.source_norm == 0.0:
        return 0.0
    return float(math.sqrt(max(expansion.residual_squares[n_terms], 0.0)) / expansion.source_norm)


def distance_curve(expansion: PauliExpansion) -> np.ndarray:
    if expansion.source_norm == 0.0:
        return np.zeros(len(expansion) + 1)
    return np.sqrt(np.maximum(expansion.residual_squares, 0.0)) / expansion.source_norm


def terms_for_epsilon(expansion: PauliExpansion, epsilon: float) -> int:
    """满足 d(m) < ε 的最小 m（二分查找）"""
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"ε 必须在 (0, 1) 内，实际为 {epsilon}")
    low, high = 0, len(expansion)
    while low < high:
        middle = (low + high) // 2
        if truncation_distance(expansion, middle) < epsilon:
            high = middle
        else:
            low = middle + 1
    return low
