"""L = 1 + ΔtA 与二次项算子 B̂ 的块编码电路、后选择概率与适用条件"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from app.core.errors import ApplicabilityError, ParameterError, ShapeMismatchError
from app.engine.adr import periodic_tridiagonal
from app.engine.qsim import circuit_unitary, postselect, prepare_state, run_circuit
from app.models.circuit import (
    BlockEncoding,
    Controlled,
    CyclicShift,
    Hadamard,
    PauliX,
    Permutation,
    QuantumRegisterLayout,
    Ry,
    ShiftDirection,
)
from app.schemas.adr import AdrParams, DerivedNumbers
from app.schemas.report import (
    ApplicabilityReport,
    ConditionResult,
    ConditionStatus,
    ExplicitState,
    InitialState,
    LocalizedState,
    UniformState,
)

logger = logging.getLogger(__name__)


def _register_qubits(dimension: int) -> int:
    return max(1, math.ceil(math.log2(dimension)))


def _require_power_of_two(n_sites: int) -> int:
    if n_sites < 2 or n_sites & (n_sites - 1):
        raise ApplicabilityError(f"电路模拟要求 N 为 2 的幂，实际 N={n_sites}")
    return n_sites.bit_length() - 1


def _condition(name: str, expression: str, value: float) -> ConditionResult:
    magnitude = abs(value)
    if math.isclose(magnitude, 1.0, rel_tol=0.0, abs_tol=1e-15):
        status = ConditionStatus.BOUNDARY
    elif magnitude < 1.0:
        status = ConditionStatus.PASS
    else:
        status = ConditionStatus.FAIL
    return ConditionResult(name=name, expression=expression, value=value, margin=1.0 - magnitude, status=status)


def check_applicability(source: Union[AdrParams, DerivedNumbers]) -> ApplicabilityReport:
    """四个 |·| < 1 条件，等号成立时记为 boundary"""
    numbers = source.derived() if isinstance(source, AdrParams) else source
    conditions = [
        _condition("lambda0", "1 − 2γ_d − γ_r", numbers.lambda0),
        _condition("lambda1", "γ_d − γ_a/2", numbers.lambda1),
        _condition("lambda2", "γ_d + γ_a/2", numbers.lambda2),
        _condition("reaction", "1 − γ_r", 1.0 - numbers.gamma_r),
    ]
    return ApplicabilityReport(conditions=conditions, derived=numbers)


@dataclass(frozen=True, eq=False)
class SparseOracleSpec:
    """列预言机 c(j,l) 与值预言机 M_{j,c(j,l)}，每个分支一行"""

    sparsity: int
    column_qubits: int
    columns: np.ndarray    # (2^m, dim)
    values: np.ndarray     # (2^m, dim)

    @property
    def angles(self) -> np.ndarray:
        """θ = 2·arccos(value)，使 Ry 后 |0⟩ 振幅等于矩阵元"""
        return 2.0 * np.arccos(np.clip(self.values, -1.0, 1.0))

    def matrix(self) -> sp.csr_matrix:
        """由预言机重建的矩阵 Σ_l value(j,l)·|j⟩⟨c(j,l)|"""
        branches, dimension = self.columns.shape
        rows = np.tile(np.arange(dimension), branches)
        matrix = sp.coo_matrix(
            (self.values.reshape(-1), (rows, self.columns.reshape(-1))), shape=(dimension, dimension)
        ).tocsr()
        matrix.eliminate_zeros()
        return matrix


@dataclass(frozen=True)
class ToeplitzL:
    """周期三对角矩阵 L：对角 λ₀，上对角 λ₁，下对角 λ₂"""

    n_sites: int
    numbers: DerivedNumbers

    @classmethod
    def from_gammas(cls, n_sites: int, gamma_d: float, gamma_a: float, gamma_r: float) -> "ToeplitzL":
        return cls(n_sites, DerivedNumbers.from_gammas(gamma_d, gamma_a, gamma_r))

    @classmethod
    def from_params(cls, params: AdrParams) -> "ToeplitzL":
        if not params.is_constant_velocity:
            raise ParameterError("L 的块编码只支持常速度")
        return cls(params.n_sites, params.derived())

    @property
    def lambdas(self) -> Tuple[float, float, float]:
        return self.numbers.lambda0, self.numbers.lambda1, self.numbers.lambda2

    def matrix(self) -> sp.csr_matrix:
        lambda0, lambda1, lambda2 = self.lambdas
        n = self.n_sites
        return periodic_tridiagonal(np.full(n, lambda0), np.full(n, lambda2), np.full(n, lambda1))

    def oracle_spec(self) -> SparseOracleSpec:
        """s=3，m=2：c(j,0)=c(j,3)=j，c(j,1)=j+1，c(j,2)=j−1（mod N），第 4 个分支取值 0"""
        j = np.arange(self.n_sites)
        columns = np.stack([j, (j + 1) % self.n_sites, (j - 1) % self.n_sites, j])
        lambda0, lambda1, lambda2 = self.lambdas
        values = np.stack([np.full(self.n_sites, v) for v in (lambda0, lambda1, lambda2, 0.0)])
        return SparseOracleSpec(sparsity=3, column_qubits=2, columns=columns, values=values)


@dataclass(frozen=True)
class BhatOperator:
    """填充到 2^{n'} 维的 B̂：单位阵加上 (i, i+(i+1)N) 处的 b·Δt"""

    n_sites: int
    b: float
    dt: float

    def __post_init__(self):
        if self.n_sites < 1 or self.b < 0 or self.dt < 0:
            raise ParameterError("B̂ 需要 N ≥ 1、b ≥ 0、Δt ≥ 0")
        if self.coupling > 1.0:
            raise ApplicabilityError(f"b·Δt = {self.coupling:.6g} > 1，无法作为振幅编码")

    @classmethod
    def from_params(cls, params: AdrParams) -> "BhatOperator":
        return cls(params.n_sites, params.b, params.dt)

    @property
    def coupling(self) -> float:
        return self.b * self.dt

    @property
    def beta(self) -> float:
        """β = 2·arccos(b·Δt)"""
        return 2.0 * math.acos(self.coupling)

    @property
    def logical_dimension(self) -> int:
        return self.n_sites + self.n_sites ** 2

    @property
    def n_qubits(self) -> int:
        return _register_qubits(self.logical_dimension)

    @property
    def dimension(self) -> int:
        return 2 ** self.n_qubits

    def partner(self, i: int) -> int:
        """u₁ 的第 i 个分量对应的 u₂ 对角分量 φ_iφ_i"""
        return i + (i + 1) * self.n_sites

    def column_map(self) -> Tuple[int, ...]:
        """对合置换 j ↔ j+(j+1)N（j < N），其余不动"""
        mapping = list(range(self.dimension))
        for i in range(self.n_sites):
            partner = self.partner(i)
            mapping[i], mapping[partner] = partner, i
        return tuple(mapping)

    def matrix(self) -> sp.csr_matrix:
        rows = np.arange(self.n_sites)
        partners = rows + (rows + 1) * self.n_sites
        coupling = sp.coo_matrix(
            (np.full(self.n_sites, self.coupling), (rows, partners)), shape=(self.dimension, self.dimension)
        )
        matrix = (sp.identity(self.dimension, format="csr") + coupling).tocsr()
        matrix.eliminate_zeros()
        return matrix

    def oracle_spec(self) -> SparseOracleSpec:
        j = np.arange(self.dimension)
        columns = np.stack([j, np.asarray(self.column_map())])
        second = np.where(j < self.n_sites, self.coupling, 0.0)
        values = np.stack([np.ones(self.dimension), second])
        return SparseOracleSpec(sparsity=2, column_qubits=1, columns=columns, values=values)


def _pattern(qubits: Tuple[int, ...], value: int) -> Tuple[Tuple[int, int], ...]:
    width = len(qubits)
    return tuple((qubit, (value >> (width - 1 - k)) & 1) for k, qubit in enumerate(qubits))


def build_be_circuit_L(toeplitz: ToeplitzL) -> BlockEncoding:
    """H^{⊗2} · Ô_v · Ô_c · H^{⊗2}，后选择 ancilla 全 0 得到 L/4"""
    n_system = _require_power_of_two(toeplitz.n_sites)
    report = check_applicability(toeplitz.numbers)
    if report.any_fail:
        raise ApplicabilityError(f"块编码条件不满足：{'; '.join(report.failures())}")

    layout = QuantumRegisterLayout.for_block_encoding(column=2, system=n_system)
    value = layout.qubits("value")[0]
    column = layout.qubits("column")
    spec = toeplitz.oracle_spec()

    gates: list = [Hadamard(q) for q in column]
    # 列预言机取“收集”方向：分支 1 把 j+1 处的振幅移到 j（S₋），分支 2 把 j−1 移到 j（S₊）
    gates.append(Controlled(CyclicShift("system", ShiftDirection.DOWN), _pattern(column, 1)))
    gates.append(Controlled(CyclicShift("system", ShiftDirection.UP), _pattern(column, 2)))
    for branch in range(4):
        gates.append(Controlled(Ry(value, float(spec.angles[branch, 0])), _pattern(column, branch)))
    gates.extend(Hadamard(q) for q in column)

    logger.debug("L 块编码：N=%d，λ=%s，共 %d 个门", toeplitz.n_sites, toeplitz.lambdas, len(gates))
    return BlockEncoding(
        name="L",
        layout=layout,
        gates=tuple(gates),
        subnormalization=4.0,
        target=toeplitz.matrix().toarray(),
        metadata={"lambda0": toeplitz.lambdas[0], "lambda1": toeplitz.lambdas[1], "lambda2": toeplitz.lambdas[2]},
    )


def build_be_circuit_B(bhat: BhatOperator) -> BlockEncoding:
    """H · Ô_c[B] · 比较器 · Ô_v[B] · 比较器† · H，后选择得到 B̂/2"""
    n_low = _require_power_of_two(bhat.n_sites)
    layout = QuantumRegisterLayout.for_block_encoding(column=1, system=bhat.n_qubits, flag=True)
    value = layout.qubits("value")[0]
    column = layout.qubits("column")[0]
    flag = layout.qubits("flag")[0]
    system = layout.qubits("system")

    # index < N 当且仅当 system 的高 n'−n 位全为 0
    high_bits = system[: bhat.n_qubits - n_low]
    comparator = Controlled(PauliX(flag), tuple((q, 0) for q in high_bits))

    gates: list = [
        Hadamard(column),
        Controlled(Permutation("system", bhat.column_map()), ((column, 1),)),
        comparator,
        Controlled(Ry(value, bhat.beta), ((column, 1), (flag, 1))),
        Controlled(Ry(value, math.pi), ((column, 1), (flag, 0))),
        comparator,
        Hadamard(column),
    ]
    logger.debug("B̂ 块编码：N=%d，n'=%d，b·Δt=%.6g", bhat.n_sites, bhat.n_qubits, bhat.coupling)
    return BlockEncoding(
        name="B",
        layout=layout,
        gates=tuple(gates),
        subnormalization=2.0,
        target=bhat.matrix().toarray(),
        metadata={"coupling": bhat.coupling, "beta": bhat.beta},
    )


def simulate_be(encoding: BlockEncoding, psi) -> Tuple[np.ndarray, float]:
    """返回 ancilla 全 0 的 system 切片（截到 ψ 的长度）与后选择概率"""
    psi = np.asarray(psi, dtype=complex)
    state = prepare_state(encoding.layout, encoding.system_register, psi)
    final = run_circuit(state, encoding.gates)
    residual, probability = postselect(final, encoding.ancilla_zero)
    return residual[: psi.size], probability


def _as_toeplitz(source: Union[AdrParams, ToeplitzL]) -> ToeplitzL:
    return source if isinstance(source, ToeplitzL) else ToeplitzL.from_params(source)


def _expansion_norm(lambdas: Tuple[float, float, float], c: np.ndarray) -> float:
    """‖Lc‖² 按 c_i、c_{i±1}、c_{i±2} 交叉项展开"""
    lambda0, lambda1, lambda2 = lambdas
    diagonal = float(np.sum(np.abs(c) ** 2))
    nearest = float(np.sum((c * np.conj(np.roll(c, -1))).real))
    next_nearest = float(np.sum((c * np.conj(np.roll(c, -2))).real))
    return (
        (lambda0 ** 2 + lambda1 ** 2 + lambda2 ** 2) * diagonal
        + 2.0 * lambda0 * (lambda1 + lambda2) * nearest
        + 2.0 * lambda1 * lambda2 * next_nearest
    )


def p0_analytic_L(source: Union[AdrParams, ToeplitzL], initial: InitialState) -> float:
    """p₀[L] = ‖Lψ‖²/16，任意 N（不要求 2 的幂）"""
    toeplitz = _as_toeplitz(source)
    lambdas = toeplitz.lambdas
    if isinstance(initial, UniformState):
        return sum(lambdas) ** 2 / 16.0
    if isinstance(initial, LocalizedState):
        if initial.site >= toeplitz.n_sites:
            raise ParameterError(f"格点 {initial.site} 超出范围 [0, {toeplitz.n_sites})")
        c = np.zeros(toeplitz.n_sites)
        c[initial.site] = 1.0
    elif isinstance(initial, ExplicitState):
        c = initial.vector()
        if c.size != toeplitz.n_sites:
            raise ShapeMismatchError(f"初始态长度 {c.size} 与格点数 {toeplitz.n_sites} 不一致")
    else:
        raise ParameterError(f"未知初始态：{initial!r}")
    return _expansion_norm(lambdas, c) / 16.0


def p0_analytic_B(bhat: BhatOperator, psi) -> float:
    """‖B̂ψ‖²/4"""
    psi = np.asarray(psi, dtype=complex)
    if psi.size > bhat.dimension:
        raise ShapeMismatchError(f"ψ 长度 {psi.size} 超过 B̂ 维度 {bhat.dimension}")
    padded = np.zeros(bhat.dimension, dtype=complex)
    padded[: psi.size] = psi
    image = bhat.matrix() @ padded
    return float(np.vdot(image, image).real) / 4.0


def p0_bound_B(bhat: BhatOperator) -> float:
    """计算基态上的最大值 (1+(bΔt)²)/4，ψ 取 u₂ 的对角分量时取到"""
    return (1.0 + bhat.coupling ** 2) / 4.0


def p0_ceiling_B(bhat: BhatOperator) -> float:
    """任意归一化 ψ 上的上确界 σ_max(B̂)²/4；B̂ 分解为 [[1,c],[0,1]] 的 2×2 块"""
    c = bhat.coupling
    sigma = (c + math.sqrt(c * c + 4.0)) / 2.0
    return sigma ** 2 / 4.0


def combined_step_probability(p0_L: float, p0_B: float) -> float:
    """L 与 B̂ 两个阶段独立后选择成功的概率"""
    for name, value in (("p0_L", p0_L), ("p0_B", p0_B)):
        if not 0.0 <= value <= 1.0:
            raise ParameterError(f"{name} = {value} 不是概率")
    return p0_L * p0_B


def block_encoding_unitary(encoding: BlockEncoding) -> np.ndarray:
    return circuit_unitary(encoding.layout, encoding.gates)


def top_left_block(encoding: BlockEncoding, unitary: Optional[np.ndarray] = None) -> np.ndarray:
    """ancilla 全 0 → 全 0 的 system 块；system 寄存器位于布局末尾"""
    if encoding.layout.names[-1] != encoding.system_register:
        raise ParameterError("system 寄存器必须位于布局末尾")
    matrix = block_encoding_unitary(encoding) if unitary is None else unitary
    size = encoding.system_dimension
    return matrix[:size, :size]
