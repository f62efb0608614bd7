"""确定性态矢量模拟器，门集合只覆盖块编码电路所需"""
import logging
from typing import Callable, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import CapExceededError, ParameterError, ShapeMismatchError
from app.models.circuit import (
    Controlled,
    CyclicShift,
    Gate,
    Hadamard,
    PauliX,
    Permutation,
    QuantumRegisterLayout,
    Ry,
    ShiftDirection,
    StateVector,
)

logger = logging.getLogger(__name__)

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _resolve(layout: QuantumRegisterLayout, gate: Gate) -> Tuple[List[int], Callable[[np.ndarray], np.ndarray]]:
    """门作用的量子比特与作用在 (2^k, rest) 块上的变换"""
    if isinstance(gate, (Hadamard, PauliX, Ry)):
        if isinstance(gate, Hadamard):
            matrix = _HADAMARD
        elif isinstance(gate, PauliX):
            matrix = _PAULI_X
        else:
            matrix = _ry(gate.angle)
        return [gate.target], lambda block: matrix @ block
    if isinstance(gate, CyclicShift):
        shift = int(gate.direction) * gate.power
        return list(layout.qubits(gate.register)), lambda block: np.roll(block, shift, axis=0)
    if isinstance(gate, Permutation):
        qubits = list(layout.qubits(gate.register))
        if len(gate.mapping) != 2 ** len(qubits):
            raise ShapeMismatchError(f"置换长度 {len(gate.mapping)} 与寄存器 {gate.register} 维度不一致")
        mapping = np.asarray(gate.mapping)

        def permute(block: np.ndarray) -> np.ndarray:
            result = np.empty_like(block)
            result[mapping] = block
            return result

        return qubits, permute
    raise ParameterError(f"不支持的门类型：{type(gate).__name__}")


def _apply(tensor: np.ndarray, layout: QuantumRegisterLayout, gate: Gate, controls: Tuple[Tuple[int, int], ...]) -> None:
    if isinstance(gate, Controlled):
        _apply(tensor, layout, gate.gate, controls + tuple(gate.controls))
        return

    n = layout.total_qubits
    targets, transform = _resolve(layout, gate)
    control_qubits = [qubit for qubit, _ in controls]
    for qubit in targets + control_qubits:
        if not 0 <= qubit < n:
            raise ParameterError(f"量子比特编号 {qubit} 超出范围 [0, {n})")
    if len(set(control_qubits)) != len(control_qubits) or set(control_qubits) & set(targets):
        raise ParameterError("控制比特与目标比特必须互不相交")

    index = [slice(None)] * n
    for qubit, polarity in controls:
        index[qubit] = polarity
    # 控制比特固定后得到原张量的视图
    sub = tensor[tuple(index)]
    axes = [t - sum(1 for c in control_qubits if c < t) for t in targets]
    moved = np.moveaxis(sub, axes, list(range(len(axes))))
    block = moved.reshape(2 ** len(axes), -1)
    moved[...] = transform(block).reshape(moved.shape)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    result = state.copy()
    _apply(result.amplitudes.reshape([2] * state.layout.total_qubits), state.layout, gate, ())
    return result


def run_circuit(state: StateVector, gates: Iterable[Gate]) -> StateVector:
    """按顺序（从左到右）作用门序列"""
    result = state.copy()
    tensor = result.amplitudes.reshape([2] * state.layout.total_qubits)
    for gate in gates:
        _apply(tensor, state.layout, gate, ())
    return result


def postselect(state: StateVector, register_values: Mapping[str, int]) -> Tuple[np.ndarray, float]:
    """取出指定寄存器取值的切片（不归一化）与其概率"""
    layout = state.layout
    for name, value in register_values.items():
        if not 0 <= value < 2 ** layout.size(name):
            raise ParameterError(f"寄存器 {name} 的取值 {value} 超出范围")
    tensor = state.amplitudes.reshape([2 ** size for _, size in layout.registers])
    index = tuple(register_values.get(name, slice(None)) for name in layout.names)
    residual = np.array(tensor[index], dtype=complex).reshape(-1)
    return residual, float(np.vdot(residual, residual).real)


def prepare_state(layout: QuantumRegisterLayout, system_register: str, psi: Sequence[complex]) -> StateVector:
    """ancilla 全 |0⟩ ⊗ ψ，ψ 不足寄存器维度时补零"""
    psi = np.asarray(psi, dtype=complex)
    dimension = 2 ** layout.size(system_register)
    if psi.ndim != 1 or psi.size > dimension:
        raise ShapeMismatchError(f"ψ 长度 {psi.size} 超过寄存器 {system_register} 维度 {dimension}")
    if not np.isclose(np.linalg.norm(psi), 1.0, atol=1e-12):
        raise ParameterError(f"ψ 必须归一化，实际范数 {np.linalg.norm(psi):.6g}")

    tensor = np.zeros([2 ** size for _, size in layout.registers], dtype=complex)
    index = tuple(slice(0, psi.size) if name == system_register else 0 for name in layout.names)
    tensor[index] = psi
    return StateVector(layout, tensor.reshape(-1))


def shift_cascade(layout: QuantumRegisterLayout, register: str, direction: ShiftDirection) -> List[Gate]:
    """S± 的级联多控 X 实现：最高位先翻转，控制在所有更低位上"""
    polarity = 1 if direction == ShiftDirection.UP else 0
    qubits = layout.qubits(register)
    gates: List[Gate] = []
    for position, target in enumerate(qubits):
        controls = tuple((qubit, polarity) for qubit in qubits[position + 1:])
        gates.append(Controlled(PauliX(target), controls) if controls else PauliX(target))
    return gates


def _check_dense(layout: QuantumRegisterLayout) -> None:
    if layout.total_qubits > settings.max_dense_qubits:
        raise CapExceededError("max_dense_qubits", settings.max_dense_qubits, layout.total_qubits)


def circuit_unitary(layout: QuantumRegisterLayout, gates: Sequence[Gate]) -> np.ndarray:
    """对每个计算基态运行电路得到稠密酉矩阵"""
    _check_dense(layout)
    dimension = layout.dimension
    columns = np.eye(dimension, dtype=complex)
    tensor = columns.reshape([2] * layout.total_qubits + [dimension])
    # 最后一维是批量轴，各门只作用在前 total_qubits 个轴上
    for gate in gates:
        _apply(tensor, layout, gate, ())
    return columns


def gate_matrix(layout: QuantumRegisterLayout, gate: Gate) -> np.ndarray:
    return circuit_unitary(layout, [gate])
