"""量子寄存器布局、态矢量与门类型"""
import enum
from dataclasses import dataclass, field
from typing import Dict, Tuple, Union

import numpy as np

from app.core.config import settings
from app.core.errors import CapExceededError, ParameterError, ShapeMismatchError


class ShiftDirection(enum.IntEnum):
    UP = 1      # S₊：|i⟩ → |i+1⟩
    DOWN = -1   # S₋：|i⟩ → |i−1⟩


@dataclass(frozen=True)
class QuantumRegisterLayout:
    """按顺序排列的命名寄存器，全局第 0 个量子比特为最高位"""

    registers: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.registers]
        if len(set(names)) != len(names):
            raise ParameterError(f"寄存器名称重复：{names}")
        if any(size < 1 for _, size in self.registers):
            raise ParameterError("寄存器至少包含 1 个量子比特")
        if self.total_qubits > settings.max_qubits:
            raise CapExceededError("max_qubits", settings.max_qubits, self.total_qubits)

    @classmethod
    def for_block_encoding(cls, column: int, system: int, flag: bool = False) -> "QuantumRegisterLayout":
        """value ⊗ column ⊗ (flag) ⊗ system"""
        registers = [("value", 1), ("column", column)]
        if flag:
            registers.append(("flag", 1))
        registers.append(("system", system))
        return cls(tuple(registers))

    @property
    def total_qubits(self) -> int:
        return sum(size for _, size in self.registers)

    @property
    def dimension(self) -> int:
        return 2 ** self.total_qubits

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def size(self, name: str) -> int:
        return dict(self.registers)[self._checked(name)]

    def offset(self, name: str) -> int:
        position = 0
        for register, size in self.registers:
            if register == name:
                return position
            position += size
        raise ParameterError(f"未知寄存器：{name}")

    def qubits(self, name: str) -> Tuple[int, ...]:
        """寄存器的全局量子比特编号，首个为该寄存器的最高位"""
        start = self.offset(name)
        return tuple(range(start, start + self.size(name)))

    def _checked(self, name: str) -> str:
        if name not in self.names:
            raise ParameterError(f"未知寄存器：{name}")
        return name


@dataclass
class StateVector:
    layout: QuantumRegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.layout.dimension,):
            raise ShapeMismatchError(
                f"振幅长度 {self.amplitudes.shape} 与布局维度 {self.layout.dimension} 不一致"
            )

    @classmethod
    def zero(cls, layout: QuantumRegisterLayout) -> "StateVector":
        amplitudes = np.zeros(layout.dimension, dtype=complex)
        amplitudes[0] = 1.0
        return cls(layout, amplitudes)

    @classmethod
    def basis(cls, layout: QuantumRegisterLayout, index: int) -> "StateVector":
        amplitudes = np.zeros(layout.dimension, dtype=complex)
        amplitudes[index] = 1.0
        return cls(layout, amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes.copy())


@dataclass(frozen=True)
class Hadamard:
    target: int


@dataclass(frozen=True)
class PauliX:
    target: int


@dataclass(frozen=True)
class Ry:
    target: int
    angle: float


@dataclass(frozen=True)
class CyclicShift:
    """寄存器内 |i⟩ → |i ± power mod 2^size⟩"""

    register: str
    direction: ShiftDirection = ShiftDirection.UP
    power: int = 1


@dataclass(frozen=True)
class Permutation:
    """寄存器内 |i⟩ → |mapping[i]⟩"""

    register: str
    mapping: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ParameterError("置换映射必须是双射")


@dataclass(frozen=True)
class Controlled:
    gate: "Gate"
    controls: Tuple[Tuple[int, int], ...]   # (量子比特, 极性)

    def __post_init__(self):
        qubits = [qubit for qubit, _ in self.controls]
        if len(set(qubits)) != len(qubits):
            raise ParameterError(f"控制比特重复：{qubits}")
        if any(polarity not in (0, 1) for _, polarity in self.controls):
            raise ParameterError("控制极性只能为 0 或 1")


Gate = Union[Hadamard, PauliX, Ry, CyclicShift, Permutation, Controlled]


@dataclass(frozen=True)
class BlockEncoding:
    """后选择 ancilla 全 0 时，system 块等于 target/subnormalization"""

    name: str
    layout: QuantumRegisterLayout
    gates: Tuple[Gate, ...]
    subnormalization: float
    target: np.ndarray = field(repr=False)
    system_register: str = "system"
    metadata: Dict[str, float] = field(default_factory=dict)

    @property
    def ancilla_registers(self) -> Tuple[str, ...]:
        return tuple(name for name in self.layout.names if name != self.system_register)

    @property
    def ancilla_zero(self) -> Dict[str, int]:
        return {name: 0 for name in self.ancilla_registers}

    @property
    def system_dimension(self) -> int:
        return 2 ** self.layout.size(self.system_register)

    @property
    def logical_dimension(self) -> int:
        """target 的行数（B̂ 的 N+N² 不一定是 2 的幂）"""
        return self.target.shape[0]

