from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np

PAULI_LABELS = "IXYZ"


@dataclass(frozen=True)
class PauliString:
    labels: str          # 长度 q，字符取自 I/X/Y/Z，首字符作用于最高位
    coefficient: complex

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def masks(self) -> Tuple[int, int]:
        """(x, z) 位掩码：X→(1,0)，Y→(1,1)，Z→(0,1)"""
        x = z = 0
        for char in self.labels:
            x = (x << 1) | (char in "XY")
            z = (z << 1) | (char in "YZ")
        return x, z


@dataclass(frozen=True)
class PauliExpansion:
    """按 |α| 降序排列的 Pauli 展开，同模长时按标签字典序"""

    n_qubits: int
    labels: Tuple[str, ...]
    coefficients: np.ndarray
    source_norm: float            # 填充矩阵的 Frobenius 范数
    nonzeros: int = 0             # 源矩阵非零元个数

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def terms(self) -> List[PauliString]:
        return [PauliString(label, complex(c)) for label, c in zip(self.labels, self.coefficients)]

    @cached_property
    def residual_squares(self) -> np.ndarray:
        """第 m 项为 Σ_{i>m}|α_i|²·2^q（m = 0..len）"""
        weights = np.abs(self.coefficients) ** 2 * 2.0 ** self.n_qubits
        suffix = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]])
        return suffix
