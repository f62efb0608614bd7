from dataclasses import dataclass
from typing import List

import numpy as np

from app.core.errors import ShapeMismatchError


@dataclass
class CarlemanState:
    """截断 Carleman 向量 (u_1, ..., u_K)，u_k 按多重指标行优先存储（i_1 最慢）"""

    blocks: List[np.ndarray]

    def __post_init__(self):
        if not self.blocks:
            raise ShapeMismatchError("Carleman 状态至少包含 u_1")
        self.blocks = [np.asarray(block, dtype=float).reshape(-1) for block in self.blocks]
        n = self.blocks[0].shape[0]
        for k, block in enumerate(self.blocks, start=1):
            if block.shape[0] != n ** k:
                raise ShapeMismatchError(f"u_{k} 长度应为 {n ** k}，实际为 {block.shape[0]}")

    @property
    def order(self) -> int:
        return len(self.blocks)

    @property
    def n_sites(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def dimension(self) -> int:
        return sum(block.shape[0] for block in self.blocks)

    @property
    def u1(self) -> np.ndarray:
        return self.blocks[0]

    def flatten(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    @classmethod
    def from_flat(cls, vector: np.ndarray, n_sites: int, order: int) -> "CarlemanState":
        vector = np.asarray(vector, dtype=float).reshape(-1)
        sizes = [n_sites ** k for k in range(1, order + 1)]
        if vector.shape[0] != sum(sizes):
            raise ShapeMismatchError(f"向量长度 {vector.shape[0]} 与 N={n_sites}, K={order} 不符")
        offsets = np.cumsum([0] + sizes)
        return cls([vector[offsets[i]:offsets[i + 1]].copy() for i in range(order)])

    def copy(self) -> "CarlemanState":
        return CarlemanState([block.copy() for block in self.blocks])
