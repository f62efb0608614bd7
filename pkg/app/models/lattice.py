from dataclasses import dataclass

import numpy as np

from app.core.errors import ShapeMismatchError


@dataclass(frozen=True)
class LatticeField:
    """N 个周期格点上的浓度剖面 φ"""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ShapeMismatchError(f"浓度场必须是一维数组，实际维度 {values.ndim}")
        if not np.all(np.isfinite(values)):
            raise ShapeMismatchError("浓度场包含非有限值")
        object.__setattr__(self, "values", values)

    @property
    def n_sites(self) -> int:
        return self.values.shape[0]

    def shifted(self, offset: int) -> "LatticeField":
        """循环平移 offset 个格点"""
        return LatticeField(np.roll(self.values, offset))

    def __len__(self) -> int:
        return self.n_sites
