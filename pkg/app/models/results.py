from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


@dataclass(frozen=True)
class ErrorSeries:
    """相对误差时间序列 Δ_R(t) 及其在 t* 的统计量"""

    relative: np.ndarray        # 每步的 max Δ_R，无可用格点时为 nan
    absolute: np.ndarray        # 每步的 max |φ_Eul − φ_Carl|
    t_star_index: int
    max_relative: float
    mean_relative: float
    degenerate_steps: int = 0


@dataclass(frozen=True)
class ConvergenceRow:
    order: int
    max_relative: float
    mean_relative: float
    t_star: float
    logistic_exact_error: float
    logistic_euler_error: float
    finite: bool = True


@dataclass(frozen=True)
class ConvergenceStudy:
    rows: List[ConvergenceRow]
    log_slope: float
    euler_trajectory: np.ndarray
    carleman_trajectories: Optional[List[np.ndarray]] = None
    series: Optional[List[ErrorSeries]] = None


@dataclass
class ExperimentResult:
    """一次实验运行写出的文件与内部容差检查结果"""

    name: str
    out_dir: str
    files: List[str] = field(default_factory=list)
    passed: bool = True
    failures: List[str] = field(default_factory=list)

    def fail(self, message: str) -> None:
        self.passed = False
        self.failures.append(message)
