"""截断 Carleman 算子（无矩阵施加 + 可选显式装配）、线性化系统的 Euler 推进与误差分析"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from app.core.errors import DegenerateSeriesError, FiniteTimeBlowupError, ParameterError, ShapeMismatchError
from app.engine.adr import (
    RELATIVE_ERROR_GUARD,
    evolve_nonlinear,
    linear_matrix,
    logistic_reference_errors,
)
from app.models.carleman import CarlemanState
from app.models.lattice import LatticeField
from app.models.results import ConvergenceRow, ConvergenceStudy, ErrorSeries
from app.schemas.adr import AdrParams
from app.utils.parallel import ordered_map

logger = logging.getLogger(__name__)


@dataclass
class CarlemanOperator:
    """块稀疏 Carleman 矩阵：对角块为 A 的各腿之和，上对角块为 B 的各腿之和"""

    matrix: sp.csr_matrix
    b: float
    order: int
    _assembled: Optional[sp.csr_matrix] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=float)
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ShapeMismatchError(f"A 必须是方阵，实际形状 {self.matrix.shape}")
        if self.order < 1:
            raise ParameterError(f"Carleman 阶数至少为 1，实际为 {self.order}")

    @classmethod
    def from_params(cls, params: AdrParams, order: int) -> "CarlemanOperator":
        return cls(linear_matrix(params), params.b, order)

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]

    @property
    def block_sizes(self) -> List[int]:
        return [self.n_sites ** k for k in range(1, self.order + 1)]

    @property
    def dimension(self) -> int:
        return sum(self.block_sizes)

    @cached_property
    def _stencil(self) -> List[Tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        return [(int(r), int(c), float(v)) for r, c, v in zip(coo.row, coo.col, coo.data) if v != 0.0]

    def quadratic_matrix(self) -> sp.csr_matrix:
        """N×N² 的 B，B_ijk = b·δ_ij·δ_jk"""
        n = self.n_sites
        if self.b == 0.0:
            return sp.csr_matrix((n, n * n))
        rows = np.arange(n)
        return sp.csr_matrix((np.full(n, self.b), (rows, rows * (n + 1))), shape=(n, n * n))

    def _apply_linear_legs(self, block: np.ndarray, k: int) -> np.ndarray:
        n = self.n_sites
        out = np.zeros_like(block)
        for leg in range(k):
            shape = (n ** leg, n, n ** (k - 1 - leg))
            x = block.reshape(shape)
            y = out.reshape(shape)
            for row, col, value in self._stencil:
                y[:, row, :] += value * x[:, col, :]
        return out

    def _apply_quadratic_legs(self, upper: np.ndarray, k: int) -> np.ndarray:
        # u_{k+1} 中相邻两腿取相同指标（B 的 1-稀疏性）
        n = self.n_sites
        out = np.zeros(n ** k)
        for leg in range(k):
            x = upper.reshape(n ** leg, n, n, n ** (k - 1 - leg))
            diagonal = np.diagonal(x, axis1=1, axis2=2)
            view = out.reshape(n ** leg, n, n ** (k - 1 - leg))
            view += self.b * np.moveaxis(diagonal, -1, 1)
        return out

    def apply(self, state: CarlemanState) -> CarlemanState:
        """无矩阵计算 C·u"""
        if state.order != self.order or state.n_sites != self.n_sites:
            raise ShapeMismatchError(
                f"状态 (N={state.n_sites}, K={state.order}) 与算子 (N={self.n_sites}, K={self.order}) 不匹配"
            )
        blocks = []
        for k in range(1, self.order + 1):
            out = self._apply_linear_legs(state.blocks[k - 1], k)
            if k < self.order and self.b != 0.0:
                out += self._apply_quadratic_legs(state.blocks[k], k)
            blocks.append(out)
        return CarlemanState(blocks)

    def assemble(self) -> sp.csr_matrix:
        """显式装配稀疏矩阵（pauli 分解与精确传播子使用）"""
        if self._assembled is None:
            self._assembled = assemble_carleman(self)
        return self._assembled


def _leg_sum(matrix: sp.spmatrix, k: int, n: int) -> sp.csr_matrix:
    """Σ_i 1^{⊗i} ⊗ M ⊗ 1^{⊗(k−1−i)}"""
    total = None
    for leg in range(k):
        term = sp.kron(sp.kron(sp.identity(n ** leg, format="csr"), matrix), sp.identity(n ** (k - 1 - leg), format="csr"))
        total = term if total is None else total + term
    return sp.csr_matrix(total)


def assemble_carleman(op: CarlemanOperator) -> sp.csr_matrix:
    n, order = op.n_sites, op.order
    b_matrix = op.quadratic_matrix()
    grid: List[List[Optional[sp.spmatrix]]] = [[None] * order for _ in range(order)]
    for k in range(1, order + 1):
        grid[k - 1][k - 1] = _leg_sum(op.matrix, k, n)
        if k < order:
            grid[k - 1][k] = _leg_sum(b_matrix, k, n)
    assembled = sp.bmat(grid, format="csr")
    assembled.eliminate_zeros()
    return assembled


def carleman_sparsity(op: CarlemanOperator) -> Tuple[np.ndarray, np.ndarray]:
    """非零元位置 (row, col)"""
    coo = op.assemble().tocoo()
    return coo.row.copy(), coo.col.copy()


def initial_carleman_state(phi: LatticeField, order: int) -> CarlemanState:
    """u_k = φ^{⊗k}"""
    if order < 1:
        raise ParameterError(f"Carleman 阶数至少为 1，实际为 {order}")
    blocks = [phi.values.copy()]
    for _ in range(1, order):
        blocks.append(np.kron(blocks[-1], phi.values))
    return CarlemanState(blocks)


def apply_carleman(op: CarlemanOperator, state: CarlemanState) -> CarlemanState:
    return op.apply(state)


def euler_step_carleman(state: CarlemanState, op: CarlemanOperator, dt: float) -> CarlemanState:
    """u + Δt·C·u"""
    derivative = op.apply(state)
    return CarlemanState([u + dt * du for u, du in zip(state.blocks, derivative.blocks)])


def evolve_carleman(phi0: LatticeField, op: CarlemanOperator, dt: float, n_steps: int) -> np.ndarray:
    """推进线性化系统，返回 u_1 的 (n_steps+1, N) 轨迹；溢出后的行填 nan"""
    state = initial_carleman_state(phi0, op.order)
    trajectory = np.full((n_steps + 1, op.n_sites), np.nan)
    trajectory[0] = state.u1
    logger.debug("Carleman 推进：N=%d, K=%d, 维数 %d", op.n_sites, op.order, op.dimension)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            derivative = op.apply(state)
            for u, du in zip(state.blocks, derivative.blocks):
                u += dt * du
            if not np.all(np.isfinite(state.u1)):
                logger.warning("Carleman 推进在第 %d 步溢出（K=%d）", step, op.order)
                break
            trajectory[step] = state.u1
    return trajectory


def propagate_exact(state: CarlemanState, op: CarlemanOperator, t: float) -> CarlemanState:
    """exp(t·C)·u"""
    vector = expm_multiply(t * op.assemble(), state.flatten())
    return CarlemanState.from_flat(vector, op.n_sites, op.order)


def absolute_error_series(phi_eul: np.ndarray, phi_carl: np.ndarray) -> np.ndarray:
    phi_eul, phi_carl = _check_trajectories(phi_eul, phi_carl)
    return np.max(np.abs(phi_eul - phi_carl), axis=1)


def _check_trajectories(phi_eul, phi_carl) -> Tuple[np.ndarray, np.ndarray]:
    phi_eul = np.atleast_2d(np.asarray(phi_eul, dtype=float))
    phi_carl = np.atleast_2d(np.asarray(phi_carl, dtype=float))
    if phi_eul.shape != phi_carl.shape:
        raise ShapeMismatchError(f"轨迹形状不一致：{phi_eul.shape} 与 {phi_carl.shape}")
    return phi_eul, phi_carl


def relative_error_series(
    phi_eul: np.ndarray,
    phi_carl: np.ndarray,
    guard: float = RELATIVE_ERROR_GUARD,
) -> ErrorSeries:
    """Δ_R(t) = max_j |φ_Eul − φ_Carl|/|φ_Eul|，|φ_Eul| < guard 的格点不参与"""
    phi_eul, phi_carl = _check_trajectories(phi_eul, phi_carl)
    magnitude = np.abs(phi_eul)
    admitted = magnitude >= guard
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(admitted, np.abs(phi_eul - phi_carl) / np.where(admitted, magnitude, 1.0), np.nan)

    has_sites = np.any(admitted, axis=1)
    relative = np.full(phi_eul.shape[0], np.nan)
    relative[has_sites] = np.nanmax(ratio[has_sites], axis=1)
    if not np.any(np.isfinite(relative)):
        raise DegenerateSeriesError("所有时刻的格点都低于相对误差保护阈值")

    # nanargmax 取首个最大值
    t_star = int(np.nanargmax(relative))
    return ErrorSeries(
        relative=relative,
        absolute=np.max(np.abs(phi_eul - phi_carl), axis=1),
        t_star_index=t_star,
        max_relative=float(relative[t_star]),
        mean_relative=float(np.nanmean(ratio[t_star])),
        degenerate_steps=int(np.count_nonzero(~has_sites)),
    )


def log_linear_slope(orders: Sequence[int], errors: Sequence[float]) -> float:
    """log(误差) 对 K 的线性拟合斜率，可用点少于 2 个时为 nan"""
    points = [(k, e) for k, e in zip(orders, errors) if math.isfinite(e) and e > 0.0]
    if len(points) < 2:
        return math.nan
    ks, es = zip(*points)
    return float(np.polyfit(np.asarray(ks, dtype=float), np.log(es), 1)[0])


def convergence_study(
    params: AdrParams,
    phi0: LatticeField,
    orders: Sequence[int],
    n_steps: int,
    guard: float = RELATIVE_ERROR_GUARD,
    workers: Optional[int] = None,
    keep_trajectories: bool = False,
) -> ConvergenceStudy:
    """对每个截断阶数 K 比较 Carleman 与非线性 Euler 解"""
    orders = list(orders)
    if orders != sorted(orders) or len(set(orders)) != len(orders):
        raise ParameterError(f"K 列表必须严格升序：{orders}")

    a_matrix = linear_matrix(params)
    euler = evolve_nonlinear(phi0, params, n_steps, matrix=a_matrix)
    phi_max = float(np.max(np.abs(phi0.values)))

    def run(order: int):
        logger.info("Carleman K=%d 开始（%d 步）", order, n_steps)
        op = CarlemanOperator(a_matrix, params.b, order)
        trajectory = evolve_carleman(phi0, op, params.dt, n_steps)
        logger.info("Carleman K=%d 完成", order)
        return trajectory

    trajectories = ordered_map(run, orders, workers)

    rows, series_list = [], []
    for order, trajectory in zip(orders, trajectories):
        finite = bool(np.all(np.isfinite(trajectory)) and np.all(np.isfinite(euler)))
        valid = np.all(np.isfinite(trajectory), axis=1) & np.all(np.isfinite(euler), axis=1)
        series = relative_error_series(euler[valid], trajectory[valid], guard)
        try:
            reference = logistic_reference_errors(phi_max, params.a, params.b, order, params.dt, n_steps)
            exact_err, euler_err = reference.max_exact, reference.max_euler
        except FiniteTimeBlowupError:
            exact_err = euler_err = math.nan
        rows.append(
            ConvergenceRow(
                order=order,
                max_relative=series.max_relative,
                mean_relative=series.mean_relative,
                t_star=series.t_star_index * params.dt,
                logistic_exact_error=exact_err,
                logistic_euler_error=euler_err,
                finite=finite,
            )
        )
        series_list.append(series)

    slope = log_linear_slope(orders, [row.max_relative for row in rows])
    return ConvergenceStudy(
        rows=rows,
        log_slope=slope,
        euler_trajectory=euler,
        carleman_trajectories=trajectories if keep_trajectories else None,
        series=series_list,
    )
