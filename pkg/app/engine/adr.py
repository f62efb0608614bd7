"""一维 ADR 方程的有限差分离散、显式 Euler 推进与 logistic 闭式参考解"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from app.core.errors import FiniteTimeBlowupError, ParameterError, ShapeMismatchError
from app.models.lattice import LatticeField
from app.schemas.adr import AdrParams, ConstantVelocity, InitialBox, ProfileVelocity

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# 相对误差的除零保护阈值
RELATIVE_ERROR_GUARD = 1e-12


def gaussian_velocity_profile(
    n_sites: int,
    amplitude: float = 1.0,
    width: Optional[float] = None,
    center: Optional[float] = None,
) -> ProfileVelocity:
    """高斯速度剖面 U_j = U0·exp(−(j−c)²/(2σ²))，默认 σ = N/8、c = N/2"""
    sigma = n_sites / 8.0 if width is None else width
    mid = n_sites / 2.0 if center is None else center
    j = np.arange(n_sites, dtype=float)
    values = amplitude * np.exp(-((j - mid) ** 2) / (2.0 * sigma ** 2))
    return ProfileVelocity(values=values.tolist())


def periodic_tridiagonal(diag: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> sp.csr_matrix:
    """行 j：列 j−1 为 lower[j]，列 j 为 diag[j]，列 j+1 为 upper[j]（周期）"""
    n = diag.shape[0]
    rows = np.arange(n)
    row_idx = np.concatenate([rows, rows, rows])
    col_idx = np.concatenate([rows, (rows - 1) % n, (rows + 1) % n])
    data = np.concatenate([diag, lower, upper])
    # N=2 时 j−1 与 j+1 重合，COO 转 CSR 会自动累加
    matrix = sp.coo_matrix((data, (row_idx, col_idx)), shape=(n, n)).tocsr()
    matrix.eliminate_zeros()
    return matrix


def build_linear_matrix(params: AdrParams) -> sp.csr_matrix:
    """常速度情形的矩阵 A（中心差分 + 周期边界）"""
    if not isinstance(params.velocity, ConstantVelocity):
        raise ParameterError("速度剖面请使用 build_linear_matrix_profile")

    n = params.n_sites
    diff = params.diffusion / params.dx ** 2
    adv = params.velocity.value / (2.0 * params.dx)
    diag = np.full(n, -2.0 * diff - params.a)
    lower = np.full(n, diff + adv)
    upper = np.full(n, diff - adv)
    return periodic_tridiagonal(diag, lower, upper)


def build_linear_matrix_profile(params: AdrParams) -> sp.csr_matrix:
    """非均匀速度 U(x) 的矩阵 A，对角线含 −(U_{j+1} − U_{j−1})/(2Δx)"""
    if not isinstance(params.velocity, ProfileVelocity):
        raise ParameterError("常速度请使用 build_linear_matrix")

    u = np.asarray(params.velocity.values, dtype=float)
    n = params.n_sites
    if u.shape[0] != n:
        raise ShapeMismatchError(f"速度剖面长度 {u.shape[0]} 与格点数 {n} 不一致")

    diff = params.diffusion / params.dx ** 2
    adv = u / (2.0 * params.dx)
    divergence = (np.roll(u, -1) - np.roll(u, 1)) / (2.0 * params.dx)
    diag = -2.0 * diff - params.a - divergence
    return periodic_tridiagonal(diag, diff + adv, diff - adv)


def linear_matrix(params: AdrParams) -> sp.csr_matrix:
    if params.is_constant_velocity:
        return build_linear_matrix(params)
    return build_linear_matrix_profile(params)


def _check_field(phi: LatticeField, params: AdrParams) -> None:
    if phi.n_sites != params.n_sites:
        raise ShapeMismatchError(f"浓度场长度 {phi.n_sites} 与格点数 {params.n_sites} 不一致")


def euler_step_nonlinear(
    phi: LatticeField,
    params: AdrParams,
    matrix: Optional[sp.spmatrix] = None,
) -> LatticeField:
    """φ + Δt·(Aφ + bφ²)"""
    _check_field(phi, params)
    a_matrix = linear_matrix(params) if matrix is None else matrix
    values = phi.values
    with np.errstate(over="ignore", invalid="ignore"):
        updated = values + params.dt * (a_matrix @ values + params.b * values ** 2)
    if not np.all(np.isfinite(updated)):
        raise FiniteTimeBlowupError("非线性 Euler 步溢出")
    return LatticeField(updated)


def evolve_nonlinear(
    phi0: LatticeField,
    params: AdrParams,
    n_steps: int,
    matrix: Optional[sp.spmatrix] = None,
) -> np.ndarray:
    """返回 (n_steps+1, N) 轨迹；溢出后的行填 nan"""
    _check_field(phi0, params)
    a_matrix = linear_matrix(params) if matrix is None else matrix
    trajectory = np.full((n_steps + 1, params.n_sites), np.nan)
    phi = phi0.values.copy()
    trajectory[0] = phi
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            phi = phi + params.dt * (a_matrix @ phi + params.b * phi ** 2)
            if not np.all(np.isfinite(phi)):
                logger.warning("非线性 Euler 在第 %d 步溢出", step)
                break
            trajectory[step] = phi
    return trajectory


def box_field(box: InitialBox, n_sites: int) -> LatticeField:
    values = np.zeros(n_sites)
    values[box.sites(n_sites)] = box.height
    return LatticeField(values)


def localized_field(n_sites: int, site: int, height: float = 1.0) -> LatticeField:
    values = np.zeros(n_sites)
    values[site % n_sites] = height
    return LatticeField(values)


def uniform_field(n_sites: int, value: float = 1.0) -> LatticeField:
    return LatticeField(np.full(n_sites, value))


def logistic_exact(phi0: float, a: float, b: float, t: ArrayLike) -> ArrayLike:
    """logistic 方程 φ' = −aφ + bφ² 的精确解"""
    ratio = b * phi0 / a
    decay = np.exp(-a * np.asarray(t, dtype=float))
    denominator = 1.0 - ratio * (1.0 - decay)
    if np.any(denominator <= 0.0):
        raise FiniteTimeBlowupError(f"logistic 解在有限时间内发散（R = {ratio:.6g}）")
    result = phi0 * decay / denominator
    return float(result) if np.ndim(result) == 0 else result


def logistic_carleman_truncated(phi0: float, a: float, b: float, t: ArrayLike, order: int) -> ArrayLike:
    """K 阶截断的几何级数 φ0·e^{−at}·Σ_{k=0}^{K}[R(1−e^{−at})]^k

    注意：只含 u_1..u_K 的 Carleman 系统对应这里的 order = K−1。
    """
    if order < 0:
        raise ParameterError(f"截断阶数必须非负，实际为 {order}")
    ratio = b * phi0 / a
    decay = np.exp(-a * np.asarray(t, dtype=float))
    x = ratio * (1.0 - decay)
    partial = np.zeros_like(x)
    term = np.ones_like(x)
    for _ in range(order + 1):
        partial = partial + term
        term = term * x
    result = phi0 * decay * partial
    return float(result) if np.ndim(result) == 0 else result


def logistic_euler(phi0: float, a: float, b: float, dt: float, n_steps: int) -> np.ndarray:
    """单格点 logistic 方程的显式 Euler 轨迹"""
    values = np.empty(n_steps + 1)
    values[0] = phi = phi0
    for step in range(1, n_steps + 1):
        phi = phi + dt * (-a * phi + b * phi * phi)
        values[step] = phi
    return values


def logistic_carleman_matrix(a: float, b: float, order: int) -> np.ndarray:
    """单格点截断 Carleman 系统 u_k' = −k·a·u_k + k·b·u_{k+1}"""
    if order < 1:
        raise ParameterError(f"Carleman 阶数至少为 1，实际为 {order}")
    k = np.arange(1, order + 1, dtype=float)
    return np.diag(-a * k) + np.diag(b * k[:-1], 1)


def logistic_carleman_euler(phi0: float, a: float, b: float, order: int, dt: float, n_steps: int) -> np.ndarray:
    """单格点 Carleman 系统的显式 Euler 轨迹（返回 u_1）"""
    system = logistic_carleman_matrix(a, b, order)
    u = phi0 ** np.arange(1, order + 1, dtype=float)
    values = np.empty(n_steps + 1)
    values[0] = u[0]
    for step in range(1, n_steps + 1):
        u = u + dt * (system @ u)
        values[step] = u[0]
    return values


@dataclass(frozen=True)
class LogisticReference:
    times: np.ndarray
    exact_relative: np.ndarray   # 相对 logistic 精确解
    euler_relative: np.ndarray   # Carleman-Euler 对 logistic-Euler

    @property
    def max_exact(self) -> float:
        return float(np.max(self.exact_relative))

    @property
    def max_euler(self) -> float:
        return float(np.max(self.euler_relative))


def logistic_reference_errors(
    phi0: float, a: float, b: float, order: int, dt: float, n_steps: int
) -> LogisticReference:
    """与 Carleman 阶数 order 匹配的单格点 logistic 参考误差"""
    times = dt * np.arange(n_steps + 1)
    exact = logistic_exact(phi0, a, b, times)
    series = logistic_carleman_truncated(phi0, a, b, times, order - 1)
    euler = logistic_euler(phi0, a, b, dt, n_steps)
    carleman = logistic_carleman_euler(phi0, a, b, order, dt, n_steps)
    return LogisticReference(
        times=times,
        exact_relative=np.abs(exact - series) / np.abs(exact),
        euler_relative=np.abs(euler - carleman) / np.abs(euler),
    )
