import math
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import ParameterError


def _ratio(numerator: float, denominator: float) -> float:
    """无量纲比值，分母为零时返回 ±inf（0/0 返回 nan）"""
    if denominator == 0.0:
        if numerator == 0.0:
            return math.nan
        return math.copysign(math.inf, numerator)
    return numerator / denominator


class ConstantVelocity(BaseModel):
    kind: Literal["constant"] = "constant"
    value: float = 0.0

    model_config = ConfigDict(frozen=True)


class ProfileVelocity(BaseModel):
    kind: Literal["profile"] = "profile"
    values: List[float]

    model_config = ConfigDict(frozen=True)

    @field_validator("values")
    @classmethod
    def check_values(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("速度剖面不能为空")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("速度剖面包含非有限值")
        return values


VelocityField = Annotated[Union[ConstantVelocity, ProfileVelocity], Field(discriminator="kind")]


class DerivedNumbers(BaseModel):
    gamma_d: float
    gamma_a: float
    gamma_r: float
    peclet_cell: float
    damkohler_adv: float
    damkohler_diff: float
    lambda0: float
    lambda1: float
    lambda2: float

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_gammas(cls, gamma_d: float, gamma_a: float, gamma_r: float) -> "DerivedNumbers":
        """由 Courant 数计算 Peclet/Damkohler 数与 λ 系数"""
        return cls(
            gamma_d=gamma_d,
            gamma_a=gamma_a,
            gamma_r=gamma_r,
            peclet_cell=_ratio(gamma_a, gamma_d),
            damkohler_adv=_ratio(gamma_a, gamma_r),
            damkohler_diff=_ratio(gamma_d, gamma_r),
            lambda0=1.0 - 2.0 * gamma_d - gamma_r,
            lambda1=gamma_d - gamma_a / 2.0,
            lambda2=gamma_d + gamma_a / 2.0,
        )

    @property
    def is_euler_stable(self) -> bool:
        """显式 Euler 的经验稳定区：|λ| ≤ 1 且网格 Peclet ≤ 2"""
        lambdas_ok = all(abs(v) <= 1.0 for v in (self.lambda0, self.lambda1, self.lambda2))
        peclet_ok = math.isnan(self.peclet_cell) or abs(self.peclet_cell) <= 2.0
        return lambdas_ok and peclet_ok


class AdrParams(BaseModel):
    # 物理参数
    diffusion: float = Field(1.0, ge=0)   # D
    a: float = Field(1.0, gt=0)           # 线性反应率
    b: float = Field(0.6, ge=0)           # 二次反应率
    velocity: VelocityField = ConstantVelocity(value=1.0)

    # 数值参数
    dx: float = Field(1.0, gt=0)
    dt: float = Field(0.01, gt=0)
    n_sites: int = Field(20, ge=2)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_consistency(self) -> "AdrParams":
        if isinstance(self.velocity, ProfileVelocity) and len(self.velocity.values) != self.n_sites:
            raise ValueError(
                f"速度剖面长度 {len(self.velocity.values)} 与格点数 {self.n_sites} 不一致"
            )
        for name, value in (("gamma_d", self.gamma_d), ("gamma_a", self.gamma_a), ("gamma_r", self.gamma_r)):
            if not math.isfinite(value):
                raise ValueError(f"Courant 数 {name} 不是有限值")
        return self

    @property
    def is_constant_velocity(self) -> bool:
        return isinstance(self.velocity, ConstantVelocity)

    @property
    def velocity_scale(self) -> float:
        """常速度取 U，剖面取 max|U_j|"""
        if isinstance(self.velocity, ConstantVelocity):
            return self.velocity.value
        return max(abs(v) for v in self.velocity.values)

    @property
    def gamma_d(self) -> float:
        return self.dt * self.diffusion / self.dx ** 2

    @property
    def gamma_a(self) -> float:
        return self.dt * self.velocity_scale / self.dx

    @property
    def gamma_r(self) -> float:
        return self.a * self.dt

    def derived(self) -> DerivedNumbers:
        return DerivedNumbers.from_gammas(self.gamma_d, self.gamma_a, self.gamma_r)


class InitialBox(BaseModel):
    height: float = Field(1.0, gt=0)   # φ^max
    width: int = Field(5, ge=1)
    center: Optional[int] = None       # 默认 N/2

    model_config = ConfigDict(frozen=True)

    def sites(self, n_sites: int) -> List[int]:
        """盒子占据的格点（周期边界）"""
        if self.width > n_sites:
            raise ParameterError(f"盒子宽度 {self.width} 超过格点数 {n_sites}")
        center = n_sites // 2 if self.center is None else self.center
        start = center - self.width // 2
        return [(start + k) % n_sites for k in range(self.width)]

    def nonlinearity_strength(self, a: float, b: float) -> float:
        """R = φ^max·b/a"""
        return self.height * b / a

    @staticmethod
    def carrying_capacity(a: float, b: float) -> float:
        """C = a/b"""
        return _ratio(a, b)
