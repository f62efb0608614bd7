"""实验配置：`section.key = value` 纯文本，按节校验"""
import logging
import os
from typing import Any, Dict, List, Literal, Optional, get_origin

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator

from app.core.errors import InvalidConfigError
from app.engine.adr import gaussian_velocity_profile
from app.schemas.adr import AdrParams, ConstantVelocity, InitialBox

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RunSection(_Section):
    name: str = "experiment"
    seed: int = 20240101
    n_steps: int = Field(1000, ge=1)
    plots: bool = False
    threads: Optional[int] = Field(None, ge=1)


class AdrSection(_Section):
    diffusion: float = Field(1.0, ge=0)
    a: float = Field(1.0, gt=0)
    b: float = Field(0.6, ge=0)
    velocity: float = 1.0
    profile: Literal["constant", "gaussian"] = "constant"
    profile_width: Optional[float] = Field(None, gt=0)     # 默认 N/8
    profile_center: Optional[float] = None                 # 默认 N/2
    dx: float = Field(1.0, gt=0)
    dt: float = Field(0.01, gt=0)
    n_sites: int = Field(20, ge=2)

    def to_params(self) -> AdrParams:
        if self.profile == "gaussian":
            velocity = gaussian_velocity_profile(
                self.n_sites, self.velocity, self.profile_width, self.profile_center
            )
        else:
            velocity = ConstantVelocity(value=self.velocity)
        return AdrParams(
            diffusion=self.diffusion, a=self.a, b=self.b, velocity=velocity,
            dx=self.dx, dt=self.dt, n_sites=self.n_sites,
        )


class InitialSection(_Section):
    kind: Literal["box", "localized", "uniform"] = "box"
    height: float = Field(1.0, gt=0)
    width: int = Field(5, ge=1)
    center: Optional[int] = None
    site: int = Field(0, ge=0)

    def box(self) -> InitialBox:
        return InitialBox(height=self.height, width=self.width, center=self.center)


class CarlemanSection(_Section):
    orders: List[int] = [1, 2, 3, 4, 5]
    guard: float = Field(1e-12, gt=0)
    snapshots: int = Field(5, ge=1)

    @field_validator("orders")
    @classmethod
    def check_orders(cls, orders: List[int]) -> List[int]:
        if not orders or any(k < 1 for k in orders) or orders != sorted(set(orders)):
            raise ValueError("orders 必须是严格递增的正整数列表")
        return orders


class PauliSection(_Section):
    sites: List[int] = [2, 3, 4, 5, 6]         # Carleman 矩阵的 N
    order: int = Field(3, ge=1)                # Carleman 矩阵的 K
    linear_qubits: List[int] = [2, 3, 4, 5, 6]  # 只含 A 的矩阵 N = 2^q
    epsilons: List[float] = [1e-1, 1e-2, 1e-3]
    structure_sites: int = Field(4, ge=2)
    structure_order: int = Field(3, ge=1)

    @field_validator("epsilons")
    @classmethod
    def check_epsilons(cls, epsilons: List[float]) -> List[float]:
        if not epsilons or any(not 0.0 < e < 1.0 for e in epsilons):
            raise ValueError("epsilons 必须位于 (0, 1)")
        return epsilons


class P0Section(_Section):
    n_sites: int = Field(100, ge=2)
    gamma_re: float = Field(0.01, ge=0)
    gamma_adv_min: float = 0.0
    gamma_adv_max: float = 1.0
    gamma_adv_count: int = Field(21, ge=1)
    gamma_diff_min: float = 0.0
    gamma_diff_max: float = 0.5
    gamma_diff_count: int = Field(21, ge=1)
    localized_site: int = Field(0, ge=0)
    sweep_gamma_adv: float = 0.1
    sweep_gamma_diff: float = 0.1
    sweep_gamma_re_min: float = 0.0
    sweep_gamma_re_max: float = 1.0
    sweep_gamma_re_count: int = Field(21, ge=1)
    simulate: bool = False      # 需要 N 为 2 的幂


# 块编码电路模拟的格点数上限
L_SITES_MAX = 32
B_SITES_MAX = 8


class BeSection(_Section):
    l_sites: List[int] = [2, 4, 8]
    l_draws: int = Field(50, ge=1)
    l_states: int = Field(20, ge=1)
    b_sites: List[int] = [2, 4]
    b_couplings: List[float] = [0.0, 0.006, 0.5]
    b_states: int = Field(20, ge=1)
    tolerance: float = Field(1e-11, gt=0)

    @field_validator("l_sites", "b_sites")
    @classmethod
    def check_sites(cls, sites: List[int], info: ValidationInfo) -> List[int]:
        limit = L_SITES_MAX if info.field_name == "l_sites" else B_SITES_MAX
        for n in sites:
            if n < 2 or n & (n - 1) or n > limit:
                raise ValueError(f"N={n} 必须是 2 的幂且位于 [2, {limit}]")
        return sites

    @field_validator("b_couplings")
    @classmethod
    def check_couplings(cls, couplings: List[float]) -> List[float]:
        if any(not 0.0 <= c <= 1.0 for c in couplings):
            raise ValueError("b·Δt 必须位于 [0, 1]")
        return couplings


class ExperimentConfig(_Section):
    run: RunSection = RunSection()
    adr: AdrSection = AdrSection()
    initial: InitialSection = InitialSection()
    carleman: CarlemanSection = CarlemanSection()
    pauli: PauliSection = PauliSection()
    p0: P0Section = P0Section()
    be: BeSection = BeSection()

    @model_validator(mode="after")
    def check_initial(self) -> "ExperimentConfig":
        if self.initial.kind == "box" and self.initial.width > self.adr.n_sites:
            raise ValueError(f"盒子宽度 {self.initial.width} 超过格点数 {self.adr.n_sites}")
        if self.initial.kind == "localized" and self.initial.site >= self.adr.n_sites:
            raise ValueError(f"局域格点 {self.initial.site} 超出范围")
        return self

    def metadata(self) -> Dict[str, Any]:
        """扁平化为 section.key → 值，写入 CSV 头部"""
        flat: Dict[str, Any] = {}
        for section, values in self.model_dump().items():
            for key, value in values.items():
                flat[f"{section}.{key}"] = value
        return flat


def _parse_value(raw: str) -> Any:
    """逗号分隔视为列表，其余原样交给 pydantic 转换"""
    raw = raw.strip()
    if "," in raw:
        return [item.strip() for item in raw.split(",") if item.strip()]
    if raw.lower() in ("none", "null", ""):
        return None
    return raw


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    sections: Dict[str, Dict[str, Any]] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{source}:{number} 缺少 '='：{line}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key.count(".") != 1:
            raise InvalidConfigError(f"{source}:{number} 键必须为 section.key 形式：{key}")
        section, name = key.split(".")
        if section not in ExperimentConfig.model_fields:
            raise InvalidConfigError(f"{source}:{number} 未知配置节：{section}")
        entries = sections.setdefault(section, {})
        if name in entries:
            raise InvalidConfigError(f"{source}:{number} 重复的键：{key}")
        value = _parse_value(raw)
        # 单元素列表字段写成 "5" 时也接受
        field = ExperimentConfig.model_fields[section].annotation.model_fields.get(name)
        if field is not None and get_origin(field.annotation) is list and isinstance(value, str):
            value = [value]
        entries[name] = value

    try:
        config = ExperimentConfig.model_validate(sections)
    except ValidationError as exc:
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors())
        raise InvalidConfigError(f"{source} 配置无效：{details}") from exc
    logger.debug("已加载配置 %s", source)
    return config


def load_config(path: Optional[str]) -> ExperimentConfig:
    """读取配置文件；path 为空时使用全部默认值"""
    if path is None:
        return ExperimentConfig()
    if not os.path.exists(path):
        raise InvalidConfigError(f"配置文件不存在：{path}")
    with open(path, encoding="utf-8") as handle:
        return parse_config_text(handle.read(), source=path)


def render_config(config: ExperimentConfig) -> str:
    """把配置写回 `section.key = value` 文本"""
    lines = []
    for key, value in config.metadata().items():
        if value is None:
            text = "none"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, list):
            text = ", ".join(str(v) for v in value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
