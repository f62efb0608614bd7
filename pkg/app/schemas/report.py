import enum
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.schemas.adr import DerivedNumbers


class ConditionStatus(str, enum.Enum):
    PASS = "pass"          # |value| < 1
    BOUNDARY = "boundary"  # |value| = 1
    FAIL = "fail"          # |value| > 1


class ConditionResult(BaseModel):
    name: str
    expression: str
    value: float
    margin: float          # 1 − |value|
    status: ConditionStatus


class ApplicabilityReport(BaseModel):
    conditions: List[ConditionResult]
    derived: DerivedNumbers

    @property
    def all_pass(self) -> bool:
        return all(c.status == ConditionStatus.PASS for c in self.conditions)

    @property
    def any_fail(self) -> bool:
        return any(c.status == ConditionStatus.FAIL for c in self.conditions)

    def failures(self) -> List[str]:
        return [f"{c.expression} = {c.value:.6g}" for c in self.conditions if c.status == ConditionStatus.FAIL]


# p₀[L] 的初始态
class LocalizedState(BaseModel):
    kind: Literal["localized"] = "localized"
    site: int = Field(0, ge=0)


class UniformState(BaseModel):
    kind: Literal["uniform"] = "uniform"


class ExplicitState(BaseModel):
    kind: Literal["explicit"] = "explicit"
    real: List[float]
    imag: Optional[List[float]] = None

    @classmethod
    def from_vector(cls, psi) -> "ExplicitState":
        psi = np.asarray(psi, dtype=complex)
        imag = psi.imag.tolist() if np.any(psi.imag) else None
        return cls(real=psi.real.tolist(), imag=imag)

    @model_validator(mode="after")
    def check_normalized(self) -> "ExplicitState":
        if self.imag is not None and len(self.imag) != len(self.real):
            raise ValueError("实部与虚部长度不一致")
        norm = float(np.linalg.norm(self.vector()))
        if not self.real or abs(norm - 1.0) > 1e-10:
            raise ValueError(f"初始态必须归一化，实际范数 {norm:.6g}")
        return self

    def vector(self) -> np.ndarray:
        real = np.asarray(self.real, dtype=float)
        if self.imag is None:
            return real.astype(complex)
        return real + 1j * np.asarray(self.imag, dtype=float)


InitialState = Annotated[Union[LocalizedState, UniformState, ExplicitState], Field(discriminator="kind")]
