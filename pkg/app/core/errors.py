"""命令行与数值模块共用的异常"""
from typing import Optional

# 退出码
EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_INVALID_CONFIG = 2


class CarlemanAdrError(Exception):
    """所有业务异常的基类，携带 detail 与退出码"""

    exit_code = EXIT_TOLERANCE

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class InvalidConfigError(CarlemanAdrError):
    exit_code = EXIT_INVALID_CONFIG


class CapExceededError(InvalidConfigError):
    """超出桌面规模上限"""

    def __init__(self, cap_name: str, limit: int, requested: int):
        super().__init__(f"超出上限 {cap_name}={limit}（请求值 {requested}）")
        self.cap_name = cap_name
        self.limit = limit
        self.requested = requested


class ShapeMismatchError(CarlemanAdrError, ValueError):
    pass


class ParameterError(CarlemanAdrError, ValueError):
    pass


class FiniteTimeBlowupError(CarlemanAdrError, ArithmeticError):
    pass


class DegenerateSeriesError(CarlemanAdrError):
    pass


class ApplicabilityError(ParameterError):
    pass


class ToleranceError(CarlemanAdrError):
    exit_code = EXIT_TOLERANCE
