import os
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # 应用配置
    app_name: str = "Carleman ADR"
    app_version: str = "1.0.0"

    # 并行配置（0 表示使用全部 CPU）
    threads: int = 0

    # 日志配置
    log_level: str = "INFO"
    log_config: str = "logging.ini"

    # 输出配置
    output_dir: str = "results"

    # 桌面规模上限
    max_qubits: int = 24
    max_pauli_qubits: int = 10
    max_dense_qubits: int = 10

    model_config = SettingsConfigDict(env_prefix="CARLEMAN_", env_file=".env", extra="ignore")

    def worker_count(self, requested: Optional[int] = None) -> int:
        """实际使用的线程数"""
        count = requested if requested else self.threads
        if count <= 0:
            count = os.cpu_count() or 1
        return max(1, count)


settings = Settings()
