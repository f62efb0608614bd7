import logging
import os
from logging.config import fileConfig
from typing import Optional

from app.core.config import settings

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"


def setup_logging(level: Optional[str] = None, config_path: Optional[str] = None) -> None:
    """按 ini 文件配置日志，文件缺失时退回 basicConfig"""
    path = config_path or settings.log_config
    if path and os.path.exists(path):
        fileConfig(path, disable_existing_loggers=False)
    else:
        logging.basicConfig(format=LOG_FORMAT, datefmt="%H:%M:%S")

    logging.getLogger("app").setLevel((level or settings.log_level).upper())
