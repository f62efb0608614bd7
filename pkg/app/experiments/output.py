"""CSV 输出：`#` 开头的元数据头 + 17 位有效数字"""
import csv
import logging
import math
import os
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import numpy as np

from app.core.config import settings

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """浮点数按 17 位有效数字输出，None 输出为空单元格"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if isinstance(value, complex):
        return format_value(value.real) if value.imag == 0 else f"{value.real:.17g}{value.imag:+.17g}j"
    if isinstance(value, (list, tuple)):
        return " ".join(format_value(v) for v in value)
    return str(value)


def build_metadata(experiment: str, config_metadata: Mapping[str, Any], extra: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {
        "app": settings.app_name,
        "version": settings.app_version,
        "experiment": experiment,
    }
    metadata.update(config_metadata)
    if extra:
        metadata.update(extra)
    return metadata


def write_csv(
    path: str,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Mapping[str, Any],
) -> str:
    """写出带元数据头的 CSV，返回文件路径"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        for key, value in metadata.items():
            handle.write(f"# {key} = {format_value(value)}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"行长度 {len(row)} 与列数 {len(columns)} 不一致")
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.info("已写出 %s（%d 行）", path, count)
    return path


def read_csv(path: str):
    """读回 (metadata, columns, rows)，元数据值保留为字符串"""
    metadata: Dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            metadata[key] = value
        else:
            body.append(line)
    reader = list(csv.reader(body))
    return metadata, reader[0], reader[1:]
