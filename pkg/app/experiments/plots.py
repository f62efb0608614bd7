"""可选的静态 SVG 图，验收不依赖这些输出"""
import logging
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)


def line_plot(
    path: str,
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    xlabel: str,
    ylabel: str,
    logy: bool = False,
    title: Optional[str] = None,
) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in series.items():
        ax.plot(x, values, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info("已写出 %s", path)
    return path


def heatmap(
    path: str,
    x: Sequence[float],
    y: Sequence[float],
    values: np.ndarray,
    xlabel: str,
    ylabel: str,
    colorbar: str,
) -> str:
    """values[i, j] 对应 (y[i], x[j])，nan 留白"""
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(x, y, np.ma.masked_invalid(values), shading="nearest")
    fig.colorbar(mesh, ax=ax, label=colorbar)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info("已写出 %s", path)
    return path
