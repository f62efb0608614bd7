import argparse
import logging
from typing import Callable

from app.core.config import settings
from app.core.errors import EXIT_OK, ToleranceError
from app.models.results import ExperimentResult
from app.schemas.experiment import ExperimentConfig, load_config

logger = logging.getLogger(__name__)

Runner = Callable[[ExperimentConfig, str], ExperimentResult]


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """每个子命令共用的 --config 与 --out"""
    parser.add_argument("--config", default=None, help="key = value 配置文件，缺省时使用默认参数")
    parser.add_argument("--out", default=None, help=f"输出目录（默认 {settings.output_dir}/<子命令>）")


def get_output_dir(args: argparse.Namespace) -> str:
    return args.out or f"{settings.output_dir}/{args.command}"


def run_experiment(args: argparse.Namespace, runner: Runner) -> int:
    """加载配置、运行实验；内部容差不满足时抛出 ToleranceError"""
    config = load_config(args.config)
    out_dir = get_output_dir(args)
    result = runner(config, out_dir)
    logger.info("%s 完成，写出 %d 个文件到 %s", result.name, len(result.files), out_dir)
    if not result.passed:
        raise ToleranceError(f"{result.name} 未通过内部检查：{'; '.join(result.failures)}")
    return EXIT_OK
