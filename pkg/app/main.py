import argparse
import logging
import sys
from typing import List, Optional

from app.api import beverify, convergence, p0scan, pauli
from app.core.config import settings
from app.core.errors import CarlemanAdrError
from app.core.logging import setup_logging

logger = logging.getLogger("app")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carleman-adr",
        description="ADR 方程的 Carleman 线性化、Pauli 分解与块编码实验",
    )
    parser.add_argument("--version", action="version", version=f"{settings.app_name} {settings.app_version}")
    parser.add_argument("-v", "--verbose", action="store_true", help="输出 DEBUG 日志")

    # 注册子命令
    subparsers = parser.add_subparsers(dest="command", required=True)
    convergence.register(subparsers)
    pauli.register(subparsers)
    p0scan.register(subparsers)
    beverify.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging("DEBUG" if args.verbose else None)

    try:
        return args.handler(args)
    except CarlemanAdrError as exc:
        logger.error("%s", exc.detail)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
