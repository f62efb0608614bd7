import argparse

from app.experiments.p0_scan import run_p0_scan
from app.utils.deps import add_common_arguments, run_experiment


def register(subparsers) -> None:
    parser = subparsers.add_parser("p0scan", help="L 块编码后选择概率扫描")
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run_experiment(args, run_p0_scan)
