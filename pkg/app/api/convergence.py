import argparse

from app.experiments.convergence import run_convergence
from app.utils.deps import add_common_arguments, run_experiment


def register(subparsers) -> None:
    parser = subparsers.add_parser("convergence", help="Carleman 截断阶数收敛实验")
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run_experiment(args, run_convergence)
