import argparse

from app.experiments.pauli_scaling import run_pauli_scaling
from app.utils.deps import add_common_arguments, run_experiment


def register(subparsers) -> None:
    parser = subparsers.add_parser("pauli", help="Pauli 分解截断距离与 m*(ε) 标度")
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run_experiment(args, run_pauli_scaling)
