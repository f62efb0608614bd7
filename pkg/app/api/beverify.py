import argparse

from app.experiments.be_verify import run_be_verify
from app.utils.deps import add_common_arguments, run_experiment


def register(subparsers) -> None:
    parser = subparsers.add_parser("beverify", help="块编码电路验证")
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    return run_experiment(args, run_be_verify)
