"""CLI functionality of `mmkgc`."""

import logging
import sys
from argparse import SUPPRESS, ArgumentDefaultsHelpFormatter, ArgumentParser, Namespace
from typing import List, Optional, Sequence

from ._helper import Scenario, parse_overrides
from .base import Toolkit
from .exceptions import ConfigError, MmkgcError

logger = logging.getLogger(__name__)


def _build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("-c", "--config", help="Path to a key = value config file", type=str, default=None)
    common.add_argument("-v", "--verbose", help="Enable verbose logging", action="store_true")

    argparser = ArgumentParser(
        prog="mmkgc",
        description="Multi-modal knowledge graph completion. Every config key can be overridden with --key value.",
        formatter_class=ArgumentDefaultsHelpFormatter,
        allow_abbrev=False,
    )
    commands = argparser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> ArgumentParser:
        return commands.add_parser(
            name, help=help_text, parents=[common], formatter_class=ArgumentDefaultsHelpFormatter, allow_abbrev=False
        )

    add("train", "Train a model and write checkpoints and the loss trace")

    evaluate = add("eval", "Evaluate a checkpoint")
    evaluate.add_argument("--checkpoint", help="Checkpoint file", type=str, required=True)
    evaluate.add_argument("--split", help="Split to rank", choices=("train", "valid", "test"), default="test")
    evaluate.add_argument("--per-modality", help="Also write the per-relation, per-modality table", action="store_true")
    evaluate.add_argument("--out", help="Output directory (defaults to output_dir)", type=str, default=None)

    corrupt = add("corrupt", "Write a corrupted copy of the dataset")
    corrupt.add_argument("--scenario", help="noise, missing or sparse", type=str, required=True)
    corrupt.add_argument("--ratio", help="Fraction of entities or training triples affected", type=float, required=True)
    corrupt.add_argument("--seed", help="Corruption seed", type=int, default=0)
    corrupt.add_argument("--scale", help="Noise std (defaults to corrupt_scale)", type=float, default=None)
    corrupt.add_argument("--out", help="Output directory", type=str, required=True)

    report = add("report", "Write the gate weight and per-relation reports of a checkpoint")
    report.add_argument("--checkpoint", help="Checkpoint file", type=str, required=True)
    report.add_argument("--relations", help="Comma separated relation names (defaults to all)", type=str, default=None)
    report.add_argument("--split", help="Split of the per-relation report", choices=("train", "valid", "test"), default="test")
    report.add_argument("--out", help="Output directory (defaults to output_dir)", type=str, default=None)

    gradcheck = add("gradcheck", "Check the analytic gradients on a tiny random model")
    gradcheck.add_argument("--corrupt-gradients", help=SUPPRESS, action="store_true")
    return argparser


def _dispatch(args: Namespace, toolkit: Toolkit) -> None:
    if args.command == "train":
        toolkit.train()
    elif args.command == "eval":
        toolkit.evaluate(args.checkpoint, args.split, per_modality=args.per_modality, output_dir=args.out)
    elif args.command == "corrupt":
        try:
            scenario = Scenario(args.scenario)
        except ValueError as e:
            raise ConfigError(f"Unknown scenario '{args.scenario}', expected noise, missing or sparse") from e
        if scenario == Scenario.NONE:
            raise ConfigError("The corrupt command needs a scenario other than 'none'")
        toolkit.corrupt(scenario, args.ratio, args.seed, args.out, scale=args.scale)
    elif args.command == "report":
        relations = [name.strip() for name in args.relations.split(",") if name.strip()] if args.relations else None
        toolkit.report(args.checkpoint, relations, split=args.split, output_dir=args.out)
    elif args.command == "gradcheck":
        toolkit.gradcheck(corrupt_gradients=args.corrupt_gradients)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code.

    Args:
        argv (Optional[Sequence[str]], optional): The arguments. Defaults to `sys.argv[1:]`.

    Returns:
        int: 0 on success, otherwise the `exit_code` of the error that stopped the command
    """
    args, extra = _build_parser().parse_known_args(list(argv) if argv is not None else None)

    package_logger = logging.getLogger("mmkgc")
    if args.verbose:
        package_logger.setLevel(logging.DEBUG)

    try:
        toolkit = Toolkit(args.config, parse_overrides(extra))
        _dispatch(args, toolkit)
    except MmkgcError as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        return e.exit_code
    return 0


def cli_main(argv: Optional[List[str]] = None) -> None:
    """CLI entrypoint for `mmkgc`. Uses `Toolkit`."""
    sys.exit(run(argv))
