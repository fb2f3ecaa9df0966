"""CLI entry point for the PIN landmark pipeline."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

# LOG_DIR and friends must be in the environment before any logger is built
env_file = Path(__file__).parent / ".env"
if env_file.exists():
    load_dotenv(env_file)

from cli.commands import (  # noqa: E402
    handle_eval_ablation,
    handle_eval_multi,
    handle_fit_pca,
    handle_gen_data,
    handle_infer,
    handle_train,
)

EXIT_USAGE = 1


class UsageErrorParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"ERROR: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def create_parser() -> argparse.ArgumentParser:
    """Create CLI parser with subcommands."""
    parser = UsageErrorParser(
        prog="pin",
        description="Iterative 3D landmark localisation on phantom volumes",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(
        dest="command", help="Available commands", parser_class=UsageErrorParser
    )

    # --- gen-data ---
    gen_parser = subparsers.add_parser("gen-data", help="Generate a phantom dataset")
    gen_parser.add_argument("--config", type=str, help="key=value config file")
    gen_parser.add_argument("--out", required=True, type=str, help="Output directory")
    gen_parser.add_argument("--count", required=True, type=int, help="Number of phantoms")

    # --- fit-pca ---
    pca_parser = subparsers.add_parser("fit-pca", help="Fit the PCA shape model")
    pca_parser.add_argument("--manifest", required=True, type=str, help="manifest.csv")
    pca_parser.add_argument(
        "--threshold",
        type=float,
        help="Explained-variance threshold (default: variance_threshold from --config)",
    )
    pca_parser.add_argument("--config", type=str, help="key=value config file")
    pca_parser.add_argument("--out", required=True, type=str, help="Output .pins file")

    # --- train ---
    train_parser = subparsers.add_parser("train", help="Train a PIN model")
    train_parser.add_argument(
        "--mode", required=True, choices=["single", "multi"], help="Training mode"
    )
    train_parser.add_argument(
        "--landmark", type=int, default=0, help="Landmark index (single mode)"
    )
    train_parser.add_argument("--config", type=str, help="key=value config file")
    train_parser.add_argument("--manifest", required=True, type=str, help="manifest.csv")
    train_parser.add_argument("--out", required=True, type=str, help="Output directory")
    train_parser.add_argument(
        "--shape-model", dest="shape_model", type=str, help=".pins file (multi mode)"
    )

    # --- infer ---
    infer_parser = subparsers.add_parser("infer", help="Predict landmarks on a volume")
    infer_parser.add_argument("--checkpoint", required=True, type=str, help=".pinc file")
    infer_parser.add_argument(
        "--shape-model", dest="shape_model", type=str, help=".pins file (multi mode)"
    )
    infer_parser.add_argument("--volume", required=True, type=str, help=".pinv file")
    infer_parser.add_argument(
        "--rule", type=str.upper, choices=["A", "B", "C"], help="Update rule"
    )
    infer_parser.add_argument("--config", type=str, help="key=value config file")
    infer_parser.add_argument("--out", required=True, type=str, help="Output landmark CSV")
    infer_parser.add_argument("--trajectory", type=str, help="Optional trajectory CSV")

    # --- eval-ablation ---
    ablation_parser = subparsers.add_parser(
        "eval-ablation", help="Evaluate the five loss/rule variants"
    )
    ablation_parser.add_argument("--manifest", required=True, type=str, help="manifest.csv")
    ablation_parser.add_argument(
        "--checkpoint",
        required=True,
        action="append",
        dest="checkpoints",
        help="ALPHA=PATH, repeat for alpha 0, 0.5 and 1",
    )
    ablation_parser.add_argument(
        "--landmark", type=int, help="Landmark index (default: from checkpoint)"
    )
    ablation_parser.add_argument("--config", type=str, help="key=value config file")
    ablation_parser.add_argument("--out", required=True, type=str, help="Results directory")

    # --- eval-multi ---
    multi_parser = subparsers.add_parser(
        "eval-multi", help="Compare per-landmark models with the joint model"
    )
    multi_parser.add_argument("--manifest", required=True, type=str, help="manifest.csv")
    multi_parser.add_argument(
        "--single",
        required=True,
        action="append",
        dest="singles",
        help="Single-landmark checkpoint, repeat once per landmark",
    )
    multi_parser.add_argument("--multi", required=True, type=str, help="Joint checkpoint")
    multi_parser.add_argument(
        "--shape-model", dest="shape_model", required=True, type=str, help=".pins file"
    )
    multi_parser.add_argument("--config", type=str, help="key=value config file")
    multi_parser.add_argument("--out", required=True, type=str, help="Results directory")

    return parser


def execute_command(args) -> int:
    """Route to the appropriate CLI handler using a mapping."""
    command_map = {
        "gen-data": lambda: handle_gen_data(args.config, args.out, args.count),
        "fit-pca": lambda: handle_fit_pca(
            args.manifest, args.threshold, args.out, config_path=args.config
        ),
        "train": lambda: handle_train(
            args.mode, args.landmark, args.config, args.manifest, args.out, args.shape_model
        ),
        "infer": lambda: handle_infer(
            args.checkpoint,
            args.volume,
            args.out,
            rule=args.rule,
            shape_model_path=args.shape_model,
            config_path=args.config,
            trajectory=args.trajectory,
        ),
        "eval-ablation": lambda: handle_eval_ablation(
            args.manifest, args.checkpoints, args.out, args.config, args.landmark
        ),
        "eval-multi": lambda: handle_eval_multi(
            args.manifest, args.singles, args.multi, args.shape_model, args.out, args.config
        ),
    }

    func = command_map.get(args.command)
    if func is None:
        print("Unknown command", file=sys.stderr)
        return EXIT_USAGE
    return func()


def main(argv: Optional[List[str]] = None) -> int:
    """Execute the CLI main entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    try:
        return execute_command(args)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
