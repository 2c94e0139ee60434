"""Command-line entry point for the exporters.

Exit codes match the consumer toolkit: 0 on success, 2 for input/config
errors (including unloadable models), 1 for unexpected failures.
"""

from __future__ import annotations

import argparse
import sys

from .export import POOLINGS, ExportSpec, export_embeddings, export_predictions


def cmd_embeddings(args) -> None:
    spec = ExportSpec(
        model=args.model,
        pooling=args.pooling,
        max_length=args.max_length,
        batch_size=args.batch_size,
        output="embeddings",
    )
    export_embeddings(args.input, spec, args.output)


def cmd_predictions(args) -> None:
    export_predictions(
        args.input,
        args.model,
        args.output,
        n_classes=args.classes,
        max_length=args.max_length,
        batch_size=args.batch_size,
    )


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--input", required=True, help="corpus JSONL ({'id','text'} rows)")
    shared.add_argument("--output", required=True, help="destination JSONL")
    shared.add_argument("--model", required=True, help="model name or local path")
    shared.add_argument("--max-length", type=int, default=512)
    shared.add_argument("--batch-size", type=int, default=8)

    parser = argparse.ArgumentParser(
        prog="encexport",
        description="Export encoder embeddings or classifier probabilities to JSONL",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embeddings", parents=[shared], help="pooled document vectors")
    p.add_argument("--pooling", default="mean", choices=POOLINGS)
    p.set_defaults(func=cmd_embeddings)

    p = sub.add_parser("predictions", parents=[shared], help="class probability rows")
    p.add_argument(
        "--classes", type=int, default=None, help="required class count for the task"
    )
    p.set_defaults(func=cmd_predictions)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
