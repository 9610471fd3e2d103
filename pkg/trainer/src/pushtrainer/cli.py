"""Trainer CLI: train the deep classifier on pipeline crops and export
scores/embeddings in the pipeline's file formats.
"""

from __future__ import annotations

import argparse
import sys

from .export import export_embeddings, export_scores
from .model import load_checkpoint
from .train import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pushtrainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on the manifest's train/val splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="directory for checkpoint + log")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=20)

    p = sub.add_parser("export-scores", help="write a score CSV for one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-embeddings", help="write pooled features per sample")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            config = TrainConfig(
                learning_rate=args.learning_rate,
                batch_size=args.batch_size,
                max_epochs=args.max_epochs,
                patience=args.patience,
                seed=args.seed,
            )
            result = train(args.manifest, args.out, config)
            print(
                f"best val accuracy {result.best_val_accuracy:.4f} at epoch "
                f"{result.best_epoch}"
                + (" (stopped early)" if result.stopped_early else ""),
                file=sys.stderr,
            )
        elif args.command == "export-scores":
            model, _ = load_checkpoint(args.checkpoint)
            n = export_scores(model, args.manifest, args.split, args.out)
            print(f"wrote {n} scores to {args.out}", file=sys.stderr)
        elif args.command == "export-embeddings":
            model, _ = load_checkpoint(args.checkpoint)
            n = export_embeddings(model, args.manifest, args.out)
            print(f"wrote {n} embeddings to {args.out}", file=sys.stderr)
        return 0
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
