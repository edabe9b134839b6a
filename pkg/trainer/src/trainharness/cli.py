"""CLI: train a document-described architecture and emit metrics JSON."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .arch import ArchitectureError, load_arch
from .data import DatasetUnavailableError, load_cifar
from .model import build_model, parameter_count
from .run import TrainingDiverged, TrainJob, train_eval, validate_metrics


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="train-harness",
        description="Train an architecture document on CIFAR and write the "
                    "metrics JSON the pruning tool's report command ingests.",
    )
    parser.add_argument("--arch", required=True, help="architecture JSON path")
    parser.add_argument("--dataset", required=True,
                        choices=("cifar10", "cifar100"))
    parser.add_argument("--epochs", type=int, default=2)
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--out", required=True, help="metrics JSON output path")
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--optimizer", default="rmsprop",
                        choices=("rmsprop", "sgd", "adam"))
    parser.add_argument("--data-fraction", type=float, default=0.2,
                        help="seeded fraction of the training split (default 0.2)")
    parser.add_argument("--data-dir",
                        default=os.environ.get("TRAINHARNESS_DATA_DIR", "./data"))
    parser.add_argument("--download", action="store_true",
                        help="allow downloading the dataset into --data-dir")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    arch_path = Path(args.arch)
    if not arch_path.is_file():
        print(f"error: architecture not found: {args.arch}", file=sys.stderr)
        return 2
    try:
        doc = load_arch(arch_path.read_text(encoding="utf-8"))
        model = build_model(doc)
    except (ArchitectureError, json.JSONDecodeError, KeyError) as err:
        print(f"error: bad architecture document: {err}", file=sys.stderr)
        return 2

    try:
        job = TrainJob(
            arch_path=str(arch_path), dataset=args.dataset, epochs=args.epochs,
            seed=args.seed, batch_size=args.batch_size, learning_rate=args.lr,
            optimizer=args.optimizer, data_fraction=args.data_fraction,
        )
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    print(f"model: {arch_path.name}, {parameter_count(model):,} parameters")
    try:
        train = load_cifar(args.dataset, args.data_dir, train=True,
                           download=args.download)
        test = load_cifar(args.dataset, args.data_dir, train=False,
                          download=args.download)
    except DatasetUnavailableError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4

    try:
        metrics = train_eval(model, job, train, test)
    except TrainingDiverged as err:
        print(f"error: training diverged: {err}", file=sys.stderr)
        return 1
    validate_metrics(metrics)
    Path(args.out).write_text(json.dumps(metrics, indent=2) + "\n",
                              encoding="utf-8")
    print(f"accuracy {metrics['accuracy']:.4f}, final loss "
          f"{metrics['loss']:.4f} -> {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
