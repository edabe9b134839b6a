"""Desk-scale training and evaluation of document-built models.

Defaults mirror the benchmark setup this harness shadows (RMSprop, learning
rate 1e-3, batch 128) but scaled-down epoch counts: the point is to prove a
pruned architecture trains and to emit the metrics document the reporting
tool ingests, not to reproduce published accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from .data import NUM_CLASSES, subsample

METRIC_FIELDS = ("arch", "dataset", "epochs", "accuracy", "loss")


class TrainingDiverged(RuntimeError):
    """Loss left the realm of finite numbers; carries where and when."""


@dataclass(frozen=True)
class TrainJob:
    arch_path: str
    dataset: str
    epochs: int
    seed: int
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "rmsprop"
    data_fraction: float = 1.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.data_fraction <= 1.0:
            raise ValueError("data_fraction must be in (0, 1]")
        if self.dataset not in NUM_CLASSES:
            raise ValueError(f"unknown dataset '{self.dataset}'")
        if self.optimizer not in ("rmsprop", "sgd", "adam"):
            raise ValueError(f"unknown optimizer '{self.optimizer}'")


def _make_optimizer(model: nn.Module, job: TrainJob) -> torch.optim.Optimizer:
    if job.optimizer == "rmsprop":
        return torch.optim.RMSprop(model.parameters(), lr=job.learning_rate)
    if job.optimizer == "adam":
        return torch.optim.Adam(model.parameters(), lr=job.learning_rate)
    return torch.optim.SGD(model.parameters(), lr=job.learning_rate, momentum=0.9)


def evaluate(model: nn.Module, images: torch.Tensor,
             labels: torch.Tensor, batch_size: int = 512) -> tuple[float, float]:
    """(accuracy, mean loss) over a held-out split."""
    criterion = nn.CrossEntropyLoss(reduction="sum")
    model.eval()
    correct = 0
    loss_sum = 0.0
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            batch = images[start:start + batch_size]
            target = labels[start:start + batch_size]
            logits = model(batch)
            loss_sum += float(criterion(logits, target))
            correct += int((logits.argmax(dim=1) == target).sum())
    return correct / len(images), loss_sum / len(images)


def train_eval(
    model: nn.Module,
    job: TrainJob,
    train_data: tuple[torch.Tensor, torch.Tensor],
    test_data: tuple[torch.Tensor, torch.Tensor],
) -> dict:
    """Train on a seeded fraction of the training split, score on the test split.

    Returns the metrics document the reporting tool ingests. Raises
    TrainingDiverged (with epoch/loss diagnostics) on non-finite loss.
    """
    torch.manual_seed(job.seed)
    images, labels = train_data
    picked = subsample(len(images), job.data_fraction, job.seed)
    images, labels = images[picked], labels[picked]

    optimizer = _make_optimizer(model, job)
    criterion = nn.CrossEntropyLoss()
    shuffler = torch.Generator().manual_seed(job.seed)

    final_epoch_loss = math.nan
    for epoch in range(job.epochs):
        model.train()
        order = torch.randperm(len(images), generator=shuffler)
        losses = []
        for start in range(0, len(order), job.batch_size):
            batch_idx = order[start:start + job.batch_size]
            optimizer.zero_grad()
            loss = criterion(model(images[batch_idx]), labels[batch_idx])
            loss.backward()
            optimizer.step()
            value = loss.detach().item()
            if not math.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss {value} in epoch {epoch + 1}, "
                    f"batch {start // job.batch_size + 1} "
                    f"(optimizer={job.optimizer}, lr={job.learning_rate})")
            losses.append(value)
        final_epoch_loss = sum(losses) / len(losses)

    accuracy, _ = evaluate(model, *test_data)
    return {
        "arch": Path(job.arch_path).stem,
        "dataset": job.dataset,
        "epochs": job.epochs,
        "accuracy": accuracy,
        "loss": final_epoch_loss,
    }


def validate_metrics(doc: dict) -> None:
    """Check a metrics document against the reporting tool's ingestion schema."""
    missing = [k for k in METRIC_FIELDS if k not in doc]
    if missing:
        raise ValueError(f"metrics document missing fields: {missing}")
    if not isinstance(doc["arch"], str) or not isinstance(doc["dataset"], str):
        raise ValueError("arch and dataset must be strings")
    if not isinstance(doc["epochs"], int) or doc["epochs"] < 0:
        raise ValueError("epochs must be a non-negative integer")
    if not 0.0 <= doc["accuracy"] <= 1.0:
        raise ValueError(f"accuracy {doc['accuracy']} outside [0, 1]")
    if not math.isfinite(doc["loss"]):
        raise ValueError("loss must be finite")
