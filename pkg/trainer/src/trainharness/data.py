"""CIFAR loading with deterministic subsampling, plus synthetic smoke data.

Real datasets come through torchvision's on-disk format (``--data-dir`` or
$TRAINHARNESS_DATA_DIR; downloading only when explicitly allowed). The
synthetic generator exists solely so the training loop itself can be
exercised where no dataset is available — it makes no claim about CIFAR
accuracy and is never selectable from the CLI.
"""

from __future__ import annotations

import numpy as np
import torch

NUM_CLASSES = {"cifar10": 10, "cifar100": 100}


class DatasetUnavailableError(RuntimeError):
    pass


def load_cifar(dataset: str, data_dir: str, train: bool,
               download: bool = False) -> tuple[torch.Tensor, torch.Tensor]:
    """Images as float32 NCHW in [0, 1] and integer labels."""
    if dataset not in NUM_CLASSES:
        raise ValueError(f"unknown dataset '{dataset}'")
    import torchvision  # deferred: model building must not require it

    cls = (torchvision.datasets.CIFAR10 if dataset == "cifar10"
           else torchvision.datasets.CIFAR100)
    try:
        raw = cls(root=data_dir, train=train, download=download)
    except Exception as err:
        raise DatasetUnavailableError(
            f"{dataset} not available under '{data_dir}' "
            f"(download={'on' if download else 'off'}): {err}"
        ) from None
    images = torch.from_numpy(raw.data).permute(0, 3, 1, 2).float() / 255.0
    labels = torch.tensor(raw.targets, dtype=torch.long)
    return images, labels


def subsample(count: int, fraction: float, seed: int) -> np.ndarray:
    """Deterministic index subset: a seeded permutation's leading slice."""
    take = max(1, int(round(count * fraction)))
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.permutation(count)[:take]


def synthetic_dataset(num_classes: int, count: int, seed: int,
                      signature_seed: int = 0) -> tuple[torch.Tensor, torch.Tensor]:
    """Class-conditional noise images, balanced labels. Smoke tests only.

    The per-class signature patterns come from ``signature_seed`` so that a
    train and a test split drawn with different ``seed`` values share classes.
    """
    signature_rng = np.random.Generator(np.random.PCG64(signature_seed))
    base = signature_rng.normal(0.5, 0.2, size=(num_classes, 3, 32, 32))
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.arange(count) % num_classes
    noise = rng.normal(0.0, 0.08, size=(count, 3, 32, 32))
    images = np.clip(base[labels] + noise, 0.0, 1.0).astype(np.float32)
    return torch.from_numpy(images), torch.from_numpy(labels).long()
