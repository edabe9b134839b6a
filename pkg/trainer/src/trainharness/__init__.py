"""train-harness: builds and smoke-trains architectures exported by prunekit."""

__version__ = "0.1.0"

from .arch import ArchDoc, ArchitectureError, UnsupportedLayerError, load_arch
from .data import DatasetUnavailableError, load_cifar, subsample, synthetic_dataset
from .model import ArchModel, build_model, parameter_count
from .run import TrainJob, TrainingDiverged, evaluate, train_eval, validate_metrics

__all__ = [
    "ArchDoc", "ArchModel", "ArchitectureError", "DatasetUnavailableError",
    "TrainJob", "TrainingDiverged", "UnsupportedLayerError", "build_model",
    "evaluate", "load_arch", "load_cifar", "parameter_count", "subsample",
    "synthetic_dataset", "train_eval", "validate_metrics",
]
