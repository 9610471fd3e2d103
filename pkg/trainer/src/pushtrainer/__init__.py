"""Deep classifier trainer for the pushing-detection pipeline."""

__version__ = "0.1.0"

from .model import PushingClassifier
from .train import TrainConfig, train

__all__ = ["PushingClassifier", "TrainConfig", "train", "__version__"]
