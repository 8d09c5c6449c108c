from .data import LabeledDataset, bundled_splits, make_dataset
from .model import Classifier, input_gradient, predict, predict_labels
from .train import TrainConfig, TrainingDiverged, accuracy, train

__all__ = [
    "Classifier", "LabeledDataset", "TrainConfig", "TrainingDiverged",
    "accuracy", "bundled_splits", "input_gradient", "make_dataset",
    "predict", "predict_labels", "train",
]
