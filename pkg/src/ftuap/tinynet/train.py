import logging
from dataclasses import dataclass

import numpy as np

from . import layers
from .model import Classifier, predict_labels

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch, step, loss):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, step {step}")
        self.epoch, self.step, self.loss = epoch, step, loss


@dataclass
class TrainConfig:
    arch: str = "a"
    epochs: int = 8
    learning_rate: float = 2e-3
    batch_size: int = 32
    seed: int = 42
    width: object = None
    noise_std: float = 0.0  # Gaussian augmentation, code values


DEFAULT_CONFIGS = {
    "a": TrainConfig(arch="a", epochs=10, learning_rate=2e-3, noise_std=20.0),
    "b": TrainConfig(arch="b", epochs=30, learning_rate=1e-3, width=256, noise_std=30.0),
}


def train(dataset, config=None):
    """Fit a classifier with Adam on mean cross-entropy.

    Deterministic given ``config.seed`` (initialization and batch order).
    """
    config = config or DEFAULT_CONFIGS["a"]
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(config.seed)
    model = Classifier.initialize(
        config.arch, dataset.input_shape, dataset.num_classes,
        seed=int(rng.integers(2**31)), width=config.width,
    )
    m = {k: np.zeros_like(v) for k, v in model.params.items()}
    v = {k: np.zeros_like(v) for k, v in model.params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0
    n = len(dataset)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            batch = dataset.images[idx]
            if config.noise_std > 0:
                batch = batch + rng.normal(0.0, config.noise_std, batch.shape)
            logits, cache = model.forward(batch)
            loss, glogits = layers.cross_entropy(logits, dataset.labels[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, step, loss)
            grads, _ = model.backward(cache, glogits)
            t += 1
            lr_t = config.learning_rate * np.sqrt(1 - beta2**t) / (1 - beta1**t)
            for k, g in grads.items():
                m[k] = beta1 * m[k] + (1 - beta1) * g
                v[k] = beta2 * v[k] + (1 - beta2) * g * g
                model.params[k] -= lr_t * m[k] / (np.sqrt(v[k]) + eps)
            total += loss * len(idx)
        log.info("arch %s epoch %d loss %.4f", config.arch, epoch + 1, total / n)
    return model


def accuracy(model, dataset):
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    return float(np.mean(predict_labels(model, dataset.images) == dataset.labels))
