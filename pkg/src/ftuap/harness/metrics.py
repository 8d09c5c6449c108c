from dataclasses import dataclass

import numpy as np

from ..attack import apply
from ..tinynet.layers import softmax


@dataclass
class FoolingReport:
    fooling_rate: float
    top1_accuracy: float
    n: int
    pairs: list  # (clean label, perturbed label, clean conf, perturbed conf)
    clean_accuracy: float = float("nan")

    def summary(self):
        return (
            f"n={self.n} fooling_rate={self.fooling_rate:.4f} "
            f"top1={self.top1_accuracy:.4f} (clean top1={self.clean_accuracy:.4f})"
        )

    def as_dict(self):
        return {
            "n": self.n,
            "fooling_rate": self.fooling_rate,
            "top1_accuracy": self.top1_accuracy,
            "clean_accuracy": self.clean_accuracy,
        }


def _labels_and_conf(c, images):
    probs = softmax(c.logits(images))
    labels = np.argmax(probs, axis=-1)
    return labels, probs[np.arange(len(labels)), labels]


def fooling_rate(c, p, data):
    """Fraction of images whose predicted label changes under ``p``.

    Measured against the classifier's own clean predictions; top-1
    accuracy of the perturbed images against ground truth is reported
    alongside.
    """
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if tuple(p.shape) != tuple(c.input_shape):
        raise ValueError(f"perturbation shape {p.shape} does not match classifier {c.input_shape}")
    clean, clean_conf = _labels_and_conf(c, data.images)
    pert, pert_conf = _labels_and_conf(c, apply(p, data.images))
    flips = int(np.count_nonzero(clean != pert))
    pairs = [
        (int(a), int(b), float(ca), float(cb))
        for a, b, ca, cb in zip(clean, pert, clean_conf, pert_conf)
    ]
    return FoolingReport(
        fooling_rate=flips / len(data),
        top1_accuracy=float(np.mean(pert == data.labels)),
        n=len(data),
        pairs=pairs,
        clean_accuracy=float(np.mean(clean == data.labels)),
    )


def transfer_matrix(models, perts, data):
    """Entry (i, j): fooling rate of the perturbation computed on model i, evaluated on model j."""
    if len(models) != len(perts):
        raise ValueError("need exactly one perturbation per source model")
    out = np.zeros((len(perts), len(models)))
    for i, p in enumerate(perts):
        for j, m in enumerate(models):
            out[i, j] = fooling_rate(m, p, data).fooling_rate
    return out
