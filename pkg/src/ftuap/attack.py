"""Universal perturbations: spatial l-inf UAP and frequency-tuned FTUAP.

Both attacks walk the training images, and whenever the current universal
perturbation leaves an image's prediction unchanged they add a DeepFool
step computed on the perturbed image, then project back onto the feasible
set. UAP accumulates and clamps in pixel space; FTUAP maps each step into
the block-DCT domain and clamps every coefficient to its JND threshold.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .bands import BandMask, mask_from_regions
from .blockdct import DctStack, forward_dct, inverse_dct
from .jnd import JndThresholdMatrix, jnd_matrix
from .tinynet.layers import cross_entropy
from .tinynet.model import predict_labels

log = logging.getLogger(__name__)

PIXEL_MAX = 255.0


class DegenerateGradient(ArithmeticError):
    """Every class has the same input gradient as the current label."""


class AttackDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class Perturbation:
    """A universal additive perturbation.

    ``values`` is an (H, W, C) array for the spatial domain or a DctStack
    for the dct domain. Exactly one budget is set: ``epsilon`` (spatial)
    or ``thresholds`` (dct).
    """

    domain: str
    values: object
    epsilon: float | None = None
    thresholds: JndThresholdMatrix | None = None
    provenance: str = ""

    def __post_init__(self):
        if self.domain == "spatial":
            if not isinstance(self.values, np.ndarray) or self.values.ndim != 3:
                raise ValueError("spatial perturbation values must be an (H, W, C) array")
            if self.epsilon is None or self.thresholds is not None:
                raise ValueError("spatial perturbation needs epsilon and no thresholds")
        elif self.domain == "dct":
            if not isinstance(self.values, DctStack):
                raise ValueError("dct perturbation values must be a DctStack")
            if self.thresholds is None or self.epsilon is not None:
                raise ValueError("dct perturbation needs thresholds and no epsilon")
        else:
            raise ValueError(f"unknown domain {self.domain!r}")

    @property
    def shape(self):
        if self.domain == "spatial":
            return self.values.shape
        return self.values.image_shape

    def spatial(self):
        """The perturbation as an (H, W, C) pixel-domain array."""
        if self.domain == "spatial":
            return self.values
        return inverse_dct(self.values)


@dataclass
class AttackConfig:
    method: str = "ftuap"
    bands: BandMask = field(default_factory=lambda: mask_from_regions({"low", "middle", "high"}))
    epsilon: float = 10.0
    lam: float = 2.0
    epochs: int = 5
    overshoot: float = 0.02
    max_inner_iters: int = 50
    inner: str = "deepfool"
    sign_step: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("uap", "ftuap"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.inner not in ("deepfool", "sign"):
            raise ValueError(f"unknown inner step {self.inner!r}")
        if self.epsilon < 0 or self.lam < 0 or self.epochs < 0:
            raise ValueError("epsilon, lambda and epochs must be non-negative")

    def describe(self):
        d = asdict(self)
        d["bands"] = self.bands.name if self.method == "ftuap" else None
        if self.method == "uap":
            d.pop("lam")
        else:
            d.pop("epsilon")
        return d

    def digest(self):
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class DeepFoolStep:
    delta: np.ndarray
    flipped: bool
    iterations: int
    label: int


def deepfool_step(c, img, overshoot=0.02, max_iter=50):
    """Approximately minimal perturbation moving ``img`` off its predicted class.

    ``c`` must provide ``jacobian(img) -> (logits, d logits / d img)``.
    Each iteration linearizes every class boundary, steps to the nearest
    one and stops once the overshot accumulated step changes the label.
    """
    img = np.asarray(img, dtype=np.float64)
    logits, jac = c.jacobian(img)
    label = int(np.argmax(logits))
    r_tot = np.zeros_like(img)
    for it in range(max_iter):
        best, step = np.inf, None
        for other in range(len(logits)):
            if other == label:
                continue
            w = jac[other] - jac[label]
            norm_sq = float(np.sum(w * w))
            if norm_sq == 0.0:
                continue
            dist = abs(logits[other] - logits[label]) / np.sqrt(norm_sq)
            if dist < best:
                best = dist
                step = abs(logits[other] - logits[label]) / norm_sq * w
        if step is None:
            raise DegenerateGradient("all class gradients coincide with the current label's")
        r_tot = r_tot + step
        logits, jac = c.jacobian(img + (1 + overshoot) * r_tot)
        if int(np.argmax(logits)) != label:
            return DeepFoolStep((1 + overshoot) * r_tot, True, it + 1, label)
    return DeepFoolStep((1 + overshoot) * r_tot, False, max_iter, label)


def sign_step(c, img, step=1.0):
    """Single gradient-sign ascent step on the cross-entropy of the current label."""
    logits, jac = c.jacobian(img)
    label = int(np.argmax(logits))
    _, g = cross_entropy(logits[None], np.array([label]))
    grad = np.tensordot(g[0], jac, axes=1)
    return DeepFoolStep(step * np.sign(grad), False, 1, label)


def project_spatial(delta, epsilon):
    return np.clip(delta, -epsilon, epsilon)


def project_dct(stack, thr):
    t = thr.flat
    blocks = np.where(t == 0.0, 0.0, np.clip(stack.blocks, -t, t))
    return DctStack(blocks, stack.grid)


def apply(p, img):
    """Add ``p`` to one image (H, W, C) or a batch (N, H, W, C), clamped to [0, 255]."""
    img = np.asarray(img, dtype=np.float64)
    delta = p.spatial()
    if img.ndim == 2:
        img = img[:, :, None]
    if img.shape[-3:] != delta.shape:
        raise ValueError(f"image shape {img.shape[-3:]} does not match perturbation {delta.shape}")
    return np.clip(img + delta, 0.0, PIXEL_MAX)


def zero_perturbation(shape, method="uap", epsilon=10.0, thresholds=None):
    h, w, ch = shape
    if method == "uap":
        return Perturbation("spatial", np.zeros(shape), epsilon=epsilon)
    thresholds = thresholds if thresholds is not None else jnd_matrix()
    stack = DctStack(np.zeros((ch, (h // 8) * (w // 8), 64)), (h // 8, w // 8))
    return Perturbation("dct", stack, thresholds=thresholds)


def random_sign_perturbation(thresholds, shape, seed=0):
    """DCT perturbation with every coefficient at +/- its threshold, random sign."""
    h, w, ch = shape
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(ch, (h // 8) * (w // 8), 64))
    stack = DctStack(signs * thresholds.flat, (h // 8, w // 8))
    return Perturbation("dct", stack, thresholds=thresholds, provenance=f"random-sign:{seed}")


@dataclass
class AttackResult:
    perturbation: Perturbation
    fooling_trace: list


def _fooling_rate(c, images, clean, delta):
    pert = np.clip(images + delta, 0.0, PIXEL_MAX)
    return float(np.mean(predict_labels(c, pert) != clean))


def train_universal(c, data, cfg):
    """Accumulate-and-project universal perturbation training.

    Returns an AttackResult holding the final Perturbation and the
    training-set fooling rate after every epoch.
    """
    if tuple(data.input_shape) != tuple(c.input_shape):
        raise ValueError(f"dataset shape {data.input_shape} does not match classifier {c.input_shape}")
    shape = tuple(c.input_shape)
    rng = np.random.default_rng(cfg.seed)
    images = data.images
    clean = predict_labels(c, images)
    ftuap = cfg.method == "ftuap"
    thr = jnd_matrix(cfg.lam, mask=cfg.bands) if ftuap else None
    p = zero_perturbation(shape, cfg.method, cfg.epsilon, thr)
    delta = p.spatial().copy()
    delta_x = p.values if ftuap else None
    trace = []

    for epoch in range(cfg.epochs):
        updates = 0
        for i in rng.permutation(len(images)):
            x = np.clip(images[i] + delta, 0.0, PIXEL_MAX)
            if int(np.argmax(c.logits(x))) != clean[i]:
                continue
            if cfg.inner == "deepfool":
                step = deepfool_step(c, x, cfg.overshoot, cfg.max_inner_iters).delta
            else:
                step = sign_step(c, x, cfg.sign_step).delta
            if not np.all(np.isfinite(step)):
                raise AttackDiverged(
                    f"non-finite update at epoch {epoch}, image {i}; "
                    f"max|delta|={np.abs(delta).max():.4g}"
                )
            if ftuap:
                dx = forward_dct(step)
                delta_x = project_dct(DctStack(delta_x.blocks + dx.blocks, delta_x.grid), thr)
                delta = inverse_dct(delta_x)
            else:
                delta = project_spatial(delta + step, cfg.epsilon)
            updates += 1
        fr = _fooling_rate(c, images, clean, delta)
        trace.append(fr)
        log.info("%s epoch %d: %d updates, train fooling rate %.3f", cfg.method, epoch + 1, updates, fr)

    if ftuap:
        final = Perturbation("dct", delta_x, thresholds=thr, provenance=cfg.digest())
    else:
        final = Perturbation("spatial", delta, epsilon=cfg.epsilon, provenance=cfg.digest())
    return AttackResult(final, trace)
