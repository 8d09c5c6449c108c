"""Procedural 10-class toy image set (32x32 grayscale glyphs and textures).

Every image is a class glyph with random position/phase, random
foreground and background levels, a faint fixed-phase grating whose
orientation encodes the class, and additive Gaussian noise, rounded to
8-bit code values so that PGM storage is lossless. The grating is a cue
both architectures can read; a small fraction of images pair it with
another class's glyph so the two architectures do not agree everywhere.
"""

from dataclasses import dataclass, field

import numpy as np

CLASS_NAMES = (
    "hstripes", "vstripes", "diag", "antidiag", "disk",
    "ring", "plus", "cross", "square", "checker",
)
NUM_CLASSES = len(CLASS_NAMES)
IMAGE_SIZE = 32

TRAIN_SIZE = 2000
VAL_SIZE = 500
NOISE_STD = 10.0
CONTRAST = (15.0, 30.0)
JITTER = 5.0
GRATING_AMP = 4.0
CONFLICT = 0.1


@dataclass
class LabeledDataset:
    images: np.ndarray  # (N, H, W, C) code values
    labels: np.ndarray  # (N,) int
    num_classes: int = NUM_CLASSES
    split: str = field(default="train")

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim == 3:
            self.images = self.images[..., None]
        if self.images.ndim != 4:
            raise ValueError(f"images must be (N, H, W, C), got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ValueError("images and labels differ in length")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("label outside [0, num_classes)")

    def __len__(self):
        return len(self.labels)

    @property
    def input_shape(self):
        return self.images.shape[1:]

    def subset(self, idx):
        return LabeledDataset(self.images[idx], self.labels[idx], self.num_classes, self.split)


def _pattern(label, rng, size=IMAGE_SIZE, jitter=JITTER):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cy, cx = size / 2 + rng.uniform(-jitter, jitter, 2)
    dy, dx = yy - cy, xx - cx
    period = rng.uniform(5.0, 8.0)
    phase = rng.uniform(0, 2 * np.pi)
    k = 2 * np.pi / period
    if label == 0:
        m = np.cos(k * yy + phase) > 0
    elif label == 1:
        m = np.cos(k * xx + phase) > 0
    elif label == 2:
        m = np.cos(k * (xx + yy) / np.sqrt(2) + phase) > 0
    elif label == 3:
        m = np.cos(k * (xx - yy) / np.sqrt(2) + phase) > 0
    elif label == 4:
        m = dx**2 + dy**2 <= rng.uniform(6, 10) ** 2
    elif label == 5:
        rad = np.sqrt(dx**2 + dy**2)
        r0 = rng.uniform(7, 11)
        m = np.abs(rad - r0) <= 1.6
    elif label == 6:
        arm, thick = rng.uniform(7, 11), rng.uniform(1.2, 2.2)
        m = ((np.abs(dx) <= thick) & (np.abs(dy) <= arm)) | ((np.abs(dy) <= thick) & (np.abs(dx) <= arm))
    elif label == 7:
        arm, thick = rng.uniform(7, 11), rng.uniform(1.2, 2.0)
        inside = (np.abs(dx) <= arm) & (np.abs(dy) <= arm)
        m = inside & ((np.abs(dx - dy) <= thick * 1.4) | (np.abs(dx + dy) <= thick * 1.4))
    elif label == 8:
        half, thick = rng.uniform(7, 11), 1.6
        cheb = np.maximum(np.abs(dx), np.abs(dy))
        m = np.abs(cheb - half) <= thick
    elif label == 9:
        cell = rng.uniform(3.0, 5.0)
        m = ((np.floor((yy + rng.uniform(0, cell)) / cell) + np.floor((xx + rng.uniform(0, cell)) / cell)) % 2) == 0
    else:
        raise ValueError(f"label {label} outside [0, {NUM_CLASSES})")
    return m.astype(np.float64)


def class_grating(label, size=IMAGE_SIZE):
    """Fixed-phase oriented cosine grating tied to ``label``, unit amplitude."""
    angle = np.pi * label / NUM_CLASSES
    freq = 0.18 + 0.02 * (label % 3)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    return np.cos(2 * np.pi * freq * (xx * np.cos(angle) + yy * np.sin(angle)))


def render(label, rng, size=IMAGE_SIZE, noise_std=NOISE_STD, contrast=CONTRAST, jitter=JITTER,
           grating=GRATING_AMP, glyph_label=None):
    bg = rng.uniform(60, 190)
    amp = rng.uniform(*contrast) * rng.choice([-1.0, 1.0])
    img = bg + amp * _pattern(label if glyph_label is None else glyph_label, rng, size, jitter)
    if grating:
        img = img + grating * class_grating(label, size)
    img = img + rng.normal(0, noise_std, img.shape)
    return np.clip(np.rint(img), 0, 255)


def make_dataset(n, seed, split="train", num_classes=NUM_CLASSES, noise_std=NOISE_STD,
                 contrast=CONTRAST, jitter=JITTER, grating=GRATING_AMP, conflict=CONFLICT):
    """Balanced dataset of ``n`` images, deterministic in ``seed``.

    A ``conflict`` fraction of images carry the glyph of a different class
    than their grating; the label always follows the grating.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % num_classes
    rng.shuffle(labels)
    images = []
    for y in labels:
        g = None  # glyph class, if different from the label
        if conflict and rng.random() < conflict:
            g = (int(y) + 1 + int(rng.integers(num_classes - 1))) % num_classes
        images.append(render(int(y), rng, noise_std=noise_std, contrast=contrast, jitter=jitter,
                             grating=grating, glyph_label=g))
    images = np.stack(images)
    return LabeledDataset(images[..., None], labels, num_classes, split)


def bundled_splits(seed=42):
    """The bundled (train, validation) pair used throughout the tests."""
    train = make_dataset(TRAIN_SIZE, seed, "train")
    val = make_dataset(VAL_SIZE, seed + 1_000_003, "validation")
    return train, val
