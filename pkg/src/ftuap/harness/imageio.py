"""Netpbm raster I/O (PGM/PPM, plain and binary) and dataset directories.

A dataset directory holds ``meta.json`` and one subdirectory per split,
each with ``labels.csv`` (``file,label``) next to the image files.
"""

import csv
import json
import re
from pathlib import Path

import numpy as np

from ..blockdct import BLOCK
from ..tinynet.data import LabeledDataset

_MAGIC = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}


def _check_dims(h, w, path):
    if h % BLOCK or w % BLOCK:
        raise ValueError(f"{path}: dimensions {h}x{w} are not multiples of {BLOCK}")


def _tokens(data, count, start):
    # header tokens, skipping '#' comments
    out = []
    pos = start
    pat = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)")
    for _ in range(count):
        m = pat.match(data, pos)
        if not m:
            raise ValueError("truncated netpbm header")
        out.append(m.group(2))
        pos = m.end()
    return out, pos


def load_image(path):
    """Read a PGM/PPM file into a float64 (H, W, C) array of code values."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        return _load_png(path)
    data = path.read_bytes()
    magic = data[:2]
    if magic not in _MAGIC:
        raise ValueError(f"{path}: unsupported format (magic {magic!r})")
    channels, binary = _MAGIC[magic]
    (w, h, maxval), pos = _tokens(data, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit images (maxval 255) are supported, got {maxval}")
    _check_dims(h, w, path)
    n = h * w * channels
    if binary:
        raw = np.frombuffer(data, dtype=np.uint8, count=n, offset=pos + 1)
    else:
        raw = np.array(data[pos:].split()[:n], dtype=np.int64)
        if raw.size != n:
            raise ValueError(f"{path}: expected {n} samples, found {raw.size}")
    return raw.reshape(h, w, channels).astype(np.float64)


def save_image(path, img, plain=False):
    """Write an (H, W) or (H, W, 1|3) image; values are rounded and clipped to 0..255."""
    path = Path(path)
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    h, w, c = arr.shape
    if c not in (1, 3):
        raise ValueError(f"unsupported channel count {c}")
    _check_dims(h, w, path)
    q = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    if path.suffix.lower() == ".png":
        return _save_png(path, q)
    magic = {(1, False): "P2", (3, False): "P3", (1, True): "P5", (3, True): "P6"}[(c, not plain)]
    header = f"{magic}\n{w} {h}\n255\n".encode()
    if plain:
        body = "\n".join(" ".join(str(v) for v in row) for row in q.reshape(h, w * c)).encode() + b"\n"
    else:
        body = q.tobytes()
    path.write_bytes(header + body)
    return path


def _load_png(path):
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise ValueError("PNG support needs Pillow (pip install ftuap[png])") from exc
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB") if im.mode not in ("L", "RGB") else im)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    _check_dims(arr.shape[0], arr.shape[1], path)
    return arr.astype(np.float64)


def _save_png(path, q):
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise ValueError("PNG support needs Pillow (pip install ftuap[png])") from exc
    Image.fromarray(q[:, :, 0] if q.shape[2] == 1 else q).save(path)
    return path


def save_dataset(root, splits, plain=False):
    """Write ``{split_name: LabeledDataset}`` under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    num_classes = None
    for name, ds in splits.items():
        num_classes = ds.num_classes
        d = root / name
        d.mkdir(exist_ok=True)
        ext = ".pgm" if ds.images.shape[-1] == 1 else ".ppm"
        with (d / "labels.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["file", "label"])
            for i, (img, y) in enumerate(zip(ds.images, ds.labels)):
                fname = f"{i:05d}{ext}"
                save_image(d / fname, img, plain=plain)
                w.writerow([fname, int(y)])
    (root / "meta.json").write_text(
        json.dumps({"num_classes": num_classes, "splits": sorted(splits)}, indent=2) + "\n"
    )


def load_dataset(root, split):
    root = Path(root)
    meta = json.loads((root / "meta.json").read_text())
    d = root / split
    if not d.is_dir():
        raise ValueError(f"{root}: no split named {split!r}")
    images, labels = [], []
    with (d / "labels.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            images.append(load_image(d / row["file"]))
            labels.append(int(row["label"]))
    if not images:
        raise ValueError(f"{d}: empty split")
    return LabeledDataset(np.stack(images), np.array(labels), meta["num_classes"], split)
