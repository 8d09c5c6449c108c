"""Histograms of perturbation values in pixel space and per DCT frequency."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..attack import PIXEL_MAX
from ..blockdct import forward_dct


@dataclass
class HistogramSpec:
    domain: str
    bin_edges: np.ndarray
    counts: np.ndarray
    std: float
    bounds: tuple | None = None

    @property
    def total(self):
        return int(self.counts.sum())


def _histogram(values, bins, lo=None, hi=None):
    values = np.ravel(values)
    vmin, vmax = float(values.min()), float(values.max())
    lo = vmin if lo is None else min(lo, vmin)
    hi = vmax if hi is None else max(hi, vmax)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return edges, counts


def spatial_histogram(p, bins=51):
    """Pixel-domain histogram on the [0, 1] image scale (code values / 255)."""
    values = p.spatial() / PIXEL_MAX
    bound = None
    if p.domain == "spatial":
        bound = (-p.epsilon / PIXEL_MAX, p.epsilon / PIXEL_MAX)
    lo, hi = bound if bound else (None, None)
    edges, counts = _histogram(values, bins, lo, hi)
    return HistogramSpec("spatial", edges, counts, float(np.std(values)), bound)


def band_histogram(p, k1, k2, bins=51):
    """Histogram of DCT coefficient (k1, k2) over all blocks and channels."""
    if not (0 <= k1 < 8 and 0 <= k2 < 8):
        raise ValueError(f"frequency index ({k1}, {k2}) outside 0..7")
    stack = p.values if p.domain == "dct" else forward_dct(p.spatial())
    values = stack.coefficient(k1, k2)
    bound = None
    if p.domain == "dct":
        t = float(p.thresholds.thresholds[k1, k2])
        bound = (-t, t)
    lo, hi = bound if bound and bound[1] > 0 else (None, None)
    edges, counts = _histogram(values, bins, lo, hi)
    return HistogramSpec(f"band:{k1},{k2}", edges, counts, float(np.std(values)), bound)


def write_histogram(spec, path, **metadata):
    """Write ``bin_low,bin_high,count`` CSV plus a ``.txt`` sidecar with std and metadata."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_low", "bin_high", "count"])
        for lo, hi, n in zip(spec.bin_edges[:-1], spec.bin_edges[1:], spec.counts):
            w.writerow([repr(float(lo)), repr(float(hi)), int(n)])
    side = path.with_suffix(".txt")
    lines = [f"domain: {spec.domain}", f"std: {spec.std!r}", f"total: {spec.total}"]
    if spec.bounds is not None:
        lines.append(f"bounds: {spec.bounds[0]!r} {spec.bounds[1]!r}")
    lines += [f"{k}: {v}" for k, v in sorted(metadata.items())]
    side.write_text("\n".join(lines) + "\n")
    return path, side
