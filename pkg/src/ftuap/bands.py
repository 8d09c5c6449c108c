"""Slanting frequency bands of the 8x8 DCT and masks built from them.

Band i holds every (k1, k2) with k1 + k2 == i, 0 <= i <= 14. Bands 0-3
form the low region, 4-10 the middle and 11-14 the high region.
"""

from dataclasses import dataclass, field

import numpy as np

NUM_BANDS = 15

REGION_BANDS = {
    "low": range(0, 4),
    "middle": range(4, 11),
    "high": range(11, 15),
}

_REGION_NAMES = {
    frozenset({"low"}): "LF",
    frozenset({"middle"}): "MF",
    frozenset({"high"}): "HF",
    frozenset({"low", "middle"}): "LMF",
    frozenset({"low", "high"}): "LHF",
    frozenset({"middle", "high"}): "MHF",
    frozenset({"low", "middle", "high"}): "FF",
}
_NAME_REGIONS = {name.lower(): regions for regions, name in _REGION_NAMES.items()}

ALL_INDICES = frozenset((k1, k2) for k1 in range(8) for k2 in range(8))


def band_index(k1, k2):
    return k1 + k2


def region_of_band(i):
    for name, rng in REGION_BANDS.items():
        if i in rng:
            return name
    raise ValueError(f"band index {i} outside [0, {NUM_BANDS - 1}]")


@dataclass(frozen=True)
class BandPartition:
    band_of: np.ndarray
    regions: dict

    def band(self, i):
        return frozenset(zip(*np.nonzero(self.band_of == i)))

    def region_of(self, k1, k2):
        return region_of_band(int(self.band_of[k1, k2]))


def build_partition():
    k1, k2 = np.indices((8, 8))
    band_of = k1 + k2
    band_of.setflags(write=False)
    regions = {
        name: frozenset((a, b) for a, b in ALL_INDICES if band_of[a, b] in rng)
        for name, rng in REGION_BANDS.items()
    }
    return BandPartition(band_of=band_of, regions=regions)


@dataclass(frozen=True)
class BandMask:
    """Set of active frequency indices (k1, k2) plus a label such as ``MHF``."""

    selected: frozenset
    name: str = field(default="custom")

    def __post_init__(self):
        bad = set(self.selected) - ALL_INDICES
        if bad:
            raise ValueError(f"frequency indices out of range: {sorted(bad)}")

    @property
    def array(self):
        """Boolean (8, 8) array, True where the frequency is active."""
        out = np.zeros((8, 8), dtype=bool)
        for k1, k2 in self.selected:
            out[k1, k2] = True
        return out

    def __len__(self):
        return len(self.selected)


def mask_from_regions(regions):
    regions = frozenset(r.lower() for r in regions)
    if not regions:
        raise ValueError("at least one region is required")
    unknown = regions - set(REGION_BANDS)
    if unknown:
        raise ValueError(f"unknown regions: {sorted(unknown)}")
    part = build_partition()
    selected = frozenset().union(*(part.regions[r] for r in regions))
    return BandMask(selected=selected, name=_REGION_NAMES[regions])


def mask_from_bands(bands):
    """Mask activating the listed slanting bands (arbitrary ablations)."""
    bands = sorted(set(int(b) for b in bands))
    if not bands:
        raise ValueError("at least one band is required")
    for b in bands:
        if not 0 <= b < NUM_BANDS:
            raise ValueError(f"band index {b} outside [0, {NUM_BANDS - 1}]")
    selected = frozenset((a, b) for a, b in ALL_INDICES if a + b in bands)
    return BandMask(selected=selected, name="custom:" + ",".join(map(str, bands)))


def parse_band_spec(spec):
    """Parse ``lf|mf|hf|lmf|lhf|mhf|ff|custom:<i,j,...>`` into a BandMask."""
    text = spec.strip().lower()
    if text.startswith("custom:"):
        items = [s for s in text[len("custom:"):].split(",") if s.strip()]
        try:
            return mask_from_bands(int(s) for s in items)
        except ValueError as exc:
            raise ValueError(f"bad custom band list {spec!r}: {exc}") from None
    if text not in _NAME_REGIONS:
        raise ValueError(f"unknown band spec {spec!r}")
    return mask_from_regions(_NAME_REGIONS[text])


CANONICAL_MASKS = ("LF", "MF", "HF", "LMF", "LHF", "MHF", "FF")
