"""Luminance-based JND thresholds for the 8x8 DCT.

The contrast threshold of each DCT frequency comes from a parametric
contrast-sensitivity model (Ahumada & Peterson style) evaluated at a
single background luminance, the display luminance of code value 128.
Thresholds are converted to code-value units and scaled by a free
coefficient ``lam``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bands import BandMask


def pixel_angle(viewing_distance_cm=60.0, pixels_per_cm=31.5):
    """Visual angle in degrees subtended by one pixel."""
    return math.degrees(2.0 * math.atan(1.0 / (2.0 * pixels_per_cm * viewing_distance_cm)))


# 60 cm viewing distance at 31.5 px/cm, i.e. ~0.0303 degrees
DEFAULT_PIXEL_ANGLE = pixel_angle()


@dataclass(frozen=True)
class ViewingConditions:
    l_min: float = 0.0
    l_max: float = 175.0
    pixel_angle_x: float = DEFAULT_PIXEL_ANGLE
    pixel_angle_y: float = DEFAULT_PIXEL_ANGLE
    bit_scale: float = 255.0

    def __post_init__(self):
        if self.l_min < 0 or self.l_max < self.l_min:
            raise ValueError(f"need l_max >= l_min >= 0, got {self.l_min}, {self.l_max}")
        if self.pixel_angle_x <= 0 or self.pixel_angle_y <= 0:
            raise ValueError("pixel angles must be positive")
        if self.bit_scale <= 0:
            raise ValueError("bit_scale must be positive")

    @classmethod
    def from_geometry(cls, viewing_distance_cm=60.0, pixels_per_cm=31.5, **kwargs):
        w = pixel_angle(viewing_distance_cm, pixels_per_cm)
        return cls(pixel_angle_x=w, pixel_angle_y=w, **kwargs)


@dataclass(frozen=True)
class CsfModelParams:
    r: float = 0.7
    n_dct: int = 8
    l_t: float = 13.45
    s_0: float = 94.7
    alpha_t: float = 0.649
    f_0: float = 6.78
    alpha_f: float = 0.182
    l_f: float = 300.0
    k_0: float = 3.125
    alpha_k: float = 0.0706
    l_k: float = 300.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.r > 1:
            raise ValueError(f"r must lie in (0, 1], got {self.r}")


_VC = ViewingConditions()
_PARAMS = CsfModelParams()


def _check_index(k1, k2):
    if not (0 <= k1 < 8 and 0 <= k2 < 8):
        raise ValueError(f"frequency index ({k1}, {k2}) outside 0..7")


def radial_frequency(k1, k2, vc=_VC, p=_PARAMS):
    """Spatial frequency of DCT basis (k1, k2) in cycles/degree."""
    _check_index(k1, k2)
    return math.sqrt((k1 / vc.pixel_angle_x) ** 2 + (k2 / vc.pixel_angle_y) ** 2) / (2 * p.n_dct)


def spatial_frequency(k1, k2, vc=_VC, p=_PARAMS):
    """Return (frequency, orientation) of DCT basis (k1, k2).

    The orientation is undefined at DC and raises ValueError there.
    """
    f = radial_frequency(k1, k2, vc, p)
    if f == 0.0:
        raise ValueError("orientation is undefined for the DC term (0, 0)")
    ratio = 2 * radial_frequency(k1, 0, vc, p) * radial_frequency(0, k2, vc, p) / f**2
    # rounding can push the (k, k) ratio a hair above 1
    return f, math.asin(min(1.0, ratio))


def median_luminance(vc=_VC):
    """Display luminance of the mid-grey code value 128."""
    return vc.l_min + 128.0 * (vc.l_max - vc.l_min) / vc.bit_scale


def _luminance_terms(lum, p):
    if lum <= p.l_t:
        t_min = (lum / p.l_t) ** p.alpha_t * p.l_t / p.s_0
    else:
        t_min = lum / p.s_0
    f_min = p.f_0 * (lum / p.l_f) ** p.alpha_f if lum <= p.l_f else p.f_0
    k = p.k_0 * (lum / p.l_k) ** p.alpha_k if lum <= p.l_k else p.k_0
    return t_min, f_min, k


def contrast_threshold(k1, k2, lum, vc=_VC, p=_PARAMS):
    """Luminance-adjusted contrast threshold T(k1, k2) at background luminance ``lum``."""
    if lum <= 0:
        raise ValueError(f"luminance must be positive, got {lum}")
    _check_index(k1, k2)
    if k1 == 0 and k2 == 0:
        return min(contrast_threshold(0, 1, lum, vc, p), contrast_threshold(1, 0, lum, vc, p))
    t_min, f_min, k = _luminance_terms(lum, p)
    f, theta = spatial_frequency(k1, k2, vc, p)
    log_t = (
        math.log10(t_min / (p.r + (1 - p.r) * math.cos(theta) ** 2))
        + k * (math.log10(f) - math.log10(f_min)) ** 2
    )
    return 10.0**log_t


@dataclass(frozen=True)
class JndThresholdMatrix:
    """8x8 per-frequency bounds in code values, zero where masked."""

    thresholds: np.ndarray
    lam: float
    mask: BandMask | None = field(default=None)

    @property
    def masked(self):
        """Boolean (8, 8) array, True where a frequency was zeroed by the mask."""
        if self.mask is None:
            return np.zeros((8, 8), dtype=bool)
        return ~self.mask.array

    @property
    def flat(self):
        """Thresholds in flattened frequency order b = 8*k1 + k2."""
        return self.thresholds.reshape(64)


def jnd_matrix(lam=2.0, vc=_VC, p=_PARAMS, mask=None):
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    if vc.l_max <= vc.l_min:
        raise ValueError("display luminance range must be non-degenerate")
    lum = median_luminance(vc)
    scale = np.array([math.sqrt(1.0 / p.n_dct)] + [math.sqrt(2.0 / p.n_dct)] * 7)
    t = np.empty((8, 8))
    for k1 in range(8):
        for k2 in range(8):
            t[k1, k2] = vc.bit_scale * contrast_threshold(k1, k2, lum, vc, p) / (
                2 * scale[k1] * scale[k2] * (vc.l_max - vc.l_min)
            )
    t = lam * t
    if mask is not None:
        t = np.where(mask.array, t, 0.0)
    t.setflags(write=False)
    return JndThresholdMatrix(thresholds=t, lam=float(lam), mask=mask)


def format_table(thr, precision=2):
    """Aligned text rendering of an 8x8 threshold matrix."""
    rows = [" ".join(f"{v:8.{precision}f}" for v in row) for row in thr.thresholds]
    return "\n".join(rows)


def to_csv_rows(thr):
    yield ["k1", "k2", "threshold"]
    for k1 in range(8):
        for k2 in range(8):
            yield [k1, k2, repr(float(thr.thresholds[k1, k2]))]
