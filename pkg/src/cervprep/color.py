"""sRGB (D65) to CIE XYZ to CIELAB, and the a/b chromaticity distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imagecore import as_rgb8

# IEC 61966-2-1 primaries, D65 white, 2 degree observer
SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
# white point taken as the matrix row sums so that (255, 255, 255) lands exactly on L=100, a=b=0
D65_WHITE = SRGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0


@dataclass(frozen=True)
class LabColor:
    L: float
    a: float
    b: float


@dataclass(frozen=True)
class LabImage:
    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.L.shape

    def features(self, use_lightness: bool = False) -> np.ndarray:
        """Per-pixel feature rows in row-major order: (a, b) or (L, a, b)."""
        planes = (self.L, self.a, self.b) if use_lightness else (self.a, self.b)
        return np.stack([p.ravel() for p in planes], axis=1)


def srgb_linearize(v):
    """Inverse sRGB companding of values in [0, 1]."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def _lab_f(t):
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3 * _DELTA**2) + 4.0 / 29.0)


def _xyz_to_lab(xyz):
    fx, fy, fz = (_lab_f(xyz[..., i] / D65_WHITE[i]) for i in range(3))
    return 116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)


# every byte value linearized once; the per-pixel path is a table lookup
_LINEAR_LUT = srgb_linearize(np.arange(256) / 255.0)


def srgb_to_lab(r: int, g: int, b: int) -> LabColor:
    rgb = _LINEAR_LUT[np.array([r, g, b], dtype=np.intp)]
    L, a, bb = _xyz_to_lab(SRGB_TO_XYZ @ rgb)
    return LabColor(float(L), float(a), float(bb))


def rgb_to_lab_image(image) -> LabImage:
    arr = as_rgb8(image)
    linear = _LINEAR_LUT[arr]
    xyz = linear @ SRGB_TO_XYZ.T
    L, a, b = _xyz_to_lab(xyz)
    return LabImage(L=L, a=a, b=b)


def delta_ab(c1: LabColor, c2: LabColor) -> float:
    """Euclidean distance in the (a, b) plane; lightness is ignored."""
    return math.hypot(c1.a - c2.a, c1.b - c2.b)
