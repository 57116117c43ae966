"""Specular highlight detection, dilation and boundary extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imagecore import as_mask, as_rgb8

SHAPES = ("square", "disk")


@dataclass(frozen=True)
class StructuringElement:
    shape: str = "square"
    radius: int = 1

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown structuring element shape {self.shape!r}")
        if int(self.radius) < 1:
            raise ValueError("structuring element radius must be >= 1")

    def footprint(self) -> np.ndarray:
        r = int(self.radius)
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
        if self.shape == "square":
            return np.ones_like(xx, dtype=bool)
        return xx * xx + yy * yy <= r * r


@dataclass(frozen=True)
class SpecularConfig:
    threshold: int = 240
    se: StructuringElement = field(default_factory=StructuringElement)

    def __post_init__(self):
        if not 1 <= int(self.threshold) <= 255:
            raise ValueError(f"threshold must be in [1, 255], got {self.threshold}")


def detect_specular(image, cfg: SpecularConfig | None = None) -> np.ndarray:
    """True where all three channels reach the white threshold."""
    cfg = cfg or SpecularConfig()
    arr = as_rgb8(image)
    t = int(cfg.threshold)
    return (arr[..., 0] >= t) & (arr[..., 1] >= t) & (arr[..., 2] >= t)


def dilate(mask, se: StructuringElement | None = None) -> np.ndarray:
    """Binary dilation; the footprint is clipped at the image border."""
    se = se or StructuringElement()
    src = as_mask(mask)
    h, w = src.shape
    fp = se.footprint()
    r = fp.shape[0] // 2
    padded = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
    padded[r : r + h, r : r + w] = src
    out = np.zeros_like(src)
    for dy, dx in zip(*np.nonzero(fp)):
        out |= padded[dy : dy + h, dx : dx + w]
    return out


def neighbors4(mask) -> np.ndarray:
    """True where at least one 4-neighbour is true."""
    m = as_mask(mask)
    out = np.zeros_like(m)
    out[1:, :] |= m[:-1, :]
    out[:-1, :] |= m[1:, :]
    out[:, 1:] |= m[:, :-1]
    out[:, :-1] |= m[:, 1:]
    return out


def boundary_ring(mask) -> np.ndarray:
    """Mask of the false pixels 4-adjacent to the true set."""
    m = as_mask(mask)
    return neighbors4(m) & ~m


def mask_boundary(mask) -> list[tuple[int, int]]:
    """Ring pixels as ``(x, y)`` pairs in row-major order."""
    ys, xs = np.nonzero(boundary_ring(mask))
    return [(int(x), int(y)) for y, x in zip(ys, xs)]
