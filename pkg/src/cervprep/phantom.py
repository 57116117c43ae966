"""Seeded synthetic cervigrams with ground truth.

A pink ellipse (the cervix) sits on a dark neutral background inside a darker
frame band; saturated white dots inside the ellipse play the specular
highlights. Gaussian noise is added everywhere except on the dots.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .imagecore import BBox, to_byte
from .roi import bbox_with_margin

WHITE = (255, 255, 255)
# semi-axes as fractions of width and height: the ellipse covers a bit under half the frame
DEFAULT_AXES = (0.39, 0.375)


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 640
    height: int = 480
    center: tuple[float, float] | None = None  # defaults to the image centre
    axes: tuple[float, float] | None = None  # semi-axes in pixels; defaults scale with the frame
    rotation: float = 0.0  # radians
    cervix_color: tuple[int, int, int] = (210, 140, 150)
    background_color: tuple[int, int, int] = (60, 55, 58)
    frame: bool = True
    frame_color: tuple[int, int, int] = (20, 20, 20)
    frame_fraction: float = 0.08  # band thickness as a fraction of the width
    n_speculars: int = 12
    specular_radius_range: tuple[int, int] = (2, 7)
    noise_sigma: float = 4.0
    # seeded perturbation of centre (fraction of size), axes (fraction) and rotation (x 0.25 rad)
    jitter: float = 0.05
    seed: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class PhantomTruth:
    clean_image: np.ndarray
    specular_mask: np.ndarray
    ellipse_mask: np.ndarray
    ellipse_bbox: BBox
    # the ellipse actually drawn after jitter: centre x, centre y, semi-axes, rotation
    ellipse: dict = field(default_factory=dict)


def ellipse_mask(width: int, height: int, cx: float, cy: float, a: float, b: float, theta: float) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    c, s = math.cos(theta), math.sin(theta)
    u = (dx * c + dy * s) / a
    v = (-dx * s + dy * c) / b
    return u * u + v * v <= 1.0


def _ellipse_extent(a: float, b: float, theta: float) -> tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    return math.sqrt((a * c) ** 2 + (b * s) ** 2), math.sqrt((a * s) ** 2 + (b * c) ** 2)


def generate_phantom(spec: PhantomSpec | None = None) -> tuple[np.ndarray, PhantomTruth]:
    spec = spec or PhantomSpec()
    w, h = int(spec.width), int(spec.height)
    if w < 8 or h < 8:
        raise ValueError("phantom must be at least 8x8")
    rng = np.random.default_rng(spec.seed)

    cx, cy = spec.center if spec.center is not None else ((w - 1) / 2.0, (h - 1) / 2.0)
    a, b = spec.axes if spec.axes is not None else (DEFAULT_AXES[0] * w, DEFAULT_AXES[1] * h)
    theta = spec.rotation
    if spec.jitter > 0:
        j = spec.jitter
        jx, jy, ja, jb, jr = rng.uniform(-1.0, 1.0, size=5)
        cx += 0.6 * j * w * jx
        cy += 0.6 * j * h * jy
        a *= 1.0 + 0.8 * j * ja
        b *= 1.0 + 0.8 * j * jb
        theta += 5.0 * j * jr
    ex, ey = _ellipse_extent(a, b, theta)
    if cx - ex < 0 or cx + ex > w - 1 or cy - ey < 0 or cy + ey > h - 1:
        raise ValueError("ellipse does not fit inside the image")

    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = spec.background_color
    if spec.frame:
        band = max(1, int(round(spec.frame_fraction * w)))
        img[:band] = spec.frame_color
        img[-band:] = spec.frame_color
        img[:, :band] = spec.frame_color
        img[:, -band:] = spec.frame_color
    ell = ellipse_mask(w, h, cx, cy, a, b, theta)
    img[ell] = spec.cervix_color
    clean = to_byte(img)

    spec_mask = np.zeros((h, w), dtype=bool)
    rmin, rmax = spec.specular_radius_range
    if spec.n_speculars > 0 and not 1 <= rmin <= rmax:
        raise ValueError("specular radius range must satisfy 1 <= min <= max")
    yy, xx = np.mgrid[0:h, 0:w]
    ell_ys, ell_xs = np.nonzero(ell)
    for _ in range(spec.n_speculars):
        r = int(rng.integers(rmin, rmax + 1))
        # keep a few pixels of tissue around each dot so its dilated ring stays inside the ellipse
        guard = r + 3
        for _attempt in range(1000):
            k = int(rng.integers(ell_ys.size))
            py, px = int(ell_ys[k]), int(ell_xs[k])
            disc = (xx - px) ** 2 + (yy - py) ** 2 <= guard * guard
            if not (disc & ~ell).any():
                break
        else:
            raise ValueError(f"could not fit a specular dot of radius {r} inside the ellipse")
        spec_mask |= (xx - px) ** 2 + (yy - py) ** 2 <= r * r

    noisy = clean.astype(np.float64)
    if spec.noise_sigma > 0:
        noisy += rng.normal(0.0, spec.noise_sigma, size=noisy.shape)
    image = to_byte(noisy)
    image[spec_mask] = WHITE

    truth = PhantomTruth(
        clean_image=clean,
        specular_mask=spec_mask,
        ellipse_mask=ell,
        ellipse_bbox=bbox_with_margin(ell, 0),
        ellipse={"cx": cx, "cy": cy, "a": a, "b": b, "rotation": theta},
    )
    return image, truth
