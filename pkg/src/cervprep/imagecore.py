"""Image containers, plane access, cropping and PNG/PPM I/O.

Images are plain numpy arrays, row-major with a top-left origin:

* RGB image: ``(height, width, 3)`` ``uint8``
* plane: ``(height, width)`` ``float64``
* mask: ``(height, width)`` ``bool``
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image


class ImageFormatError(ValueError):
    """Raised for files that are not a supported 8-bit PNG or P6 PPM."""


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box; ``x1`` and ``y1`` are exclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def validate(self, width: int, height: int) -> None:
        if not (0 <= self.x0 < self.x1 <= width and 0 <= self.y0 < self.y1 <= height):
            raise ValueError(f"box {self.as_tuple()} is empty or outside a {width}x{height} image")

    def translate(self, dx: int, dy: int) -> BBox:
        return BBox(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def iou(self, other: BBox) -> float:
        ix = max(0, min(self.x1, other.x1) - max(self.x0, other.x0))
        iy = max(0, min(self.y1, other.y1) - max(self.y0, other.y0))
        inter = ix * iy
        return inter / float(self.area + other.area - inter)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)


def as_rgb8(image) -> np.ndarray:
    """Validate and return ``image`` as an ``(h, w, 3)`` uint8 array."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image has a zero dimension")
    if arr.dtype != np.uint8:
        if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 255:
            arr = arr.astype(np.uint8)
        else:
            raise ValueError(f"expected uint8 channel data, got {arr.dtype}")
    return arr


def as_mask(mask, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr = np.asarray(mask, dtype=bool)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"mask shape {arr.shape} does not match {tuple(shape)}")
    return arr


def _read_ppm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P6"):
        raise ImageFormatError("not a binary PPM (P6) file")
    fields: list[bytes] = []
    pos = 2
    n = len(data)
    while len(fields) < 3:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PPM header")
        fields.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    if pos >= n or not data[pos : pos + 1].isspace():
        raise ImageFormatError("truncated PPM header")
    pos += 1
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError:
        raise ImageFormatError("non-numeric PPM header field") from None
    if width < 1 or height < 1:
        raise ImageFormatError("zero-dimension image")
    if maxval > 255:
        raise ImageFormatError(f"16-bit PPM (maxval {maxval}) is not supported")
    if maxval != 255:
        raise ImageFormatError(f"PPM maxval must be 255, got {maxval}")
    need = width * height * 3
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise ImageFormatError("unexpected end of pixel data")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def _png_bit_depth(data: bytes) -> int:
    # IHDR is always the first chunk: 8-byte signature, length, type, width, height, depth
    if len(data) < 25 or data[12:16] != b"IHDR":
        raise ImageFormatError("malformed PNG header")
    return data[24]


def load_image(path) -> np.ndarray:
    """Load an 8-bit PNG or binary PPM as an ``(h, w, 3)`` uint8 array.

    Alpha is dropped; 16-bit files are rejected rather than truncated.
    """
    path = Path(path)
    data = path.read_bytes()
    if data.startswith(b"P6"):
        return _read_ppm(data)
    if not data.startswith(b"\x89PNG\r\n\x1a\n"):
        raise ImageFormatError(f"{path}: unsupported image format (expected PNG or P6 PPM)")
    depth = _png_bit_depth(data)
    if depth > 8:
        raise ImageFormatError(f"{path}: {depth}-bit PNG is not supported")
    try:
        with Image.open(path) as im:
            im.load()
            if im.width < 1 or im.height < 1:
                raise ImageFormatError("zero-dimension image")
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, SyntaxError) as exc:
        raise ImageFormatError(f"{path}: cannot decode PNG: {exc}") from exc
    return arr.copy()


def save_image(image, path) -> None:
    """Write ``image`` as PPM if the suffix is ``.ppm``, else as PNG."""
    arr = as_rgb8(image)
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {path.parent}")
    if path.suffix.lower() == ".ppm":
        h, w, _ = arr.shape
        with open(path, "wb") as fh:
            fh.write(b"P6\n%d %d\n255\n" % (w, h))
            fh.write(np.ascontiguousarray(arr).tobytes())
    else:
        Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def save_mask(mask, path) -> None:
    """Write a mask as an 8-bit grayscale PNG (0 / 255)."""
    arr = as_mask(mask)
    Image.fromarray(arr.astype(np.uint8) * 255, mode="L").save(os.fspath(path), format="PNG")


def split_planes(image) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    arr = as_rgb8(image).astype(np.float64)
    return arr[..., 0].copy(), arr[..., 1].copy(), arr[..., 2].copy()


def to_byte(plane) -> np.ndarray:
    """Clamp to [0, 255] and round half-up."""
    return np.floor(np.clip(np.asarray(plane, dtype=np.float64), 0.0, 255.0) + 0.5).astype(np.uint8)


def merge_planes(r, g, b) -> np.ndarray:
    r, g, b = (np.asarray(p, dtype=np.float64) for p in (r, g, b))
    if r.ndim != 2 or not (r.shape == g.shape == b.shape):
        raise ValueError(f"plane dimensions differ: {r.shape}, {g.shape}, {b.shape}")
    return np.stack([to_byte(r), to_byte(g), to_byte(b)], axis=-1)


def crop(image, box: BBox) -> np.ndarray:
    arr = as_rgb8(image)
    h, w, _ = arr.shape
    box.validate(w, h)
    return arr[box.y0 : box.y1, box.x0 : box.x1].copy()
