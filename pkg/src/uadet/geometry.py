"""Bounding-box and binary-mask primitives.

Conventions used throughout the toolkit:

* Pixel ``(col, row) = (i, j)`` occupies the unit square ``[i, i+1) x [j, j+1)``,
  so a box's max edges are exclusive and a single-pixel box has area 1.
* Mask foreground is any value > 0, which accepts both {0, 1} and {0, 255}
  encodings.
* All types are immutable values; all functions are pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionMismatch,
    InvalidBox,
    NoForeground,
    OutOfBounds,
    ParseError,
)

# Slack for normalized coordinates that went through 6-decimal label files.
COORD_TOL = 1e-6


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel coordinates, max edges exclusive."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBox(f"non-finite coordinates {coords}")
        if min(coords) < 0:
            raise InvalidBox(f"negative coordinates {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidBox(f"empty or inverted box {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def to_xyxy(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class NormalizedBBox:
    """Center/size box as fractions of image width and height.

    This is the portable label-file representation: it survives image
    resizing and is what external detectors consume and emit.
    """

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        fields = (self.cx, self.cy, self.w, self.h)
        if not all(math.isfinite(f) for f in fields):
            raise InvalidBox(f"non-finite box {fields}")
        if not (0 < self.w <= 1 + COORD_TOL and 0 < self.h <= 1 + COORD_TOL):
            raise InvalidBox(f"size out of (0, 1]: w={self.w} h={self.h}")
        for lo, hi in ((self.cx - self.w / 2, self.cx + self.w / 2),
                       (self.cy - self.h / 2, self.cy + self.h / 2)):
            if lo < -COORD_TOL or hi > 1 + COORD_TOL:
                raise InvalidBox(f"box extends outside the unit image: {fields}")

    def to_xyxy(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)


@dataclass(frozen=True)
class PixelMask:
    """Row-major byte grid; one byte per pixel, foreground is value > 0."""

    width: int
    height: int
    values: bytes

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DimensionMismatch(f"mask size {self.width}x{self.height} must be positive")
        if len(self.values) != self.width * self.height:
            raise DimensionMismatch(
                f"mask data length {len(self.values)} != {self.width}x{self.height}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "PixelMask":
        """Build from an (height, width) array; nonzero becomes foreground."""
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d array, got shape {arr.shape}")
        return cls(arr.shape[1], arr.shape[0], arr.astype(np.uint8).tobytes())

    def to_array(self) -> np.ndarray:
        """Read-only (height, width) uint8 view of the pixel grid."""
        return np.frombuffer(self.values, dtype=np.uint8).reshape(self.height, self.width)

    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.to_array()))


def iou_xyxy(a: tuple[float, float, float, float],
             b: tuple[float, float, float, float]) -> float:
    """Intersection over union of two (x_min, y_min, x_max, y_max) tuples.

    Exact for integer coordinates; 0.0 when the boxes are disjoint.
    """
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def iou(a: BBox, b: BBox) -> float:
    """IoU of two boxes; symmetric, in [0, 1], 1.0 iff the boxes coincide."""
    return iou_xyxy(a.to_xyxy(), b.to_xyxy())


def mask_iou(a: PixelMask, b: PixelMask) -> float:
    """Foreground IoU of two equally sized masks.

    Two empty masks agree perfectly and give 1.0, so per-image averages
    never see an undefined value.
    """
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(
            f"mask sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    fa = a.to_array() > 0
    fb = b.to_array() > 0
    union = int(np.count_nonzero(fa | fb))
    if union == 0:
        return 1.0
    inter = int(np.count_nonzero(fa & fb))
    return inter / union


def bbox_from_mask(mask: PixelMask) -> BBox:
    """Tight global box over all foreground pixels (the single-box rule).

    Column/row maxima are exclusive: a lone pixel at (col 3, row 7) gives
    (3, 7, 4, 8).
    """
    arr = mask.to_array()
    rows, cols = np.nonzero(arr)
    if rows.size == 0:
        raise NoForeground("mask has no foreground pixels")
    return BBox(float(cols.min()), float(rows.min()),
                float(cols.max() + 1), float(rows.max() + 1))


_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCTURE_8 = np.ones((3, 3), dtype=bool)


def components_from_mask(mask: PixelMask, connectivity: int = 8,
                         min_area: int = 1) -> list[BBox]:
    """One tight box per connected foreground component with >= min_area pixels.

    Args:
        mask: input grid.
        connectivity: 4 (edge neighbors) or 8 (edge + diagonal neighbors).
        min_area: components smaller than this many pixels are dropped.

    Returns:
        Boxes sorted by (y_min, x_min); empty list for an all-zero mask.
    """
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    if min_area < 1:
        raise ValueError(f"min_area must be >= 1, got {min_area}")
    arr = mask.to_array() > 0
    structure = _STRUCTURE_4 if connectivity == 4 else _STRUCTURE_8
    labels, n = ndimage.label(arr, structure=structure)
    if n == 0:
        return []
    areas = np.bincount(labels.ravel())
    boxes = []
    for index, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None or areas[index] < min_area:
            continue
        rows, cols = sl
        boxes.append(BBox(float(cols.start), float(rows.start),
                          float(cols.stop), float(rows.stop)))
    boxes.sort(key=lambda b: (b.y_min, b.x_min))
    return boxes


def normalize(box: BBox, image_w: int, image_h: int) -> NormalizedBBox:
    """Convert a pixel box to center/size fractions of the image."""
    if image_w <= 0 or image_h <= 0:
        raise OutOfBounds(f"image size {image_w}x{image_h} must be positive")
    if box.x_max > image_w + COORD_TOL or box.y_max > image_h + COORD_TOL:
        raise OutOfBounds(
            f"box {box.to_xyxy()} exceeds image extents {image_w}x{image_h}"
        )
    return NormalizedBBox(
        cx=(box.x_min + box.x_max) / 2 / image_w,
        cy=(box.y_min + box.y_max) / 2 / image_h,
        w=box.width / image_w,
        h=box.height / image_h,
    )


def denormalize(box: NormalizedBBox, image_w: int, image_h: int) -> BBox:
    """Inverse of :func:`normalize`; round-trips within 1e-6 px at 512x512."""
    x_min, y_min, x_max, y_max = box.to_xyxy()
    return BBox(max(0.0, x_min * image_w), max(0.0, y_min * image_h),
                x_max * image_w, y_max * image_h)


# Masks travel as binary "portable graymap" files: a P5 magic, ASCII
# width/height/maxval (255), one whitespace byte, then raw pixel rows.
# The header is comment-free by contract so parsing is bit-exact.

_PGM_HEADER = re.compile(rb"^P5[ \t\r\n]+(\d+)[ \t\r\n]+(\d+)[ \t\r\n]+(\d+)[ \t\r\n]")


def mask_from_pgm_bytes(data: bytes, source=None) -> PixelMask:
    m = _PGM_HEADER.match(data)
    if m is None:
        raise ParseError("not a binary graymap (P5) header", path=source)
    width, height, maxval = (int(m.group(i)) for i in (1, 2, 3))
    if maxval != 255:
        raise ParseError(f"unsupported maxval {maxval}, expected 255", path=source)
    pixels = data[m.end():]
    if len(pixels) != width * height:
        raise ParseError(
            f"pixel payload is {len(pixels)} bytes, expected {width * height}",
            path=source,
        )
    return PixelMask(width, height, pixels)


def mask_to_pgm_bytes(mask: PixelMask) -> bytes:
    return b"P5\n%d %d\n255\n" % (mask.width, mask.height) + mask.values


def read_mask(path) -> PixelMask:
    """Read a binary graymap mask file."""
    with open(path, "rb") as fh:
        return mask_from_pgm_bytes(fh.read(), source=path)


def write_mask(mask: PixelMask, path) -> None:
    """Write a mask as a binary graymap file."""
    with open(path, "wb") as fh:
        fh.write(mask_to_pgm_bytes(mask))
