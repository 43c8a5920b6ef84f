"""Annotation-target selection inside part masks.

Each visible part contributes a handful of roughly equidistant pixels,
chosen by k-means over the mask and capped at 14 per part. Targets are
then ordered in a horizontal/vertical succession (row bands top to
bottom, left to right within a band) so annotators sweep the part
without criss-crossing the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from .errors import DegenerateInput, KTooLarge

MAX_POINTS_PER_PART = 14


@dataclass(frozen=True)
class PartMask:
    """Pixel membership of one part in one image."""

    width: int
    height: int
    part: int
    pixels: np.ndarray  # (n, 2) int array of (x, y), canonical (y, x) order

    @staticmethod
    def from_pixels(width: int, height: int, part: int, pixels) -> "PartMask":
        px = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
        if px.size == 0:
            raise DegenerateInput(f"part {part}: empty mask")
        if (
            px[:, 0].min() < 0
            or px[:, 1].min() < 0
            or px[:, 0].max() >= width
            or px[:, 1].max() >= height
        ):
            raise DegenerateInput(f"part {part}: mask pixel outside {width}x{height}")
        px = np.unique(px, axis=0)
        px = px[np.lexsort((px[:, 0], px[:, 1]))]
        px.flags.writeable = False
        return PartMask(width=width, height=height, part=part, pixels=px)

    @staticmethod
    def from_array(array: np.ndarray, part: int) -> "PartMask":
        """Build from a (height, width) array; nonzero means member."""
        ys, xs = np.nonzero(np.asarray(array))
        return PartMask.from_pixels(
            width=array.shape[1],
            height=array.shape[0],
            part=part,
            pixels=np.column_stack([xs, ys]),
        )

    @property
    def area(self) -> int:
        return len(self.pixels)


@dataclass(frozen=True)
class SampledPoints:
    """Ordered annotation targets for one part."""

    part: int
    points: np.ndarray  # (k, 2) int (x, y), in succession order
    order: np.ndarray  # succession indices, 0..k-1

    def __post_init__(self):
        if not 1 <= len(self.points) <= MAX_POINTS_PER_PART:
            raise DegenerateInput(
                f"{len(self.points)} sampled points outside 1..{MAX_POINTS_PER_PART}"
            )


def choose_point_count(mask: PartMask) -> int:
    """Target count for a mask: min(14, max(1, round(sqrt(area)/10))).

    Scales with the part's linear extent; rounding is half-up.
    """
    x = math.sqrt(mask.area) / 10.0
    return min(MAX_POINTS_PER_PART, max(1, int(math.floor(x + 0.5))))


def succession_order(points: np.ndarray, height: int) -> np.ndarray:
    """Sort order: row band (quarter of the image height), then x, then y."""
    pts = np.asarray(points, dtype=np.int64)
    band = (pts[:, 1] * 4) // max(height, 1)
    return np.lexsort((pts[:, 1], pts[:, 0], band))


def sample_points(mask: PartMask, k: int, seed: int = 0) -> SampledPoints:
    """Pick ``k`` roughly equidistant mask pixels via seeded k-means.

    Centroids are snapped to the nearest member pixel so every target is
    annotatable; output order follows the succession rule. Deterministic
    in (mask, k, seed).
    """
    if k < 1:
        raise KTooLarge(f"k must be >= 1, got {k}")
    if k > mask.area:
        raise KTooLarge(f"k={k} exceeds mask area {mask.area}")
    if k > MAX_POINTS_PER_PART:
        raise KTooLarge(f"k={k} exceeds the per-part cap {MAX_POINTS_PER_PART}")
    coords = mask.pixels.astype(np.float64)
    if k == mask.area:
        chosen = mask.pixels
    else:
        km = KMeans(
            n_clusters=k,
            init="k-means++",
            n_init=1,
            max_iter=100,
            random_state=seed,
        ).fit(coords)
        centers = km.cluster_centers_
        d2 = ((coords[None, :, :] - centers[:, None, :]) ** 2).sum(axis=2)
        chosen = mask.pixels[np.argmin(d2, axis=1)]
    order = succession_order(chosen, mask.height)
    return SampledPoints(
        part=mask.part,
        points=chosen[order],
        order=np.arange(len(chosen)),
    )


def mask_from_png(path, part: int) -> PartMask:
    """Nonzero pixels of a PNG are mask members."""
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return PartMask.from_array(arr, part)


def mask_from_rle(rle: dict, part: int) -> PartMask:
    """COCO-style uncompressed RLE: column-major counts, leading zeros run."""
    h, w = rle["size"]
    counts = rle["counts"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    if pos != h * w:
        raise DegenerateInput(f"RLE covers {pos} of {h * w} pixels")
    grid = flat.reshape((w, h)).T  # column-major
    return PartMask.from_array(grid, part)
