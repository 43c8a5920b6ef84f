"""Texture transfer onto decoded correspondence rasters.

Every non-background pixel of an IUV raster samples an RGB tile for its
part at the pixel's chart coordinates; background pixels keep the base
image. Tiles use clamped bilinear sampling with (0,0) at the tile's
top-left, U along columns and V along rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import IuvRaster
from .errors import DimensionMismatch, MissingTile
from .mesh import NUM_PARTS

ATLAS_GRID = (4, 6)  # rows x columns of the single-PNG tile layout


@dataclass
class TextureAtlas:
    """24 square RGB tiles, one per part, all the same resolution."""

    tiles: dict  # part -> (res, res, 3) uint8

    def __post_init__(self):
        if sorted(self.tiles) != list(range(1, NUM_PARTS + 1)):
            missing = sorted(set(range(1, NUM_PARTS + 1)) - set(self.tiles))
            raise MissingTile(f"missing tiles for parts {missing}")
        sizes = {t.shape for t in self.tiles.values()}
        if len(sizes) != 1:
            raise MissingTile(f"tiles disagree on shape: {sorted(sizes)}")
        shape = next(iter(sizes))
        if len(shape) != 3 or shape[0] != shape[1] or shape[2] != 3:
            raise MissingTile(f"tiles must be square RGB, got {shape}")

    @property
    def resolution(self) -> int:
        return next(iter(self.tiles.values())).shape[0]

    @staticmethod
    def from_grid_image(path) -> "TextureAtlas":
        """Single PNG holding the 24 tiles in a 4-row x 6-column grid,
        part ids row-major (part 1 top-left)."""
        from PIL import Image

        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"))
        rows, cols = ATLAS_GRID
        if arr.shape[0] % rows or arr.shape[1] % cols:
            raise DimensionMismatch(
                f"grid image {arr.shape[1]}x{arr.shape[0]} does not divide "
                f"into {rows}x{cols} tiles"
            )
        th, tw = arr.shape[0] // rows, arr.shape[1] // cols
        if th != tw:
            raise DimensionMismatch(f"tiles would be {tw}x{th}, expected square")
        tiles = {}
        for part in range(1, NUM_PARTS + 1):
            r, c = divmod(part - 1, cols)
            tiles[part] = arr[r * th : (r + 1) * th, c * tw : (c + 1) * tw].copy()
        return TextureAtlas(tiles=tiles)

    @staticmethod
    def from_directory(path) -> "TextureAtlas":
        """Directory of part_01.png .. part_24.png."""
        from pathlib import Path

        from PIL import Image

        tiles = {}
        for part in range(1, NUM_PARTS + 1):
            tile_path = Path(path) / f"part_{part:02d}.png"
            if not tile_path.exists():
                raise MissingTile(f"no tile file {tile_path}")
            with Image.open(tile_path) as im:
                tiles[part] = np.asarray(im.convert("RGB")).copy()
        return TextureAtlas(tiles=tiles)


def _bilinear(tile: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    res = tile.shape[0]
    x = np.clip(u, 0.0, 1.0) * (res - 1)
    y = np.clip(v, 0.0, 1.0) * (res - 1)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, res - 1)
    y1 = np.minimum(y0 + 1, res - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    t = tile.astype(np.float64)
    top = t[y0, x0] * (1 - fx) + t[y0, x1] * fx
    bottom = t[y1, x0] * (1 - fx) + t[y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def apply_texture(
    iuv: IuvRaster, base: np.ndarray, atlas: TextureAtlas
) -> np.ndarray:
    """Paint non-background raster pixels from the part tiles."""
    base = np.asarray(base)
    if base.ndim != 3 or base.shape[2] != 3:
        raise DimensionMismatch(f"base image must be (h, w, 3), got {base.shape}")
    if base.shape[:2] != iuv.part.shape:
        raise DimensionMismatch(
            f"raster {iuv.part.shape} vs image {base.shape[:2]}"
        )
    out = base.astype(np.float64).copy()
    for part in np.unique(iuv.part):
        part = int(part)
        if part == 0:
            continue
        tile = atlas.tiles.get(part)
        if tile is None:
            raise MissingTile(f"no tile for part {part}")
        mask = iuv.part == part
        out[mask] = _bilinear(tile, iuv.u[mask], iuv.v[mask])
    return np.clip(np.round(out), 0, 255).astype(np.uint8)
