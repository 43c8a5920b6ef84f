"""Decoding of externally produced correspondence score maps.

A score map stack carries, per pixel, a 25-way part posterior (class 0
is background) and 24 pairs of chart-coordinate regressors. Decoding is
pixel-local: take the argmax class, then read that class's (U, V)
regressor output, clamped to the unit square. Ties in the argmax go to
the lowest class index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ShapeMismatch
from .mesh import NUM_PARTS

DCSM_MAGIC = b"DCSM"
N_CHANNELS = 1 + NUM_PARTS + 2 * NUM_PARTS  # 73


@dataclass
class ScoreMaps:
    """Per-pixel class posteriors and per-part UV regressor outputs."""

    probs: np.ndarray  # (25, h, w), rows sum to ~1 per pixel
    reg_u: np.ndarray  # (24, h, w)
    reg_v: np.ndarray  # (24, h, w)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        self.reg_u = np.asarray(self.reg_u, dtype=np.float64)
        self.reg_v = np.asarray(self.reg_v, dtype=np.float64)
        if self.probs.ndim != 3 or self.probs.shape[0] != NUM_PARTS + 1:
            raise ShapeMismatch(f"probs must be (25, h, w), got {self.probs.shape}")
        hw = self.probs.shape[1:]
        for name, arr in (("reg_u", self.reg_u), ("reg_v", self.reg_v)):
            if arr.shape != (NUM_PARTS, *hw):
                raise ShapeMismatch(
                    f"{name} must be (24, {hw[0]}, {hw[1]}), got {arr.shape}"
                )
        if not np.isfinite(self.reg_u).all() or not np.isfinite(self.reg_v).all():
            raise ShapeMismatch("regressor channels must be finite")
        if (self.probs < 0).any():
            raise ShapeMismatch("posteriors must be non-negative")
        total = self.probs.sum(axis=0)
        if np.abs(total - 1.0).max(initial=0.0) > 1e-4:
            raise ShapeMismatch("per-pixel posteriors must sum to 1 within 1e-4")

    @property
    def height(self) -> int:
        return self.probs.shape[1]

    @property
    def width(self) -> int:
        return self.probs.shape[2]


@dataclass
class IuvRaster:
    """Per-pixel (part index, U, V); background pixels are (0, 0, 0)."""

    part: np.ndarray  # (h, w) uint8, 0..24
    u: np.ndarray  # (h, w) float64 in [0, 1]
    v: np.ndarray  # (h, w) float64 in [0, 1]

    def __post_init__(self):
        if not (self.part.shape == self.u.shape == self.v.shape):
            raise ShapeMismatch("part/u/v shapes disagree")


def decode(maps: ScoreMaps) -> IuvRaster:
    """Argmax part per pixel, then that part's clamped UV regression."""
    c_star = np.argmax(maps.probs, axis=0)  # ties -> lowest index
    fg = c_star > 0
    part_idx = np.where(fg, c_star - 1, 0)
    rows, cols = np.indices(c_star.shape)
    u = np.where(fg, np.clip(maps.reg_u[part_idx, rows, cols], 0.0, 1.0), 0.0)
    v = np.where(fg, np.clip(maps.reg_v[part_idx, rows, cols], 0.0, 1.0), 0.0)
    return IuvRaster(part=c_star.astype(np.uint8), u=u, v=v)


def lift(raster: IuvRaster, atlas, pixels) -> list:
    """Map raster pixels onto mesh vertices via the UV atlas.

    ``pixels`` is a list of (x, y); background pixels yield ``None``.
    """
    from .atlas import uv_to_vertex

    out = []
    for x, y in pixels:
        part = int(raster.part[y, x])
        if part == 0:
            out.append(None)
        else:
            out.append(
                uv_to_vertex(atlas, part, float(raster.u[y, x]), float(raster.v[y, x]))
            )
    return out


# -- binary + PNG formats -----------------------------------------------------


def write_score_maps(maps: ScoreMaps, path):
    """DCSM: magic, u32 w/h, then 73 channel planes of f32, little-endian.

    Channel order is [P(0..24), U(1..24), V(1..24)], each plane row-major.
    """
    with open(path, "wb") as fh:
        fh.write(DCSM_MAGIC)
        fh.write(struct.pack("<II", maps.width, maps.height))
        stack = np.concatenate([maps.probs, maps.reg_u, maps.reg_v], axis=0)
        fh.write(stack.astype("<f4").tobytes())


def read_score_maps(path) -> ScoreMaps:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DCSM_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {DCSM_MAGIC!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise FormatError("truncated DCSM header")
        w, h = struct.unpack("<II", header)
        payload = fh.read()
    expected = N_CHANNELS * w * h * 4
    if len(payload) != expected:
        raise FormatError(f"DCSM payload is {len(payload)} bytes, expected {expected}")
    stack = np.frombuffer(payload, dtype="<f4").reshape(N_CHANNELS, h, w)
    return ScoreMaps(
        probs=stack[: NUM_PARTS + 1],
        reg_u=stack[NUM_PARTS + 1 : 2 * NUM_PARTS + 1],
        reg_v=stack[2 * NUM_PARTS + 1 :],
    )


def write_iuv_png(raster: IuvRaster, path):
    """3-channel PNG: (I, round(255 U), round(255 V)); 8-bit quantized."""
    from PIL import Image

    rgb = np.stack(
        [
            raster.part.astype(np.uint8),
            np.round(255.0 * raster.u).astype(np.uint8),
            np.round(255.0 * raster.v).astype(np.uint8),
        ],
        axis=2,
    )
    Image.fromarray(rgb, mode="RGB").save(path)


def read_iuv_png(path) -> IuvRaster:
    from PIL import Image

    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"))
    return IuvRaster(
        part=rgb[:, :, 0].copy(),
        u=rgb[:, :, 1].astype(np.float64) / 255.0,
        v=rgb[:, :, 2].astype(np.float64) / 255.0,
    )
