import numpy as np
import pytest

from densecorr.decoder import IuvRaster
from densecorr.errors import DimensionMismatch, MissingTile
from densecorr.texture import ATLAS_GRID, TextureAtlas, apply_texture


def constant_tiles(res=8):
    """Tile for part p is the flat color (10p, 20 + p, 255 - p)."""
    tiles = {}
    for part in range(1, 25):
        color = np.array([10 * part, 20 + part, 255 - part], dtype=np.uint8)
        tiles[part] = np.tile(color, (res, res, 1))
    return TextureAtlas(tiles=tiles)


def gradient_tile(res=16):
    tile = np.zeros((res, res, 3), dtype=np.uint8)
    tile[:, :, 0] = np.linspace(0, 255, res, dtype=np.uint8)[None, :]  # U axis
    tile[:, :, 1] = np.linspace(0, 255, res, dtype=np.uint8)[:, None]  # V axis
    return tile


def checker_raster(h=12, w=10):
    part = np.zeros((h, w), dtype=np.uint8)
    part[:, : w // 2] = 3
    part[: h // 2, w // 2 :] = 17
    u = np.full((h, w), 0.25)
    v = np.full((h, w), 0.75)
    return IuvRaster(part=part, u=u, v=v)


class TestApplyTexture:
    def test_all_background_is_identity(self):
        base = np.random.default_rng(0).integers(0, 255, (6, 6, 3)).astype(np.uint8)
        raster = IuvRaster(
            part=np.zeros((6, 6), dtype=np.uint8),
            u=np.zeros((6, 6)),
            v=np.zeros((6, 6)),
        )
        out = apply_texture(raster, base, constant_tiles())
        np.testing.assert_array_equal(out, base)

    def test_corner_sample_hits_top_left_texel(self):
        tiles = constant_tiles(res=16).tiles
        tiles[5] = gradient_tile(res=16)
        atlas = TextureAtlas(tiles=tiles)
        raster = IuvRaster(
            part=np.array([[5]], dtype=np.uint8),
            u=np.array([[0.0]]),
            v=np.array([[0.0]]),
        )
        base = np.zeros((1, 1, 3), dtype=np.uint8)
        out = apply_texture(raster, base, atlas)
        np.testing.assert_array_equal(out[0, 0], atlas.tiles[5][0, 0])

    def test_constant_tiles_recolor_exactly(self):
        raster = checker_raster()
        base = np.full((*raster.part.shape, 3), 7, dtype=np.uint8)
        atlas = constant_tiles()
        out = apply_texture(raster, base, atlas)
        for part in (3, 17):
            mask = raster.part == part
            np.testing.assert_array_equal(
                out[mask], np.tile(atlas.tiles[part][0, 0], (mask.sum(), 1))
            )
        # histogram equals per-part pixel counts
        color3 = tuple(atlas.tiles[3][0, 0])
        flat = out.reshape(-1, 3)
        count3 = int((flat == color3).all(axis=1).sum())
        assert count3 == int((raster.part == 3).sum())

    def test_segmentation_recoverable_from_recoloring(self):
        raster = checker_raster()
        base = np.zeros((*raster.part.shape, 3), dtype=np.uint8)
        atlas = constant_tiles()
        out = apply_texture(raster, base, atlas)
        recovered = np.zeros_like(raster.part)
        for part in range(1, 25):
            color = atlas.tiles[part][0, 0]
            recovered[(out == color).all(axis=2)] = part
        np.testing.assert_array_equal(recovered, raster.part)

    def test_output_differs_only_on_foreground(self):
        raster = checker_raster()
        rng = np.random.default_rng(1)
        base = rng.integers(0, 255, (*raster.part.shape, 3)).astype(np.uint8)
        out = apply_texture(raster, base, constant_tiles())
        bg = raster.part == 0
        np.testing.assert_array_equal(out[bg], base[bg])

    def test_dimension_mismatch(self):
        raster = checker_raster()
        base = np.zeros((3, 3, 3), dtype=np.uint8)
        with pytest.raises(DimensionMismatch):
            apply_texture(raster, base, constant_tiles())

    def test_bilinear_interpolates_midpoint(self):
        tiles = constant_tiles(res=2).tiles
        tiles[1] = np.array(
            [[[0, 0, 0], [100, 0, 0]], [[200, 0, 0], [255, 0, 0]]], dtype=np.uint8
        )
        atlas = TextureAtlas(tiles=tiles)
        raster = IuvRaster(
            part=np.array([[1]], dtype=np.uint8),
            u=np.array([[0.5]]),
            v=np.array([[0.5]]),
        )
        out = apply_texture(raster, np.zeros((1, 1, 3), dtype=np.uint8), atlas)
        assert out[0, 0, 0] == round((0 + 100 + 200 + 255) / 4)


class TestTextureAtlasLoading:
    def test_missing_tiles_rejected(self):
        tiles = constant_tiles().tiles
        del tiles[9]
        with pytest.raises(MissingTile):
            TextureAtlas(tiles=tiles)

    def test_grid_image_layout(self, tmp_path):
        from PIL import Image

        rows, cols = ATLAS_GRID
        res = 4
        sheet = np.zeros((rows * res, cols * res, 3), dtype=np.uint8)
        for part in range(1, 25):
            r, c = divmod(part - 1, cols)
            sheet[r * res : (r + 1) * res, c * res : (c + 1) * res] = part * 10
        path = tmp_path / "atlas.png"
        Image.fromarray(sheet, mode="RGB").save(path)
        atlas = TextureAtlas.from_grid_image(path)
        assert atlas.resolution == res
        for part in range(1, 25):
            assert atlas.tiles[part][0, 0, 0] == part * 10

    def test_directory_layout(self, tmp_path):
        from PIL import Image

        for part in range(1, 25):
            tile = np.full((4, 4, 3), part, dtype=np.uint8)
            Image.fromarray(tile, mode="RGB").save(tmp_path / f"part_{part:02d}.png")
        atlas = TextureAtlas.from_directory(tmp_path)
        assert atlas.tiles[24][0, 0, 0] == 24

    def test_directory_missing_file(self, tmp_path):
        with pytest.raises(MissingTile):
            TextureAtlas.from_directory(tmp_path)
