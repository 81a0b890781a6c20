import numpy as np
import pytest

from msinpaint.data_model import (
    BAND_ORDER,
    NUM_BANDS,
    RGB_BANDS,
    InpaintMask,
    MSICube,
    RGBImage,
    ScenePair,
    extract_rgb,
    insert_rgb,
)


def _cube(seed=0, h=8, w=8):
    return MSICube(np.random.default_rng(seed).uniform(0, 1, (NUM_BANDS, h, w)))


def test_band_table():
    assert NUM_BANDS == 13
    assert BAND_ORDER[1] == "B02" and BAND_ORDER[3] == "B04" and BAND_ORDER[7] == "B08"
    # true-color order is (B04, B03, B02)
    assert RGB_BANDS == (3, 2, 1)


def test_cube_validation():
    with pytest.raises(ValueError):
        MSICube(np.zeros((12, 8, 8)))
    with pytest.raises(ValueError):
        MSICube(np.zeros((13, 7, 8)))  # below minimum size
    with pytest.raises(ValueError):
        MSICube(np.full((13, 8, 8), 1.5))
    with pytest.raises(ValueError):
        MSICube(np.full((13, 8, 8), -0.1))
    bad = np.zeros((13, 8, 8))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        MSICube(bad)
    cube = _cube()
    assert cube.height == 8 and cube.width == 8


def test_values_are_frozen_copies():
    src = np.zeros((13, 8, 8))
    cube = MSICube(src)
    src[0, 0, 0] = 1.0  # mutating the source must not leak in
    assert cube.values[0, 0, 0] == 0.0
    with pytest.raises(ValueError):
        cube.values[0, 0, 0] = 0.5


def test_rgb_image_validation():
    with pytest.raises(ValueError):
        RGBImage(np.zeros((4, 8, 8)))
    img = RGBImage(np.full((3, 5, 9), 0.5))
    assert img.height == 5 and img.width == 9


def test_mask_validation_and_counts():
    with pytest.raises(ValueError):
        InpaintMask(np.zeros((2, 4, 4)))
    with pytest.raises(ValueError):
        InpaintMask(np.full((4, 4), 0.5))
    with pytest.raises(ValueError):
        InpaintMask(np.full((4, 4), 2))
    m = InpaintMask(np.eye(6))
    assert m.values.dtype == np.uint8
    assert m.shape == (6, 6)
    assert m.num_masked == 6


def test_scene_pair_shape_check():
    with pytest.raises(ValueError):
        ScenePair(current=_cube(0, 8, 8), historical=_cube(1, 8, 16))
    pair = ScenePair(current=_cube(0), historical=_cube(1))
    assert pair.current.values.shape == pair.historical.values.shape


def test_extract_insert_round_trip():
    for seed in range(5):
        cube = _cube(seed)
        rgb = extract_rgb(cube)
        assert np.array_equal(rgb.values[0], cube.values[3])
        assert np.array_equal(rgb.values[1], cube.values[2])
        assert np.array_equal(rgb.values[2], cube.values[1])
        back = insert_rgb(cube, rgb)
        assert np.array_equal(back.values, cube.values)


def test_insert_touches_only_rgb_rows():
    cube = _cube(3)
    new_rgb = RGBImage(np.random.default_rng(4).uniform(0, 1, (3, 8, 8)))
    out = insert_rgb(cube, new_rgb)
    others = [b for b in range(NUM_BANDS) if b not in RGB_BANDS]
    assert np.array_equal(out.values[others], cube.values[others])
    assert np.array_equal(out.values[list(RGB_BANDS)], new_rgb.values)
    # shape mismatch refused
    with pytest.raises(ValueError):
        insert_rgb(cube, RGBImage(np.zeros((3, 16, 16))))
