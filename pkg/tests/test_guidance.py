import numpy as np
import pytest

from msinpaint.data_model import RGBImage
from msinpaint.guidance import EdgeMap, edge_map


def test_constant_image_gives_zero_map():
    img = RGBImage(np.full((3, 16, 16), 0.4))
    em = edge_map(img)
    assert em.values.shape == (1, 16, 16)
    assert np.all(em.values == 0.0)


def test_step_edge_peaks_at_one_on_the_edge():
    # vertical step: left half 0.2, right half 0.8, step between cols 7 and 8
    arr = np.full((3, 16, 16), 0.2)
    arr[:, :, 8:] = 0.8
    em = edge_map(RGBImage(arr)).values[0]
    assert np.all(em[:, 7] == 1.0)
    assert np.all(em[:, 8] == 1.0)
    # interior far from the step is flat
    assert np.all(em[:, :6] == 0.0)
    assert np.all(em[:, 10:] == 0.0)


def test_peak_normalized_unless_constant():
    rng = np.random.default_rng(0)
    for seed in range(5):
        img = RGBImage(np.random.default_rng(seed).uniform(0, 1, (3, 16, 16)))
        em = edge_map(img).values
        assert em.min() >= 0.0
        assert em.max() == 1.0


def test_brightness_invariance_on_dyadic_values():
    # gradients scale linearly and the peak normalization divides the
    # factor back out; with power-of-two scaling this is bit-exact
    rng = np.random.default_rng(1)
    grid = rng.integers(0, 257, size=(3, 16, 16)) / 256.0
    bright = edge_map(RGBImage(grid)).values
    dark = edge_map(RGBImage(grid * 0.5)).values
    assert np.array_equal(bright, dark)


def test_edge_map_type_validation():
    with pytest.raises(ValueError):
        EdgeMap(np.zeros((16, 16)))  # wants [1, H, W]
    with pytest.raises(ValueError):
        EdgeMap(np.full((1, 8, 8), 1.2))
