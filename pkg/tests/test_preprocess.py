import numpy as np
import pytest

from msinpaint.data_model import NUM_BANDS
from msinpaint.preprocess import (
    DEFAULT_SCALE,
    RawCube,
    normalize_raw,
    saturation_check,
    scale_raw,
)


def _raw(fill):
    return RawCube(np.full((NUM_BANDS, 8, 8), fill, dtype=np.float64))


def test_scale_is_exact_division():
    raw = _raw(2345.0)
    scaled = scale_raw(raw, 10000.0)
    assert np.all(scaled == 0.2345)
    assert DEFAULT_SCALE == 10000.0


def test_scale_does_not_clip():
    assert np.all(scale_raw(_raw(15000.0)) == 1.5)


def test_normalize_clips_to_unit_range():
    cube = normalize_raw(_raw(15000.0))
    assert np.all(cube.values == 1.0)
    cube = normalize_raw(_raw(2345.0))
    assert np.all(cube.values == 0.2345)


def test_normalize_identity_at_scale_one():
    rng = np.random.default_rng(0)
    vals = rng.uniform(0, 1, (NUM_BANDS, 8, 8))
    assert np.array_equal(normalize_raw(RawCube(vals), scale=1.0).values, vals)


def test_raw_cube_validation():
    with pytest.raises(ValueError):
        RawCube(np.full((NUM_BANDS, 8, 8), -1.0))
    bad = np.zeros((NUM_BANDS, 8, 8))
    bad[5, 3, 3] = np.inf
    with pytest.raises(ValueError):
        RawCube(bad)
    with pytest.raises(ValueError):
        RawCube(np.zeros((3, 8, 8)))
    with pytest.raises(ValueError):
        scale_raw(_raw(1.0), scale=0.0)
    with pytest.raises(ValueError):
        scale_raw(_raw(1.0), scale=-10.0)


def test_saturation_boundary_is_strict():
    # mean exactly at the limit is accepted; strictly above is rejected.
    # summation order makes most constant-array means land an ulp high,
    # so pick a size where the mean really is the limit (guard assert)
    boundary = np.full((4, 4), 0.9)
    assert float(boundary.mean()) == 0.9
    assert saturation_check(boundary)
    assert not saturation_check(np.full((4, 4), 0.9 + 1e-6))
    assert not saturation_check(np.full((13, 4, 4), 0.95))
    assert saturation_check(np.full((13, 4, 4), 0.1))


def test_saturation_uses_pre_clip_mean():
    # half 0.8 and half 1.0 pre-clip values average to exactly 0.9
    arr = np.empty((2, 4, 4))
    arr[0] = 0.8
    arr[1] = 1.0
    assert saturation_check(arr)
    # raising the bright half above 1.0 pushes the pre-clip mean over
    arr[1] = 1.2
    assert not saturation_check(arr)
    with pytest.raises(ValueError):
        saturation_check(np.array([np.nan]))
