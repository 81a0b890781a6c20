"""Core raster types and band conventions.

Everything downstream moves one of four value types around:

- :class:`MSICube`: a 13-band Sentinel-2 L1C reflectance raster in [0, 1],
  ordered ``B01..B12`` (fixed, see :data:`BAND_ORDER`).
- :class:`RGBImage`: a 3-band true-color image in [0, 1], channel order (R, G, B).
- :class:`InpaintMask`: a binary per-pixel map; 1 marks pixels to synthesize.
- :class:`ScenePair`: a current cube plus a co-registered historical cube.

All of them validate on construction and hold read-only float64 (masks:
uint8) arrays, so instances can be shared freely between threads. The
true-color channels of a cube are, by Sentinel-2 convention, bands
(B04, B03, B02) at positions :data:`RGB_BANDS`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BAND_ORDER = (
    "B01", "B02", "B03", "B04", "B05", "B06", "B07",
    "B08", "B8A", "B09", "B10", "B11", "B12",
)
NUM_BANDS = len(BAND_ORDER)

#: Cube band positions of the (R, G, B) channels: B04, B03, B02.
RGB_BANDS = (3, 2, 1)

MIN_SIZE = 8


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _check_unit_range(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: values must be finite")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{what}: values must lie in [0, 1]")


@dataclass(frozen=True)
class MSICube:
    """13-band surface-reflectance raster, values in [0, 1], shape [13, H, W]."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, np.float64)
        if arr.ndim != 3 or arr.shape[0] != NUM_BANDS:
            raise ValueError(f"MSICube wants shape [{NUM_BANDS}, H, W], got {arr.shape}")
        if arr.shape[1] < MIN_SIZE or arr.shape[2] < MIN_SIZE:
            raise ValueError(f"MSICube spatial size must be at least {MIN_SIZE}x{MIN_SIZE}")
        _check_unit_range(arr, "MSICube")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class RGBImage:
    """True-color image, channel order (R, G, B), values in [0, 1], shape [3, H, W]."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, np.float64)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ValueError(f"RGBImage wants shape [3, H, W], got {arr.shape}")
        _check_unit_range(arr, "RGBImage")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class InpaintMask:
    """Binary missing-pixel map, shape [H, W]; 1 = synthesize, 0 = known."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2:
            raise ValueError(f"InpaintMask wants shape [H, W], got {arr.shape}")
        if not np.all(np.isin(arr, (0, 1))):
            raise ValueError("InpaintMask values must be 0 or 1")
        object.__setattr__(self, "values", _frozen(arr, np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def num_masked(self) -> int:
        return int(self.values.sum())


@dataclass(frozen=True)
class ScenePair:
    """A current cube plus a cloud-free historical cube of the same location."""

    current: MSICube
    historical: MSICube

    def __post_init__(self):
        if self.current.values.shape != self.historical.values.shape:
            raise ValueError(
                "ScenePair cubes must share a shape, got "
                f"{self.current.values.shape} vs {self.historical.values.shape}"
            )


def extract_rgb(cube: MSICube) -> RGBImage:
    """Pull the true-color (B04, B03, B02) bands out of a cube, values unchanged."""
    return RGBImage(cube.values[list(RGB_BANDS)])


def insert_rgb(cube: MSICube, rgb: RGBImage) -> MSICube:
    """Return a copy of ``cube`` with bands (B04, B03, B02) replaced by ``rgb``.

    The other ten bands are carried over bit-identically;
    ``insert_rgb(cube, extract_rgb(cube))`` is the identity.
    """
    if rgb.values.shape[1:] != cube.values.shape[1:]:
        raise ValueError(
            f"spatial shape mismatch: cube {cube.values.shape[1:]} vs rgb {rgb.values.shape[1:]}"
        )
    out = cube.values.copy()
    out[list(RGB_BANDS)] = rgb.values
    return MSICube(out)
