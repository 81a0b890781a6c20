"""Raw digital numbers to [0, 1] reflectance, plus the saturated-sample filter.

Sentinel-2 L1C distributes reflectance as integer digital numbers scaled
by 10000. Samples are kept only if their mean scaled value (before
clipping) is not higher than 0.9, which drops saturated acquisitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import NUM_BANDS, MSICube

#: Sentinel-2 L1C DN-to-reflectance divisor.
DEFAULT_SCALE = 10000.0

#: Samples whose pre-clip mean exceeds this are considered saturated.
SATURATION_MEAN_LIMIT = 0.9


@dataclass(frozen=True)
class RawCube:
    """13-band raster of raw digital numbers (finite, non-negative)."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[0] != NUM_BANDS:
            raise ValueError(f"RawCube wants shape [{NUM_BANDS}, H, W], got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("RawCube: values must be finite")
        if arr.size and arr.min() < 0:
            raise ValueError("RawCube: digital numbers must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def scale_raw(raw: RawCube, scale: float = DEFAULT_SCALE) -> np.ndarray:
    """Divide digital numbers by ``scale`` without clipping (may exceed 1)."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return raw.values / scale


def normalize_raw(raw: RawCube, scale: float = DEFAULT_SCALE) -> MSICube:
    """Convert digital numbers to reflectance: ``clip(raw / scale, 0, 1)``."""
    return MSICube(np.clip(scale_raw(raw, scale), 0.0, 1.0))


def saturation_check(cube_pre_clip: np.ndarray) -> bool:
    """Accept or reject a sample from its pre-clip scaled values.

    Returns True (accept) unless the mean over all elements is strictly
    greater than :data:`SATURATION_MEAN_LIMIT`; a mean of exactly 0.9 is
    accepted.
    """
    arr = np.asarray(cube_pre_clip, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("saturation_check: values must be finite")
    return float(arr.mean()) <= SATURATION_MEAN_LIMIT
