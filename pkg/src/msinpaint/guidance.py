"""Structural edge guidance from RGB imagery.

The built-in detector is plain Sobel gradient magnitude on the luma
channel, normalized to peak at 1.0. It stands in for a learned boundary
detector: the backend wire protocol also accepts a precomputed control
image, so an external edge service can be swapped in without touching
this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import sobel

from .data_model import RGBImage, _check_unit_range, _frozen

#: Rec. 601 luma weights for (R, G, B).
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class EdgeMap:
    """Single-channel edge-strength image in [0, 1], shape [1, H, W]."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, np.float64)
        if arr.ndim != 3 or arr.shape[0] != 1:
            raise ValueError(f"EdgeMap wants shape [1, H, W], got {arr.shape}")
        _check_unit_range(arr, "EdgeMap")
        object.__setattr__(self, "values", arr)


def edge_map(rgb: RGBImage) -> EdgeMap:
    """Sobel gradient magnitude of the luma channel, peak-normalized.

    Borders are handled by reflection, so a constant image maps to an
    all-zero edge map and the result is invariant to global additive
    brightness shifts of the input.
    """
    r, g, b = rgb.values
    luma = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    gy = sobel(luma, axis=0, mode="reflect")
    gx = sobel(luma, axis=1, mode="reflect")
    magnitude = np.hypot(gx, gy)
    peak = magnitude.max()
    if peak > 0:
        magnitude /= peak
    return EdgeMap(magnitude[None])
