"""Mask generation, masked-region filling, and known-pixel compositing.

Two mask families cover the evaluation protocol: a single axis-aligned
rectangle of exact pixel count (the default), and an organic blob
obtained by thresholding a smoothed random field. Filling a masked
region before stage-1 inpainting either blanks it (0.0) or injects the
co-registered historical values, which is how structural information
reaches the generative model's input.

``composite_known`` is applied to every pipeline output so known pixels
always survive whatever a backend did to them.
"""

from __future__ import annotations

import math
from typing import TypeVar

import numpy as np
from scipy.ndimage import gaussian_filter

from .data_model import InpaintMask, MSICube, RGBImage, ScenePair
from .errors import DegenerateMaskError

MASK_KINDS = ("rect", "blob")
FILL_MODES = ("blank", "historical")

_Image = TypeVar("_Image", MSICube, RGBImage)


def generate_mask(h: int, w: int, coverage: float, kind: str = "rect", seed: int = 0) -> InpaintMask:
    """Build a deterministic inpainting mask with roughly ``coverage`` masked fraction.

    rect masks hit ``round(coverage * h * w)`` pixels exactly; blob masks
    keep the top-k cells of a Gaussian-smoothed noise field, which lands
    within one pixel of the requested count. Identical arguments always
    produce identical masks.
    """
    if kind not in MASK_KINDS:
        raise ValueError(f"unknown mask kind {kind!r}, want one of {MASK_KINDS}")
    if not 0.0 <= coverage <= 1.0:
        raise ValueError(f"coverage must lie in [0, 1], got {coverage}")
    if coverage > 0 and coverage * h * w < 1:
        raise DegenerateMaskError(
            f"coverage {coverage} on a {h}x{w} grid rounds to an empty mask"
        )

    mask = np.zeros((h, w), dtype=np.uint8)
    if coverage == 0.0:
        return InpaintMask(mask)
    if coverage == 1.0:
        return InpaintMask(np.ones((h, w), dtype=np.uint8))

    rng = np.random.default_rng(seed)
    area = int(round(coverage * h * w))
    if kind == "rect":
        _fill_rect(mask, area, h, w, rng)
    else:
        field = gaussian_filter(rng.standard_normal((h, w)), sigma=max(1.0, min(h, w) / 16.0))
        order = np.argsort(field, axis=None, kind="stable")
        mask.flat[order[-area:]] = 1
    return InpaintMask(mask)


def _fill_rect(mask: np.ndarray, area: int, h: int, w: int, rng: np.random.Generator) -> None:
    # Prefer an exact a*b == area factorization; otherwise take the smallest
    # enclosing rectangle and trim the excess off its last row.
    sides = [(a, area // a) for a in range(1, min(h, area) + 1) if area % a == 0 and area // a <= w]
    if sides:
        a, b = sides[int(rng.integers(len(sides)))]
        trim = 0
    else:
        a = min(h, max(math.ceil(area / w), round(math.sqrt(area))))
        b = min(w, math.ceil(area / a))
        while a * b < area:
            a += 1
        trim = a * b - area
    i0 = int(rng.integers(h - a + 1))
    j0 = int(rng.integers(w - b + 1))
    mask[i0 : i0 + a, j0 : j0 + b] = 1
    if trim:
        mask[i0 + a - 1, j0 + b - trim : j0 + b] = 0


def apply_fill(scene: ScenePair, mask: InpaintMask, mode: str) -> MSICube:
    """Replace masked pixels of the current cube with 0.0 or historical values.

    Known pixels (mask = 0) are passed through untouched in either mode.
    """
    if mode not in FILL_MODES:
        raise ValueError(f"unknown fill mode {mode!r}, want one of {FILL_MODES}")
    if mask.shape != (scene.current.height, scene.current.width):
        raise ValueError(
            f"mask shape {mask.shape} does not match scene "
            f"{(scene.current.height, scene.current.width)}"
        )
    where = mask.values.astype(bool)[None]
    if mode == "blank":
        fill = np.zeros_like(scene.current.values)
    else:
        fill = scene.historical.values
    return MSICube(np.where(where, fill, scene.current.values))


def composite_known(synthesized: _Image, original: _Image, mask: InpaintMask) -> _Image:
    """Take masked pixels from ``synthesized`` and known pixels from ``original``.

    Both inputs must be the same type (cube or RGB image) and shape; the
    result is that type. Known pixels come out bit-identical to
    ``original``, which makes the operation idempotent.
    """
    if type(synthesized) is not type(original):
        raise ValueError("composite_known wants two values of the same type")
    if synthesized.values.shape != original.values.shape:
        raise ValueError(
            f"shape mismatch: {synthesized.values.shape} vs {original.values.shape}"
        )
    if mask.shape != synthesized.values.shape[1:]:
        raise ValueError(
            f"mask shape {mask.shape} does not match image {synthesized.values.shape[1:]}"
        )
    where = mask.values.astype(bool)[None]
    out = np.where(where, synthesized.values, original.values)
    return type(synthesized)(out)
