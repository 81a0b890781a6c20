"""Stage two: lift a completed RGB image to all 13 bands.

A randomly initialized network is fit per image against a target that
is fully known in the RGB channels (the inpainted image) and known
outside the mask everywhere else. No training data is involved; the
cross-band structure comes from the network prior plus the visible
pixels.
"""

from __future__ import annotations

import numpy as np

from .data_model import RGB_BANDS, InpaintMask, MSICube, RGBImage, insert_rgb
from .dip.network import SkipNetConfig
from .dip.train import LossMask, TrainSpec, make_noise_input, train_dip
from .masking import composite_known


def build_completion_target(
    current_masked: MSICube, inpainted_rgb: RGBImage, mask: InpaintMask
) -> tuple[MSICube, LossMask]:
    """Assemble the optimization target and its per-channel loss mask.

    The RGB rows of the target carry the inpainted image with known
    pixels restored from the cube (so stage-two never trains against a
    backend's repaint of pixels we actually have). RGB channels count
    everywhere in the loss; the other ten bands count only where the
    mask is 0.
    """
    cube = current_masked.values
    if inpainted_rgb.values.shape[1:] != cube.shape[1:]:
        raise ValueError(
            f"rgb shape {inpainted_rgb.values.shape} does not match cube {cube.shape}")
    if mask.shape != cube.shape[1:]:
        raise ValueError(f"mask shape {mask.shape} does not match cube {cube.shape}")

    rgb_known_restored = np.where(
        mask.values[None] == 1, inpainted_rgb.values, cube[list(RGB_BANDS)])
    target = insert_rgb(current_masked, RGBImage(rgb_known_restored))

    lmask = np.broadcast_to(mask.values == 0, cube.shape).astype(np.float64).copy()
    lmask[list(RGB_BANDS)] = 1.0
    return target, LossMask(lmask)


def complete_msi(
    scene_current_masked: MSICube,
    rgb_source: RGBImage,
    mask: InpaintMask,
    spec: TrainSpec,
    config: SkipNetConfig,
) -> MSICube:
    """Fit the prior to the completion target and composite the result.

    The returned cube keeps every known pixel bit-identical to the
    input, takes masked RGB pixels verbatim from ``rgb_source``, and
    synthesizes only the masked pixels of the ten non-RGB bands.
    """
    target, lmask = build_completion_target(scene_current_masked, rgb_source, mask)
    net_input = make_noise_input(
        config.input_channels,
        scene_current_masked.height,
        scene_current_masked.width,
        spec.seed,
    )
    output, _ = train_dip(config, net_input, target.values, lmask, spec)
    synthesized = insert_rgb(MSICube(np.clip(output, 0.0, 1.0)), rgb_source)
    return composite_known(synthesized, scene_current_masked, mask)
