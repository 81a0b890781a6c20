"""Stage two on its own: lift a known-good RGB to all 13 bands.

Feeding the true RGB channels (the "ideal" setting) isolates the
question the second stage answers: given perfect visible bands inside
the mask, how well can the other ten be reconstructed? The answer sets
the ceiling for any real RGB backend.
"""

import numpy as np

from msinpaint.data_model import RGB_BANDS, extract_rgb
from msinpaint.dip.network import SkipNetConfig
from msinpaint.dip.train import TrainSpec
from msinpaint.masking import apply_fill, generate_mask
from msinpaint.metrics import evaluate_sample, rmse
from msinpaint.rgb2msi import build_completion_target, complete_msi
from msinpaint.synthdata import generate_scene_pair

scene = generate_scene_pair(64, 64, seed=33)
mask = generate_mask(64, 64, coverage=0.25, kind="rect", seed=5)
blanked = apply_fill(scene, mask, "blank")
true_rgb = extract_rgb(scene.current)

target, lmask = build_completion_target(blanked, true_rgb, mask)
n_rgb = int(lmask.values[list(RGB_BANDS)].sum())
n_other = int(lmask.values.sum()) - n_rgb
print(f"loss mask: {n_rgb} RGB pixels (everywhere) + {n_other} known non-RGB pixels")

config = SkipNetConfig(input_channels=13, scales=3, down_channels=(16, 32, 64),
                       skip_channels=4, out_channels=13)
out = complete_msi(blanked, true_rgb, mask, TrainSpec(steps=300, seed=0), config)
rep = evaluate_sample(out, scene.current, mask)
print(f"ideal-rgb completion: mask SSIM={rep.ssim_mask:.3f} mask RMSE={rep.rmse_mask:.4f}")

# compare against filling each band's hole with its known-region mean
baseline = scene.current.values.copy()
inside = mask.values == 1
for band in range(13):
    baseline[band, inside] = baseline[band, ~inside].mean()
base = rmse(baseline, scene.current.values, region=mask.values)
print(f"per-band mean fill:   mask RMSE={base:.4f}")
print(f"the prior uses cross-band structure the flat fill cannot")

non_rgb = [b for b in range(13) if b not in RGB_BANDS]
per_band = [float(np.sqrt(np.mean((out.values[b, inside]
                                   - scene.current.values[b, inside]) ** 2)))
            for b in non_rgb]
print(f"worst reconstructed non-RGB band RMSE: {max(per_band):.4f}")
