"""Deterministic synthetic multi-spectral scene pairs.

Real Sentinel-2 archives are far too heavy for a test suite, so this
module fabricates scene pairs with the two statistical properties the
pipeline actually relies on:

- all 13 bands are squashed affine mixtures of three shared smooth
  latent fields, so the RGB bands carry information about every other
  band (what makes RGB-to-MSI completion work at all);
- the historical cube is the current cube under a gentle multiplicative
  brightness field and a 1-pixel shift, so historical guidance is
  informative without being the answer.

Everything is a pure function of (h, w, seed). The mixing constants are
fixed so thresholds asserted against this data stay stable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.special import expit

from .data_model import MSICube, ScenePair
from .npyio import save_tensor
from .preprocess import DEFAULT_SCALE

#: Per-band loadings on the three latent fields. The first latent is shared
#: at full weight by every band, which keeps cross-band correlations high.
BAND_MIX = np.array(
    [
        (1.0, 0.30, -0.15),  # B01
        (1.0, 0.25, -0.10),  # B02
        (1.0, 0.20, -0.05),  # B03
        (1.0, 0.15, 0.05),   # B04
        (1.0, 0.10, 0.12),   # B05
        (1.0, 0.05, 0.20),   # B06
        (1.0, -0.05, 0.25),  # B07
        (1.0, -0.10, 0.30),  # B08
        (1.0, -0.15, 0.28),  # B8A
        (1.0, -0.20, 0.20),  # B09
        (1.0, -0.25, 0.10),  # B10
        (1.0, 0.28, 0.22),   # B11
        (1.0, -0.30, -0.20), # B12
    ]
)

#: Per-band offsets applied before squashing, spreading band means apart.
BAND_OFFSET = np.linspace(-0.35, 0.35, 13)

#: Slope of the squashing nonlinearity.
MIX_GAIN = 1.1

#: Peak amplitude of the historical brightness modulation.
BRIGHTNESS_AMPLITUDE = 0.1

#: Latent correlation length as a fraction of image height.
CORRELATION_FRACTION = 1 / 8

_MIN_SIZE = 16


def _smooth_field(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    field = gaussian_filter(rng.standard_normal((h, w)), sigma=h * CORRELATION_FRACTION)
    field -= field.mean()
    std = field.std()
    return field / std if std > 0 else field


def generate_scene_pair(h: int, w: int, seed: int) -> ScenePair:
    """Build a (current, historical) cube pair, deterministic in ``seed``.

    Sizes must be at least 16 and divisible by 16 so the pair feeds the
    default skip network without resizing.
    """
    if h < _MIN_SIZE or w < _MIN_SIZE or h % _MIN_SIZE or w % _MIN_SIZE:
        raise ValueError(f"scene size must be a multiple of {_MIN_SIZE}, got {h}x{w}")
    rng = np.random.default_rng(seed)
    latents = np.stack([_smooth_field(rng, h, w) for _ in range(3)])

    mixed = np.tensordot(BAND_MIX, latents, axes=(1, 0))
    current = expit(MIX_GAIN * (mixed + BAND_OFFSET[:, None, None]))

    brightness = 1.0 + BRIGHTNESS_AMPLITUDE * np.clip(_smooth_field(rng, h, w) / 2.5, -1.0, 1.0)
    historical = np.clip(np.roll(current, (1, 1), axis=(1, 2)) * brightness, 0.0, 1.0)

    return ScenePair(current=MSICube(current), historical=MSICube(historical))


def write_dataset(
    out_dir: str | Path,
    n_samples: int,
    h: int = 64,
    w: int = 64,
    seed: int = 0,
    scale: float = DEFAULT_SCALE,
) -> list[Path]:
    """Emit ``n_samples`` scene pairs in the on-disk layout the harness ingests.

    Each ``sample_###`` directory holds ``s2.npy`` and ``s2_historical.npy``
    as raw digital numbers (reflectance times ``scale``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(n_samples):
        pair = generate_scene_pair(h, w, seed + i)
        sample_dir = out / f"sample_{i:03d}"
        sample_dir.mkdir(exist_ok=True)
        save_tensor(pair.current.values * scale, sample_dir / "s2.npy")
        save_tensor(pair.historical.values * scale, sample_dir / "s2_historical.npy")
        written.append(sample_dir)
    return written
