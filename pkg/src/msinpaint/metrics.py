"""Masked and whole-image SSIM / RMSE, the measurement protocol of the toolkit.

SSIM uses the canonical settings: 11x11 Gaussian window (sigma 1.5),
K1 = 0.01, K2 = 0.03, dynamic range 1.0, reflected borders. The map is
always computed from full-image windows; the "mask" variant averages
that map over masked pixels only, so boundary context is kept. Channels
are aggregated by unweighted mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .data_model import InpaintMask, MSICube, RGB_BANDS

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1 = 0.01
K2 = 0.03
DYNAMIC_RANGE = 1.0

CHANNEL_SCOPES = ("all13", "rgb3")

_C1 = (K1 * DYNAMIC_RANGE) ** 2
_C2 = (K2 * DYNAMIC_RANGE) ** 2


def _gaussian_kernel() -> np.ndarray:
    offsets = np.arange(WINDOW_SIZE) - WINDOW_SIZE // 2
    kernel = np.exp(-(offsets**2) / (2.0 * WINDOW_SIGMA**2))
    return kernel / kernel.sum()


_KERNEL = _gaussian_kernel()


def _window_mean(a: np.ndarray) -> np.ndarray:
    out = correlate1d(a, _KERNEL, axis=1, mode="reflect")
    return correlate1d(out, _KERNEL, axis=2, mode="reflect")


def _as_region(region) -> np.ndarray | None:
    if region is None:
        return None
    values = region.values if isinstance(region, InpaintMask) else np.asarray(region)
    sel = values.astype(bool)
    if not sel.any():
        raise ValueError("metric region is empty")
    return sel


def _check_pair(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 3:
        raise ValueError(f"want two [C, H, W] arrays of one shape, got {x.shape} vs {y.shape}")
    return x, y


def ssim_map(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-pixel, per-channel SSIM map of two [C, H, W] arrays in [0, 1]."""
    x, y = _check_pair(x, y)
    for name, a in (("x", x), ("y", y)):
        if not np.all(np.isfinite(a)) or a.min() < 0 or a.max() > 1:
            raise ValueError(f"ssim input {name} must be finite and in [0, 1]")
    mu_x = _window_mean(x)
    mu_y = _window_mean(y)
    var_x = _window_mean(x * x) - mu_x * mu_x
    var_y = _window_mean(y * y) - mu_y * mu_y
    cov = _window_mean(x * y) - mu_x * mu_y
    return ((2.0 * mu_x * mu_y + _C1) * (2.0 * cov + _C2)) / (
        (mu_x * mu_x + mu_y * mu_y + _C1) * (var_x + var_y + _C2)
    )


def ssim(x: np.ndarray, y: np.ndarray, region: InpaintMask | np.ndarray | None = None) -> float:
    """Mean SSIM over all pixels, or over ``region``'s masked pixels if given.

    The map itself always sees full-image windows; the region only
    selects which map entries are averaged. Channels are averaged with
    equal weight afterwards.
    """
    smap = ssim_map(x, y)
    sel = _as_region(region)
    if sel is None:
        return float(smap.mean(axis=(1, 2)).mean())
    return float(smap[:, sel].mean(axis=1).mean())


def rmse(x: np.ndarray, y: np.ndarray, region: InpaintMask | np.ndarray | None = None) -> float:
    """Root mean squared error over selected pixels, pooled across channels."""
    x, y = _check_pair(x, y)
    sel = _as_region(region)
    diff = x - y if sel is None else x[:, sel] - y[:, sel]
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass(frozen=True)
class EvalReport:
    """Whole/mask SSIM and RMSE for one sample at one channel scope.

    ``method`` tags which pipeline produced the sample so reports from a
    mixed run can be aggregated per method.
    """

    ssim_whole: float
    ssim_mask: float
    rmse_whole: float
    rmse_mask: float
    channel_scope: str
    sample_id: str = ""
    method: str = ""

    def __post_init__(self):
        if self.channel_scope not in CHANNEL_SCOPES:
            raise ValueError(f"channel_scope must be one of {CHANNEL_SCOPES}")
        for name in ("ssim_whole", "ssim_mask", "rmse_whole", "rmse_mask"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("ssim_whole", "ssim_mask"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name} out of [-1, 1]: {v}")
        for name in ("rmse_whole", "rmse_mask"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def evaluate_sample(
    output: MSICube,
    truth: MSICube,
    mask: InpaintMask,
    scope: str = "all13",
    sample_id: str = "",
    method: str = "",
) -> EvalReport:
    """Score one reconstructed cube against ground truth at one channel scope."""
    if scope not in CHANNEL_SCOPES:
        raise ValueError(f"scope must be one of {CHANNEL_SCOPES}, got {scope!r}")
    if output.values.shape != truth.values.shape:
        raise ValueError("output and truth shapes differ")
    if scope == "rgb3":
        a = output.values[list(RGB_BANDS)]
        b = truth.values[list(RGB_BANDS)]
    else:
        a = output.values
        b = truth.values
    return EvalReport(
        ssim_whole=ssim(a, b),
        ssim_mask=ssim(a, b, region=mask),
        rmse_whole=rmse(a, b),
        rmse_mask=rmse(a, b, region=mask),
        channel_scope=scope,
        sample_id=sample_id,
        method=method,
    )
