"""RGB inpainting backends: the call contract, a mock, an HTTP client,
and the single-stage whole-cube baselines.

A backend is any callable taking a :class:`BackendRequest` and
returning an :class:`RGBImage` of the same size. Callers composite the
result over the known pixels themselves, so backends are free to
repaint the whole frame.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import requests
from PIL import Image
from scipy.ndimage import uniform_filter

from .data_model import InpaintMask, MSICube, RGBImage, ScenePair
from .dip.network import SkipNetConfig
from .dip.train import TrainSpec, make_noise_input, train_dip
from .errors import BackendProtocolError, BackendServerError, BackendTransportError
from .guidance import EdgeMap
from .masking import FILL_MODES, composite_known

DEFAULT_PROMPT = "a cloud-free satellite image"


@dataclass(frozen=True)
class InpaintParams:
    """Knobs forwarded to the RGB inpainting backend."""

    prompt: str = DEFAULT_PROMPT
    negative_prompt: str = ""
    text_guidance_scale: float = 1.0
    num_steps: int = 20
    edge_guidance_scale: float = 0.5
    mask_fill_mode: str = "historical"
    seed: int = 0

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError(f"num_steps must be >= 1, got {self.num_steps}")
        if self.text_guidance_scale < 0 or self.edge_guidance_scale < 0:
            raise ValueError("guidance scales must be >= 0")
        if self.mask_fill_mode not in FILL_MODES:
            raise ValueError(f"mask_fill_mode must be one of {FILL_MODES}")


@dataclass(frozen=True)
class BackendRequest:
    """One inpainting job: mask-filled image, mask, optional edge control."""

    image: RGBImage
    mask: InpaintMask
    control: EdgeMap | None = None
    params: InpaintParams = field(default_factory=InpaintParams)

    def __post_init__(self):
        hw = self.image.values.shape[1:]
        if self.mask.shape != hw:
            raise ValueError(
                f"mask shape {self.mask.shape} does not match image {hw}")
        if self.control is not None and self.control.values.shape[1:] != hw:
            raise ValueError(
                f"control shape {self.control.values.shape[1:]} does not match image {hw}")


Backend = Callable[[BackendRequest], RGBImage]


def mock_inpaint(request: BackendRequest, blend: float = 1.0) -> RGBImage:
    """Deterministic stand-in for the diffusion service.

    Masked pixels become blend * image + (1 - blend) * (5x5 box blur of
    the image); known pixels pass through. With blend 1.0 and a
    historical fill this just hands the historical RGB back, which is a
    surprisingly strong baseline on slowly changing scenes.
    """
    if not 0.0 <= blend <= 1.0:
        raise ValueError(f"blend must be in [0, 1], got {blend}")
    img = request.image.values
    blurred = uniform_filter(img, size=(1, 5, 5), mode="reflect")
    synthesized = blend * img + (1.0 - blend) * blurred
    out = np.where(request.mask.values[None] == 1, synthesized, img)
    return RGBImage(np.clip(out, 0.0, 1.0))


def _to_png_b64(array: np.ndarray, mode: str) -> str:
    """Quantize [0,1] planes to 8 bit and return base64-encoded PNG bytes."""
    quantized = np.round(np.asarray(array) * 255.0).astype(np.uint8)
    if mode == "RGB":
        quantized = quantized.transpose(1, 2, 0)
    image = Image.fromarray(quantized, mode=mode)
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _from_png_b64(payload: str, mode: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
        image = Image.open(io.BytesIO(raw))
        image.load()
    except Exception as exc:
        raise BackendProtocolError(f"undecodable image payload: {exc}") from exc
    if image.mode != mode:
        raise BackendProtocolError(
            f"expected {mode} image, server sent {image.mode}")
    arr = np.asarray(image, dtype=np.float64) / 255.0
    if mode == "RGB":
        arr = arr.transpose(2, 0, 1)
    return arr


def encode_request(request: BackendRequest) -> dict:
    """Build the JSON body for the wire protocol."""
    p = request.params
    body = {
        "image_png_b64": _to_png_b64(request.image.values, "RGB"),
        "mask_png_b64": _to_png_b64(request.mask.values, "L"),
        "prompt": p.prompt,
        "negative_prompt": p.negative_prompt,
        "text_guidance_scale": p.text_guidance_scale,
        "num_steps": p.num_steps,
        "edge_guidance_scale": p.edge_guidance_scale,
        "seed": p.seed,
    }
    if request.control is not None:
        body["control_png_b64"] = _to_png_b64(request.control.values[0], "L")
    return body


def diffusion_client_inpaint(
    endpoint: str, request: BackendRequest, timeout: float = 120.0
) -> RGBImage:
    """Send one inpainting job to a remote diffusion service.

    Never retries: exactly one POST per call. Images cross the wire as
    8-bit PNG, so a round trip costs at most 1/255 per channel; known
    pixels are restored at full precision by the caller's composite.
    """
    url = endpoint.rstrip("/") + "/inpaint"
    try:
        response = requests.post(url, json=encode_request(request), timeout=timeout)
    except requests.RequestException as exc:
        raise BackendTransportError(f"POST {url} failed: {exc}") from exc

    if not 200 <= response.status_code < 300:
        try:
            message = response.json().get("error", response.text)
        except ValueError:
            message = response.text
        raise BackendServerError(response.status_code, message)

    try:
        payload = response.json()
    except ValueError as exc:
        raise BackendProtocolError("response body is not JSON") from exc
    if "image_png_b64" not in payload:
        raise BackendProtocolError("response lacks image_png_b64")
    arr = _from_png_b64(payload["image_png_b64"], "RGB")
    if arr.shape != request.image.values.shape:
        raise BackendProtocolError(
            f"server returned shape {arr.shape}, "
            f"expected {request.image.values.shape}")
    return RGBImage(arr)


def direct_dip_inpaint(
    scene: ScenePair,
    mask: InpaintMask,
    use_historical: bool,
    spec: TrainSpec,
    config: SkipNetConfig,
) -> MSICube:
    """Single-stage baseline: fit all 13 bands at once from the known pixels.

    With ``use_historical`` the network input is the historical cube
    instead of noise, which conditions the prior on a plausible scene.
    """
    current = scene.current.values
    if use_historical:
        net_input = scene.historical.values
        if config.input_channels != net_input.shape[0]:
            config = replace(config, input_channels=net_input.shape[0])
    else:
        net_input = make_noise_input(
            config.input_channels, scene.current.height, scene.current.width, spec.seed)
    lmask = np.broadcast_to(mask.values == 0, current.shape).astype(np.float64)
    output, _ = train_dip(config, net_input, current, lmask, spec)
    return composite_known(MSICube(np.clip(output, 0.0, 1.0)), scene.current, mask)
