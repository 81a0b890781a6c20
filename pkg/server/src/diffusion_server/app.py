"""HTTP server implementing the RGB inpainting wire protocol.

The server accepts the same request shape the msinpaint client emits and
answers with a PNG-encoded completion.  Two modes exist:

* ``null``: no model is loaded.  The masked region of the request image is
  replaced by a 5x5 box blur of the image itself, known pixels pass through
  untouched.  Deterministic, dependency-light, intended for integration
  tests and protocol conformance checks.
* ``real``: a latent diffusion inpainting pipeline is loaded lazily from
  MODEL_DIR (plus an optional edge-conditioning model from
  CONTROL_MODEL_DIR).  When the weights or the runtime dependencies are
  absent the server stays up and reports 503 on /inpaint.

/health never waits on generation; /inpaint holds a per-process lock so at
most one generation runs at a time and concurrent requests queue.
"""

import base64
import binascii
import io
import json
import os
import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse
from PIL import Image
from scipy.ndimage import uniform_filter

MASK_THRESHOLD = 128  # mask is 8-bit gray, 255 marks pixels to fill
DEFAULT_EDGE_GUIDANCE = 0.5


class RequestError(ValueError):
    """Client-side protocol violation, maps to HTTP 400."""


class WeightsUnavailable(RuntimeError):
    """Real mode requested but the model cannot be loaded, maps to 503."""


def _decode_png_field(payload, field, mode):
    value = payload.get(field)
    if value is None:
        raise RequestError(f"missing required field {field!r}")
    if not isinstance(value, str):
        raise RequestError(f"field {field!r} must be a base64 string")
    try:
        raw = base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise RequestError(f"field {field!r} is not valid base64: {exc}")
    try:
        img = Image.open(io.BytesIO(raw))
        img.load()
    except Exception as exc:
        raise RequestError(f"field {field!r} does not decode as an image: {exc}")
    return np.asarray(img.convert(mode))


def _encode_png(arr):
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _number(payload, field, default, cast):
    value = payload.get(field, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RequestError(f"field {field!r} must be a number")
    return cast(value)


def parse_request(payload):
    """Validate a decoded /inpaint body and return the normalized pieces.

    Returns (image u8 HxWx3, mask u8 HxW, control u8 HxW or None, params dict).
    Raises RequestError on any protocol violation.
    """
    if not isinstance(payload, dict):
        raise RequestError("request body must be a JSON object")
    image = _decode_png_field(payload, "image_png_b64", "RGB")
    mask = _decode_png_field(payload, "mask_png_b64", "L")
    if image.shape[:2] != mask.shape:
        raise RequestError(
            f"mask shape {mask.shape} does not match image {image.shape[:2]}"
        )
    control = None
    if payload.get("control_png_b64") is not None:
        control = _decode_png_field(payload, "control_png_b64", "L")
        if control.shape != mask.shape:
            raise RequestError(
                f"control shape {control.shape} does not match image {image.shape[:2]}"
            )
    for field in ("prompt", "negative_prompt"):
        if not isinstance(payload.get(field, ""), str):
            raise RequestError(f"field {field!r} must be a string")
    params = {
        "prompt": payload.get("prompt", ""),
        "negative_prompt": payload.get("negative_prompt", ""),
        "text_guidance_scale": _number(payload, "text_guidance_scale", 7.5, float),
        "num_steps": _number(payload, "num_steps", 30, int),
        "edge_guidance_scale": _number(
            payload, "edge_guidance_scale", DEFAULT_EDGE_GUIDANCE, float
        ),
        "seed": _number(payload, "seed", 0, int),
    }
    if params["num_steps"] < 1:
        raise RequestError("num_steps must be >= 1")
    return image, mask, control, params


def null_inpaint(image, mask):
    """Fill masked pixels with a 5x5 box blur of the image, keep the rest.

    image: uint8 [H, W, 3], mask: uint8 [H, W] with 255 marking missing
    pixels.  Pure function of its inputs, so null mode is deterministic.
    """
    img = image.astype(np.float64) / 255.0
    blurred = uniform_filter(img, size=(5, 5, 1), mode="reflect")
    out = img.copy()
    fill = mask >= MASK_THRESHOLD
    out[fill] = blurred[fill]
    return np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)


class RealPipeline:
    """Lazy holder for a diffusers inpainting pipeline.

    Loading is deferred to the first /inpaint call so the server starts
    instantly and /health can report readiness without touching the disk.
    """

    def __init__(self, model_dir, control_model_dir):
        self.model_dir = model_dir
        self.control_model_dir = control_model_dir
        self._pipe = None
        self._load_lock = threading.Lock()

    @property
    def model_info(self):
        name = os.path.basename(os.path.normpath(self.model_dir)) if self.model_dir else "unset"
        if self.control_model_dir:
            name += "+control"
        return name

    def _load(self):
        if self.model_dir is None or not os.path.isdir(self.model_dir):
            raise WeightsUnavailable(
                f"model weights not found at MODEL_DIR={self.model_dir!r}"
            )
        try:
            import torch
            from diffusers import StableDiffusionInpaintPipeline
        except ImportError as exc:
            raise WeightsUnavailable(f"diffusion runtime not installed: {exc}")
        if self.control_model_dir is not None and not os.path.isdir(self.control_model_dir):
            raise WeightsUnavailable(
                "control model weights not found at "
                f"CONTROL_MODEL_DIR={self.control_model_dir!r}"
            )
        try:
            pipe = StableDiffusionInpaintPipeline.from_pretrained(
                self.model_dir, torch_dtype=torch.float32
            )
            if self.control_model_dir is not None:
                from diffusers import ControlNetModel

                pipe.controlnet = ControlNetModel.from_pretrained(
                    self.control_model_dir, torch_dtype=torch.float32
                )
        except Exception as exc:
            # unloadable checkpoints are a deployment problem, not an
            # internal error: report 503 so the client can fall back
            raise WeightsUnavailable(f"failed to load weights: {exc}")
        self._pipe = pipe

    def inpaint(self, image, mask, control, params):
        with self._load_lock:
            if self._pipe is None:
                self._load()
        import torch

        generator = torch.Generator("cpu").manual_seed(params["seed"])
        h, w = mask.shape
        kwargs = {
            "prompt": params["prompt"],
            "negative_prompt": params["negative_prompt"] or None,
            "image": Image.fromarray(image),
            "mask_image": Image.fromarray(mask),
            "guidance_scale": params["text_guidance_scale"],
            "num_inference_steps": params["num_steps"],
            "generator": generator,
            "height": h,
            "width": w,
        }
        if control is not None and getattr(self._pipe, "controlnet", None) is not None:
            kwargs["control_image"] = Image.fromarray(control)
            kwargs["controlnet_conditioning_scale"] = params["edge_guidance_scale"]
        result = self._pipe(**kwargs).images[0]
        out = np.asarray(result.convert("RGB"))
        if out.shape[:2] != (h, w):
            out = np.asarray(result.convert("RGB").resize((w, h), Image.BILINEAR))
        # the pipeline repaints everything; keep known pixels verbatim
        keep = mask < MASK_THRESHOLD
        merged = image.copy()
        merged[~keep] = out[~keep]
        return merged


def create_app(mode="null", model_dir=None, control_model_dir=None):
    if mode not in ("null", "real"):
        raise ValueError(f"mode must be 'null' or 'real', got {mode!r}")
    app = FastAPI(title="diffusion-server", docs_url=None, redoc_url=None)
    app.state.mode = mode
    app.state.generation_lock = threading.Lock()
    app.state.pipeline = (
        RealPipeline(model_dir, control_model_dir) if mode == "real" else None
    )

    def model_info():
        if mode == "null":
            return "null-blur-5x5"
        return f"real:{app.state.pipeline.model_info}"

    def generate(image, mask, control, params):
        # one generation in flight per process; queued callers block here,
        # in the threadpool, so the event loop (and /health) stays free
        with app.state.generation_lock:
            if mode == "null":
                return null_inpaint(image, mask)
            return app.state.pipeline.inpaint(image, mask, control, params)

    @app.get("/health")
    async def health():
        return {"status": "ok", "model_info": model_info()}

    @app.post("/inpaint")
    async def inpaint(request: Request):
        raw = await request.body()
        try:
            payload = json.loads(raw)
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return JSONResponse({"error": f"request body is not valid JSON: {exc}"}, 400)
        try:
            image, mask, control, params = parse_request(payload)
        except RequestError as exc:
            return JSONResponse({"error": str(exc)}, 400)
        try:
            result = await run_in_threadpool(generate, image, mask, control, params)
        except WeightsUnavailable as exc:
            return JSONResponse({"error": str(exc)}, 503)
        except Exception as exc:
            return JSONResponse({"error": f"generation failed: {exc}"}, 500)
        return {"image_png_b64": _encode_png(result), "model_info": model_info()}

    return app


def serve(port=8000, mode="null", model_dir=None, control_model_dir=None,
          host="127.0.0.1"):
    """Build the app and block serving it."""
    import uvicorn

    app = create_app(mode=mode, model_dir=model_dir,
                     control_model_dir=control_model_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
