"""End-to-end conformance against a live server in null mode.

Starts uvicorn on an ephemeral port in a thread and drives it with the
msinpaint client and harness, exactly as a real deployment would be.
"""

import threading
import time

import numpy as np
import pytest
import requests
import uvicorn

from diffusion_server import create_app
from msinpaint.backends import BackendRequest, InpaintParams, diffusion_client_inpaint
from msinpaint.data_model import InpaintMask, RGBImage
from msinpaint.dip.network import SkipNetConfig
from msinpaint.dip.train import TrainSpec
from msinpaint.harness import ExperimentConfig, MaskSpec, run_pipeline
from msinpaint.synthdata import write_dataset

TINY_NET = SkipNetConfig(input_channels=13, scales=2, down_channels=(8, 12),
                         skip_channels=2, out_channels=13)


@pytest.fixture(scope="module")
def server_url():
    config = uvicorn.Config(create_app("null"), host="127.0.0.1", port=0,
                            log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("uvicorn did not start within 15s")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5.0)


def test_live_health(server_url):
    r = requests.get(server_url + "/health", timeout=10)
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_live_client_roundtrip(server_url):
    rng = np.random.default_rng(11)
    image = RGBImage(rng.uniform(0.0, 1.0, size=(3, 16, 16)))
    mask_values = np.zeros((16, 16), dtype=np.uint8)
    mask_values[3:8, 4:10] = 1
    request = BackendRequest(image=image, mask=InpaintMask(mask_values),
                             control=None, params=InpaintParams())
    out = diffusion_client_inpaint(server_url, request)
    assert out.values.shape == (3, 16, 16)
    known = mask_values == 0
    err_known = np.abs(out.values - image.values)[:, known].max()
    assert err_known <= 1.0 / 255.0
    # masked pixels were actually rewritten by the server
    assert np.abs(out.values - image.values)[:, ~known].max() > 0.01


def test_protocol_conformance(server_url, tmp_path_factory, record_verdict):
    t_start = time.monotonic()

    # health
    h = requests.get(server_url + "/health", timeout=10)
    health_ok = h.status_code == 200 and h.json().get("status") == "ok"

    # malformed request: truncated base64 must come back as 400 + error
    rng = np.random.default_rng(4)
    image = RGBImage(rng.uniform(0.0, 1.0, size=(3, 16, 16)))
    empty = InpaintMask(np.zeros((16, 16), dtype=np.uint8))
    from msinpaint.backends import encode_request
    body = encode_request(BackendRequest(image=image, mask=empty,
                                         control=None, params=InpaintParams()))
    b64 = body["image_png_b64"]
    body["image_png_b64"] = b64[:len(b64) // 2 // 4 * 4]
    r = requests.post(server_url + "/inpaint", json=body, timeout=10)
    bad_request_ok = r.status_code == 400 and "error" in r.json()

    # empty mask: the client must get its own image back, up to the
    # 8-bit quantization the wire format imposes
    out = diffusion_client_inpaint(
        server_url, BackendRequest(image=image, mask=empty, control=None,
                                   params=InpaintParams()))
    identity_err = float(np.abs(out.values - image.values).max())
    identity_ok = identity_err <= 1.0 / 255.0

    # full two-stage run on 2 synthetic samples through the live server
    root = tmp_path_factory.mktemp("e2e")
    dataset = root / "data"
    write_dataset(dataset, 2, h=16, w=16, seed=77)
    config = ExperimentConfig(
        dataset_dir=str(dataset),
        methods=("sd-inpaint", "edge-guided"),
        output_dir=str(root / "out"),
        mask=MaskSpec(coverage=0.25),
        backend_endpoint=server_url,
        train_spec=TrainSpec(steps=25),
        skip_config=TINY_NET,
        seed=5,
    )
    result = run_pipeline(config)
    run_ok = (result.exit_code == 0 and not result.failures
              and len(result.reports) == 4
              and all(np.isfinite([rep.ssim_whole, rep.ssim_mask,
                                   rep.rmse_whole, rep.rmse_mask]).all()
                      for rep in result.reports))

    elapsed = time.monotonic() - t_start
    ok = health_ok and bad_request_ok and identity_ok and run_ok
    record_verdict(
        ok, "protocol conformance (live null server)",
        f"health { 'ok' if health_ok else 'FAILED' }, "
        f"truncated-b64 400 {'ok' if bad_request_ok else 'FAILED'}, "
        f"empty-mask identity err {identity_err:.2e} <= 3.93e-03, "
        f"two-stage run 2 samples x 2 methods exit={result.exit_code} "
        f"reports={len(result.reports)}, {elapsed:.1f} s")
    assert health_ok
    assert bad_request_ok
    assert identity_ok
    assert run_ok, (result.exit_code, result.failures, len(result.reports))
