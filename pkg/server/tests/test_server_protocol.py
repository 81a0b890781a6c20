"""Protocol-level tests for the server, run in-process via TestClient."""

import base64
import io
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

import diffusion_server.app as app_module
from diffusion_server import create_app


def _png_b64(arr):
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _decode(b64):
    return np.asarray(Image.open(io.BytesIO(base64.b64decode(b64))))


def _image(h=16, w=16, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)


def _rect_mask(h=16, w=16):
    m = np.zeros((h, w), dtype=np.uint8)
    m[4:9, 5:11] = 255
    return m


def _body(image, mask, **over):
    body = {
        "image_png_b64": _png_b64(image),
        "mask_png_b64": _png_b64(mask),
        "prompt": "a cloud-free satellite image",
        "negative_prompt": "",
        "text_guidance_scale": 1.0,
        "num_steps": 20,
        "edge_guidance_scale": 0.5,
        "seed": 3,
    }
    body.update(over)
    return body


def blur_ref(image):
    """5x5 box blur with edge-replicating padding, plain loops."""
    img = image.astype(np.float64) / 255.0
    pad = np.pad(img, ((2, 2), (2, 2), (0, 0)), mode="symmetric")
    out = np.zeros_like(img)
    for i in range(image.shape[0]):
        for j in range(image.shape[1]):
            out[i, j] = pad[i:i + 5, j:j + 5].mean(axis=(0, 1))
    return out


@pytest.fixture()
def client():
    with TestClient(create_app("null")) as c:
        yield c


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    payload = r.json()
    assert payload["status"] == "ok"
    assert payload["model_info"] == "null-blur-5x5"


def test_null_blur_matches_hand_oracle(client):
    image, mask = _image(seed=2), _rect_mask()
    r = client.post("/inpaint", json=_body(image, mask))
    assert r.status_code == 200
    out = _decode(r.json()["image_png_b64"])
    assert out.shape == image.shape and out.dtype == np.uint8

    ref = blur_ref(image)
    expected = image.copy()
    fill = mask >= 128
    expected[fill] = np.clip(np.rint(ref[fill] * 255.0), 0, 255).astype(np.uint8)
    # window means are k/(255*25), never half-integer in 255ths, so
    # rounding is unambiguous and the match must be exact
    assert np.array_equal(out, expected)
    assert np.array_equal(out[~fill], image[~fill])
    assert r.json()["model_info"] == "null-blur-5x5"


def test_empty_mask_identity(client):
    image = _image(seed=5)
    mask = np.zeros((16, 16), dtype=np.uint8)
    r = client.post("/inpaint", json=_body(image, mask))
    assert r.status_code == 200
    out = _decode(r.json()["image_png_b64"])
    assert np.array_equal(out, image)


def test_deterministic(client):
    body = _body(_image(seed=9), _rect_mask())
    a = client.post("/inpaint", json=body)
    b = client.post("/inpaint", json=body)
    assert a.json()["image_png_b64"] == b.json()["image_png_b64"]


def test_control_image_accepted(client):
    image, mask = _image(), _rect_mask()
    control = np.zeros((16, 16), dtype=np.uint8)
    r = client.post("/inpaint", json=_body(image, mask, control_png_b64=_png_b64(control)))
    assert r.status_code == 200

    bad = np.zeros((8, 8), dtype=np.uint8)
    r = client.post("/inpaint", json=_body(image, mask, control_png_b64=_png_b64(bad)))
    assert r.status_code == 400
    assert "control" in r.json()["error"]


def test_malformed_json_is_400(client):
    r = client.post("/inpaint", content=b"{definitely not json",
                    headers={"content-type": "application/json"})
    assert r.status_code == 400
    assert "error" in r.json()


def test_truncated_base64_is_400(client):
    body = _body(_image(), _rect_mask())
    b64 = body["image_png_b64"]
    # cut the payload in half (keeping valid b64 alignment) so the PNG
    # stream itself is incomplete, not just missing its IEND chunk
    body["image_png_b64"] = b64[:len(b64) // 2 // 4 * 4]
    r = client.post("/inpaint", json=body)
    assert r.status_code == 400
    assert "error" in r.json()

    body["image_png_b64"] = b64[:-5]  # misaligned: not decodable base64
    r = client.post("/inpaint", json=body)
    assert r.status_code == 400
    assert "error" in r.json()


def test_missing_field_is_400(client):
    body = _body(_image(), _rect_mask())
    del body["mask_png_b64"]
    r = client.post("/inpaint", json=body)
    assert r.status_code == 400
    assert "mask_png_b64" in r.json()["error"]


def test_shape_mismatch_is_400(client):
    r = client.post("/inpaint", json=_body(_image(16, 16), _rect_mask(8, 8)))
    assert r.status_code == 400
    assert "shape" in r.json()["error"]


def test_not_an_image_is_400(client):
    body = _body(_image(), _rect_mask())
    body["image_png_b64"] = base64.b64encode(b"hello world").decode("ascii")
    r = client.post("/inpaint", json=body)
    assert r.status_code == 400


@pytest.mark.parametrize("field,value", [
    ("text_guidance_scale", "high"),
    ("num_steps", 0),
    ("num_steps", "many"),
    ("seed", None),
    ("prompt", 7),
])
def test_bad_parameter_is_400(client, field, value):
    body = _body(_image(), _rect_mask())
    body[field] = value
    r = client.post("/inpaint", json=body)
    assert r.status_code == 400
    assert "error" in r.json()


def test_wrong_method_rejected(client):
    assert client.get("/inpaint").status_code == 405
    assert client.post("/health").status_code == 405


def test_real_mode_without_weights_is_503(tmp_path):
    for model_dir in (None, str(tmp_path / "nowhere")):
        with TestClient(create_app("real", model_dir=model_dir)) as c:
            h = c.get("/health")
            assert h.status_code == 200 and h.json()["status"] == "ok"
            r = c.post("/inpaint", json=_body(_image(), _rect_mask()))
            assert r.status_code == 503
            assert "weights" in r.json()["error"] or "not found" in r.json()["error"]


def test_internal_error_is_500(client, monkeypatch):
    def boom(image, mask):
        raise RuntimeError("scratch disk full")

    monkeypatch.setattr(app_module, "null_inpaint", boom)
    r = client.post("/inpaint", json=_body(_image(), _rect_mask()))
    assert r.status_code == 500
    assert "scratch disk full" in r.json()["error"]


def test_mode_validated():
    with pytest.raises(ValueError):
        create_app("bogus")


def test_health_not_blocked_by_generation(client, monkeypatch):
    def slow(image, mask):
        time.sleep(0.8)
        return image

    monkeypatch.setattr(app_module, "null_inpaint", slow)
    results = {}

    def work():
        results["inpaint"] = client.post("/inpaint", json=_body(_image(), _rect_mask()))

    t = threading.Thread(target=work)
    t.start()
    time.sleep(0.2)  # let the generation start and take the lock
    t0 = time.monotonic()
    h = client.get("/health")
    dt = time.monotonic() - t0
    t.join()
    assert h.status_code == 200
    assert dt < 0.5, f"/health took {dt:.2f}s while a generation was running"
    assert results["inpaint"].status_code == 200


def test_concurrent_generations_queue(client, monkeypatch):
    def slow(image, mask):
        time.sleep(0.35)
        return image

    monkeypatch.setattr(app_module, "null_inpaint", slow)
    results = []

    def work():
        results.append(client.post("/inpaint", json=_body(_image(), _rect_mask())))

    threads = [threading.Thread(target=work) for _ in range(2)]
    t0 = time.monotonic()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    elapsed = time.monotonic() - t0
    assert all(r.status_code == 200 for r in results)
    # the lock serializes the two generations
    assert elapsed >= 0.6, f"two generations overlapped ({elapsed:.2f}s)"
