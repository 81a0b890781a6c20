import struct

import numpy as np
import pytest

from msinpaint.errors import (
    TensorCorruptionError,
    TensorFormatError,
    UnsupportedTensorError,
)
from msinpaint.npyio import load_tensor, save_tensor


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    for i, shape in enumerate([(), (1,), (7,), (3, 4), (13, 8, 8), (2, 1, 3, 2)]):
        arr = rng.standard_normal(shape)
        path = tmp_path / f"t{i}.npy"
        save_tensor(arr, path)
        back = load_tensor(path)
        assert back.dtype == np.float64
        assert back.shape == arr.shape
        assert np.array_equal(back, arr)


def test_numpy_reads_our_files(tmp_path):
    # independent decoder oracle
    rng = np.random.default_rng(1)
    arr = rng.uniform(-5, 5, size=(4, 6, 3))
    save_tensor(arr, tmp_path / "a.npy")
    assert np.array_equal(np.load(tmp_path / "a.npy"), arr)


def test_we_read_numpy_files(tmp_path):
    rng = np.random.default_rng(2)
    arr = rng.standard_normal((5, 7))
    np.save(tmp_path / "f8.npy", arr)
    assert np.array_equal(load_tensor(tmp_path / "f8.npy"), arr)

    np.save(tmp_path / "f4.npy", arr.astype(np.float32))
    back = load_tensor(tmp_path / "f4.npy")
    assert back.dtype == np.float64
    # float32 -> float64 upcast is exact
    assert np.array_equal(back, arr.astype(np.float32).astype(np.float64))


def test_hand_built_header(tmp_path):
    data = np.array([[[1.5, -2.0], [0.25, 3.0]]], dtype="<f8")
    header = "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2, 2), }"
    preamble = 8 + 2 + len(header) + 1
    header = header + " " * (64 - preamble % 64 if preamble % 64 else 0) + "\n"
    blob = (b"\x93NUMPY\x01\x00" + struct.pack("<H", len(header))
            + header.encode("latin1") + data.tobytes())
    (tmp_path / "hand.npy").write_bytes(blob)
    assert np.array_equal(load_tensor(tmp_path / "hand.npy"), data)


def test_saved_preamble_is_aligned(tmp_path):
    for shape in [(3,), (13, 64, 64), (2, 2, 2, 2)]:
        save_tensor(np.zeros(shape), tmp_path / "a.npy")
        blob = (tmp_path / "a.npy").read_bytes()
        assert blob[:6] == b"\x93NUMPY"
        assert blob[6:8] == b"\x01\x00"
        hlen = struct.unpack("<H", blob[8:10])[0]
        assert (10 + hlen) % 64 == 0
        assert blob[10 + hlen - 1:10 + hlen] == b"\n"


def test_rejects_integer_dtype(tmp_path):
    np.save(tmp_path / "i8.npy", np.arange(6).reshape(2, 3))
    with pytest.raises(UnsupportedTensorError):
        load_tensor(tmp_path / "i8.npy")


def test_rejects_fortran_order(tmp_path):
    np.save(tmp_path / "f.npy", np.asfortranarray(np.random.default_rng(3).random((4, 5))))
    with pytest.raises(UnsupportedTensorError):
        load_tensor(tmp_path / "f.npy")


def test_rejects_bad_magic(tmp_path):
    (tmp_path / "bad.npy").write_bytes(b"NOTANPYFILE" + b"\x00" * 64)
    with pytest.raises(TensorFormatError):
        load_tensor(tmp_path / "bad.npy")


def test_rejects_version_2(tmp_path):
    with open(tmp_path / "v2.npy", "wb") as fh:
        np.lib.format.write_array(fh, np.zeros((3, 3)), version=(2, 0))
    with pytest.raises(TensorFormatError):
        load_tensor(tmp_path / "v2.npy")


def test_truncated_payload(tmp_path):
    save_tensor(np.ones((8, 8)), tmp_path / "t.npy")
    blob = (tmp_path / "t.npy").read_bytes()
    (tmp_path / "t.npy").write_bytes(blob[:-16])
    with pytest.raises(TensorCorruptionError):
        load_tensor(tmp_path / "t.npy")


def test_refuses_nonfinite_on_save(tmp_path):
    arr = np.ones((2, 2))
    arr[0, 0] = np.nan
    with pytest.raises(ValueError):
        save_tensor(arr, tmp_path / "nan.npy")
    arr[0, 0] = np.inf
    with pytest.raises(ValueError):
        save_tensor(arr, tmp_path / "inf.npy")
