"""Minimal NPY v1.0 reader/writer for float tensors.

The on-disk format is the plain NPY v1.0 container: magic ``\\x93NUMPY``,
version bytes ``0x01 0x00``, a little-endian uint16 header length, an
ASCII header dict with keys ``descr``/``fortran_order``/``shape`` padded
with spaces so the total preamble is a multiple of 64 bytes and ends in
``\\n``, followed by the raw C-order payload.

Reading accepts ``<f4`` and ``<f8`` payloads; writing always emits
``<f8``, so a save/load round trip is bit-exact. Anything else (other
dtypes, Fortran order, NPY v2/v3) is rejected with a typed error rather
than silently reinterpreted.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import TensorCorruptionError, TensorFormatError, UnsupportedTensorError

MAGIC = b"\x93NUMPY"
_HEADER_ALIGN = 64
_READ_DESCRS = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


def load_tensor(path: str | Path) -> np.ndarray:
    """Read one NPY v1.0 file into a float array (float32 payloads upcast to float64)."""
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:6] != MAGIC:
        raise TensorFormatError(f"{path}: not an NPY file (bad magic)")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise TensorFormatError(f"{path}: unsupported NPY version {major}.{minor}")
    (header_len,) = struct.unpack("<H", raw[8:10])
    header_end = 10 + header_len
    if len(raw) < header_end:
        raise TensorCorruptionError(f"{path}: truncated header")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise TensorFormatError(f"{path}: unparseable header") from exc
    if not isinstance(header, dict) or not {"descr", "fortran_order", "shape"} <= set(header):
        raise TensorFormatError(f"{path}: header missing required keys")

    descr = header["descr"]
    if descr not in _READ_DESCRS:
        raise UnsupportedTensorError(f"{path}: dtype {descr!r} not supported (want <f4 or <f8)")
    if header["fortran_order"]:
        raise UnsupportedTensorError(f"{path}: Fortran-ordered payloads not supported")
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise TensorFormatError(f"{path}: bad shape entry {shape!r}")

    dtype = _READ_DESCRS[descr]
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    need = count * dtype.itemsize
    payload = raw[header_end : header_end + need]
    if len(payload) < need:
        raise TensorCorruptionError(
            f"{path}: payload holds {len(payload)} bytes, header promises {need}"
        )
    arr = np.frombuffer(payload, dtype=dtype, count=count).reshape(shape)
    return arr.astype(np.float64, copy=True)


def save_tensor(array: np.ndarray, path: str | Path) -> None:
    """Write ``array`` as an NPY v1.0 file with an 8-byte float payload.

    Round trips bit-exactly through :func:`load_tensor`. Non-finite
    values are refused up front so no file is left behind.
    """
    # not ascontiguousarray: that would promote rank-0 arrays to shape (1,)
    arr = np.asarray(array, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("refusing to save non-finite values")
    header = {
        "descr": "<f8",
        "fortran_order": False,
        "shape": arr.shape,
    }
    header_text = (
        "{"
        + ", ".join(f"{k!r}: {header[k]!r}" for k in ("descr", "fortran_order", "shape"))
        + ", }"
    )
    # Pad so magic+version+length+header is a 64-byte multiple, '\n'-terminated.
    base = len(MAGIC) + 2 + 2 + len(header_text) + 1
    pad = (-base) % _HEADER_ALIGN
    header_bytes = (header_text + " " * pad + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([1, 0]))
        fh.write(struct.pack("<H", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(arr.tobytes(order="C"))
