"""Differentiable layer primitives (float64, CPU, single image).

Each layer is a tiny object with ``forward(x)`` and ``backward(gy)``;
``forward`` caches exactly what one subsequent ``backward`` needs.
Parameters live in a shared dict owned by the network, keyed by layer
name, and ``backward`` writes parameter gradients into a grads dict of
the same keys.

Convolutions use reflected-border padding realized as a precomputed
gather-index table (padding, im2col and the backward scatter all reuse
the same table, so the adjoint is exact by construction). Everything
here is checked against central finite differences in the test suite.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import expit


@lru_cache(maxsize=256)
def _conv_gather(cin: int, h: int, w: int, k: int, stride: int):
    """Flat source indices realizing reflect-pad + im2col for one geometry.

    Returns (indices [cin*k*k, L], out_h, out_w). indices[r, l] is the
    position in x.ravel() feeding row r of the patch matrix at output
    location l.
    """
    pad = (k - 1) // 2
    out_h = (h + 2 * pad - k) // stride + 1
    out_w = (w + 2 * pad - k) // stride + 1

    def reflect(idx, n):
        idx = np.where(idx < 0, -idx, idx)
        return np.where(idx >= n, 2 * n - 2 - idx, idx)

    oi = np.arange(out_h) * stride - pad
    oj = np.arange(out_w) * stride - pad
    di = np.arange(k)
    rows = reflect(oi[:, None] + di[None, :], h)          # [out_h, k]
    cols = reflect(oj[:, None] + di[None, :], w)          # [out_w, k]
    # index order (c, di, dj, oi, oj) to match kernel.reshape(cout, cin*k*k)
    spatial = rows[:, :, None, None] * w + cols[None, None, :, :]   # [out_h,k,out_w,k]
    spatial = spatial.transpose(1, 3, 0, 2).reshape(k * k, out_h * out_w)
    chan = (np.arange(cin) * (h * w))[:, None, None]
    idx = (chan + spatial[None]).reshape(cin * k * k, out_h * out_w)
    return np.ascontiguousarray(idx), out_h, out_w


@lru_cache(maxsize=64)
def _upsample_matrix(n: int) -> np.ndarray:
    """Dense [2n, n] bilinear x2 interpolation matrix (half-pixel centers)."""
    src = (np.arange(2 * n) + 0.5) / 2.0 - 0.5
    src = np.clip(src, 0.0, n - 1.0)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    t = src - lo
    mat = np.zeros((2 * n, n))
    rows = np.arange(2 * n)
    np.add.at(mat, (rows, lo), 1.0 - t)
    np.add.at(mat, (rows, hi), t)
    return mat


class Conv2d:
    """kxk convolution with reflect padding, stride 1 or 2, and bias."""

    def __init__(self, params: dict, name: str, stride: int = 1):
        self.params = params
        self.name = name
        self.stride = stride
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        weight = self.params[self.name + ".w"]
        bias = self.params[self.name + ".b"]
        cout, cin, k, _ = weight.shape
        _, h, w = x.shape
        idx, out_h, out_w = _conv_gather(cin, h, w, k, self.stride)
        patches = x.reshape(-1)[idx]                       # [cin*k*k, L]
        y = weight.reshape(cout, -1) @ patches + bias[:, None]
        self._cache = (patches, idx, x.shape)
        return y.reshape(cout, out_h, out_w)

    def backward(self, gy: np.ndarray, grads: dict) -> np.ndarray:
        patches, idx, x_shape = self._cache
        weight = self.params[self.name + ".w"]
        cout = weight.shape[0]
        gy2 = gy.reshape(cout, -1)
        grads[self.name + ".w"] = (gy2 @ patches.T).reshape(weight.shape)
        grads[self.name + ".b"] = gy2.sum(axis=1)
        gpatches = weight.reshape(cout, -1).T @ gy2
        gx = np.bincount(idx.reshape(-1), weights=gpatches.reshape(-1),
                         minlength=int(np.prod(x_shape)))
        return gx.reshape(x_shape)


class InstanceNorm:
    """Per-channel normalization over H x W with learned affine, eps 1e-5."""

    EPS = 1e-5

    def __init__(self, params: dict, name: str):
        self.params = params
        self.name = name
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        gamma = self.params[self.name + ".g"]
        beta = self.params[self.name + ".b"]
        mu = x.mean(axis=(1, 2), keepdims=True)
        var = x.var(axis=(1, 2), keepdims=True)
        istd = 1.0 / np.sqrt(var + self.EPS)
        xhat = (x - mu) * istd
        self._cache = (xhat, istd, gamma)
        return gamma[:, None, None] * xhat + beta[:, None, None]

    def backward(self, gy: np.ndarray, grads: dict) -> np.ndarray:
        xhat, istd, gamma = self._cache
        n = xhat.shape[1] * xhat.shape[2]
        grads[self.name + ".g"] = (gy * xhat).sum(axis=(1, 2))
        grads[self.name + ".b"] = gy.sum(axis=(1, 2))
        gxhat = gy * gamma[:, None, None]
        sum_g = gxhat.sum(axis=(1, 2), keepdims=True)
        sum_gx = (gxhat * xhat).sum(axis=(1, 2), keepdims=True)
        return istd * (gxhat - sum_g / n - xhat * sum_gx / n)


class LeakyReLU:
    def __init__(self, slope: float):
        self.slope = slope
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._cache = x > 0
        return np.where(self._cache, x, self.slope * x)

    def backward(self, gy: np.ndarray, grads: dict) -> np.ndarray:
        return np.where(self._cache, gy, self.slope * gy)


class BilinearUp2:
    """Separable bilinear x2 upsampling (a fixed linear map, exact adjoint)."""

    def __init__(self):
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        _, h, w = x.shape
        uh = _upsample_matrix(h)
        uw = _upsample_matrix(w)
        self._cache = (uh, uw)
        # y[c] = Uh @ x[c] @ Uw.T
        return np.einsum("ih,chw,jw->cij", uh, x, uw, optimize=True)

    def backward(self, gy: np.ndarray, grads: dict) -> np.ndarray:
        uh, uw = self._cache
        return np.einsum("ih,cij,jw->chw", uh, gy, uw, optimize=True)


class Sigmoid:
    def __init__(self):
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        y = expit(x)
        self._cache = y
        return y

    def backward(self, gy: np.ndarray, grads: dict) -> np.ndarray:
        y = self._cache
        return gy * y * (1.0 - y)


class Sequential:
    def __init__(self, *layers):
        self.layers = [l for l in layers if l is not None]

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, gy: np.ndarray, grads: dict) -> np.ndarray:
        for layer in reversed(self.layers):
            gy = layer.backward(gy, grads)
        return gy
