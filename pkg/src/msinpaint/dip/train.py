"""Per-image optimization loop: masked MSE, Adam, and gradient verification.

A single run is fully determined by (config, input, target, loss mask,
TrainSpec): weights come from the TrainSpec seed, the loop is
sequential, and no global state is touched, so identical runs produce
bit-identical loss traces. A non-finite loss aborts with the step index instead of being
clipped away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError
from .network import NetworkState, SkipNet, SkipNetConfig, init_network


@dataclass(frozen=True)
class TrainSpec:
    """Optimization recipe: step count, learning rate, Adam constants, seed."""

    steps: int = 4000
    learning_rate: float = 0.02
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass(frozen=True)
class LossMask:
    """Per-channel binary map of pixels contributing to the loss; 1 = counted."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 3:
            raise ValueError(f"LossMask wants shape [C, H, W], got {arr.shape}")
        if not np.all(np.isin(arr, (0, 1))):
            raise ValueError("LossMask values must be 0 or 1")
        if not arr.any():
            raise ValueError("LossMask must select at least one pixel")
        arr = arr.astype(np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def _mask_values(lmask) -> np.ndarray:
    m = lmask.values if isinstance(lmask, LossMask) else np.asarray(lmask, dtype=np.float64)
    if not m.any():
        raise ValueError("loss mask selects no pixels")
    return m


def masked_mse(pred: np.ndarray, target: np.ndarray, lmask) -> float:
    """Mean squared error over loss-mask pixels only."""
    loss, _ = masked_mse_grad(pred, target, lmask)
    return loss


def masked_mse_grad(pred: np.ndarray, target: np.ndarray, lmask) -> tuple[float, np.ndarray]:
    """Loss plus its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    m = _mask_values(lmask)
    if pred.shape != target.shape or pred.shape != m.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.shape}, target {target.shape}, mask {m.shape}")
    count = m.sum()
    diff = (pred - target) * m
    loss = float((diff * diff).sum() / count)
    return loss, 2.0 * diff / count


class Adam:
    """Plain Adam with bias correction; epsilon added outside the square root."""

    def __init__(self, params: dict[str, np.ndarray], spec: TrainSpec):
        self.spec = spec
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        s = self.spec
        self.t += 1
        bias1 = 1.0 - s.adam_beta1**self.t
        bias2 = 1.0 - s.adam_beta2**self.t
        for key, g in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= s.adam_beta1
            m += (1.0 - s.adam_beta1) * g
            v *= s.adam_beta2
            v += (1.0 - s.adam_beta2) * (g * g)
            params[key] -= s.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + s.adam_eps)


def make_noise_input(channels: int, h: int, w: int, seed: int) -> np.ndarray:
    """Fixed network input for unconditioned runs: uniform noise in [0, 0.1]."""
    rng = np.random.default_rng([seed, 1])
    return rng.uniform(0.0, 0.1, size=(channels, h, w))


def train_dip(
    config: SkipNetConfig,
    input: np.ndarray,
    target: np.ndarray,
    lmask,
    spec: TrainSpec,
) -> tuple[np.ndarray, list[float]]:
    """Fit a freshly initialized network to the masked target.

    Runs ``spec.steps`` iterations of forward / masked MSE / backprop /
    Adam and returns the final forward output together with the
    per-step loss trace. With ``steps == 0`` this reduces to a single
    forward pass of the initialized network.
    """
    input = np.asarray(input, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    state = init_network(config, spec.seed)
    net = SkipNet(config, state.params)
    trace: list[float] = []
    optimizer = Adam(state.params, spec)
    for step in range(spec.steps):
        pred = net.forward(input)
        loss, gy = masked_mse_grad(pred, target, lmask)
        if not np.isfinite(loss):
            raise DivergenceError(step)
        trace.append(loss)
        grads, _ = net.backward(gy)
        optimizer.step(state.params, grads)
    return net.forward(input), trace


def grad_check(
    config: SkipNetConfig,
    input: np.ndarray,
    target: np.ndarray,
    lmask,
    eps: float = 1e-5,
    n_probes: int = 50,
) -> float:
    """Max relative error of backprop against central finite differences.

    Perturbs ``n_probes`` randomly chosen scalar weights by +-eps and
    compares (loss(w+eps) - loss(w-eps)) / 2 eps with the analytic
    gradient. Intended for tiny configurations; cost is two forward
    passes per probe.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if n_probes < 1:
        raise ValueError(f"n_probes must be >= 1, got {n_probes}")
    input = np.asarray(input, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    state = init_network(config, seed=0)
    net = SkipNet(config, state.params)

    pred = net.forward(input)
    _, gy = masked_mse_grad(pred, target, lmask)
    analytic, _ = net.backward(gy)

    keys = list(state.params)
    sizes = np.array([state.params[k].size for k in keys])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(20240214)
    probes = rng.choice(offsets[-1], size=min(n_probes, offsets[-1]), replace=False)

    worst = 0.0
    for flat in sorted(int(p) for p in probes):
        key = keys[int(np.searchsorted(offsets, flat, side="right") - 1)]
        local = flat - offsets[np.searchsorted(offsets, flat, side="right") - 1]
        param = state.params[key]
        original = param.flat[local]

        param.flat[local] = original + eps
        loss_hi = masked_mse(SkipNet(config, state.params).forward(input), target, lmask)
        param.flat[local] = original - eps
        loss_lo = masked_mse(SkipNet(config, state.params).forward(input), target, lmask)
        param.flat[local] = original

        numeric = (loss_hi - loss_lo) / (2.0 * eps)
        rel = abs(analytic[key].flat[local] - numeric) / max(1e-12, abs(numeric))
        worst = max(worst, rel)
    return worst
