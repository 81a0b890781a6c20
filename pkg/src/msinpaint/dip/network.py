"""Skip-connected encoder/decoder network for per-image optimization.

The topology follows the deep-image-prior family: per scale the encoder
applies a stride-2 3x3 conv and a stride-1 3x3 conv (each followed by
instance norm and leaky ReLU), a 1x1 skip conv taps the activation
entering each scale, and the decoder mirrors the encoder with bilinear
x2 upsampling plus skip concatenation. A 1x1 head with a logistic
squash pins the output to (0, 1). All dimensions sit in
:class:`SkipNetConfig`, so anything from a 2-layer toy to the full
default can be expressed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import BilinearUp2, Conv2d, InstanceNorm, LeakyReLU, Sequential, Sigmoid


@dataclass(frozen=True)
class SkipNetConfig:
    input_channels: int = 16
    scales: int = 4
    down_channels: tuple[int, ...] = (32, 64, 128, 128)
    skip_channels: int = 4
    use_norm: bool = True
    out_channels: int = 13
    activation: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "down_channels", tuple(self.down_channels))
        if self.scales != len(self.down_channels):
            raise ValueError(
                f"scales ({self.scales}) must equal len(down_channels) "
                f"({len(self.down_channels)})"
            )
        counts = (self.input_channels, self.skip_channels, self.out_channels,
                  *self.down_channels)
        if any(c < 1 for c in counts):
            raise ValueError("all channel counts must be at least 1")


@dataclass
class NetworkState:
    """Ordered weight arrays plus the seed they were drawn from."""

    params: dict[str, np.ndarray]
    rng_seed: int
    config: SkipNetConfig = field(default=None)

    def __post_init__(self):
        for key, arr in self.params.items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite weights in {key}")
        if self.config is not None:
            expected = param_shapes(self.config)
            got = {k: v.shape for k, v in self.params.items()}
            if got != expected:
                raise ValueError("parameter shapes inconsistent with config")

    @property
    def num_parameters(self) -> int:
        return sum(arr.size for arr in self.params.values())


def param_shapes(config: SkipNetConfig) -> dict[str, tuple]:
    """Canonical (ordered) name -> shape map of every weight in the network."""
    shapes: dict[str, tuple] = {}

    def conv(name, cout, cin, k):
        shapes[name + ".w"] = (cout, cin, k, k)
        shapes[name + ".b"] = (cout,)

    def norm(name, c):
        if config.use_norm:
            shapes[name + ".g"] = (c,)
            shapes[name + ".b"] = (c,)

    prev = config.input_channels
    for i, c in enumerate(config.down_channels):
        conv(f"enc{i}.down", c, prev, 3)
        norm(f"enc{i}.norm1", c)
        conv(f"enc{i}.keep", c, c, 3)
        norm(f"enc{i}.norm2", c)
        conv(f"skip{i}", config.skip_channels, prev, 1)
        prev = c

    for i in reversed(range(config.scales)):
        c = config.down_channels[i]
        cin = prev + config.skip_channels
        conv(f"dec{i}.conv1", c, cin, 3)
        norm(f"dec{i}.norm1", c)
        conv(f"dec{i}.conv2", c, c, 3)
        norm(f"dec{i}.norm2", c)
        prev = c

    conv("head", config.out_channels, prev, 1)
    return shapes


def init_network(config: SkipNetConfig, seed: int) -> NetworkState:
    """Draw fresh weights: kernels uniform in +-sqrt(1/fan_in), biases zero,
    norm scale 1 / shift 0. Deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        if name.endswith(".w"):
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(1.0 / fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape)
        elif name.endswith(".g"):
            params[name] = np.ones(shape)
        else:  # conv or norm bias
            params[name] = np.zeros(shape)
    return NetworkState(params=params, rng_seed=seed, config=config)


class SkipNet:
    """Executable network bound to one parameter dict.

    ``forward`` caches activations; each forward supports exactly one
    subsequent ``backward``, which fills a gradient dict keyed like the
    parameters and returns the gradient w.r.t. the input.
    """

    def __init__(self, config: SkipNetConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params
        act = lambda: LeakyReLU(config.activation)  # noqa: E731
        mknorm = (lambda name: InstanceNorm(params, name)) if config.use_norm else (
            lambda name: None)

        self.encoders = []
        self.skips = []
        for i in range(config.scales):
            self.encoders.append(Sequential(
                Conv2d(params, f"enc{i}.down", stride=2),
                mknorm(f"enc{i}.norm1"),
                act(),
                Conv2d(params, f"enc{i}.keep"),
                mknorm(f"enc{i}.norm2"),
                act(),
            ))
            self.skips.append(Conv2d(params, f"skip{i}"))

        self.ups = [BilinearUp2() for _ in range(config.scales)]
        self.decoders = []
        for i in range(config.scales):
            self.decoders.append(Sequential(
                Conv2d(params, f"dec{i}.conv1"),
                mknorm(f"dec{i}.norm1"),
                act(),
                Conv2d(params, f"dec{i}.conv2"),
                mknorm(f"dec{i}.norm2"),
                act(),
            ))
        self.head = Sequential(Conv2d(params, "head"), Sigmoid())

    def forward(self, x: np.ndarray) -> np.ndarray:
        cfg = self.config
        if x.ndim != 3 or x.shape[0] != cfg.input_channels:
            raise ValueError(
                f"input must be [{cfg.input_channels}, H, W], got {x.shape}")
        h, w = x.shape[1:]
        factor = 2 ** cfg.scales
        if h % factor or w % factor or h // factor < 2 or w // factor < 2:
            raise ValueError(
                f"spatial size {h}x{w} must be divisible by {factor} "
                f"with at least 2 pixels at the deepest scale")

        skip_outs = []
        z = x
        for i in range(cfg.scales):
            skip_outs.append(self.skips[i].forward(z))
            z = self.encoders[i].forward(z)
        for i in reversed(range(cfg.scales)):
            z = self.ups[i].forward(z)
            z = np.concatenate([z, skip_outs[i]], axis=0)
            z = self.decoders[i].forward(z)
        return self.head.forward(z)

    def backward(self, gy: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
        cfg = self.config
        grads: dict[str, np.ndarray] = {}
        gz = self.head.backward(gy, grads)
        gskips = [None] * cfg.scales
        for i in range(cfg.scales):
            gz = self.decoders[i].backward(gz, grads)
            n_deep = gz.shape[0] - cfg.skip_channels
            gskips[i] = gz[n_deep:]
            gz = self.ups[i].backward(gz[:n_deep], grads)
        for i in reversed(range(cfg.scales)):
            gz = self.encoders[i].backward(gz, grads)
            gz = gz + self.skips[i].backward(gskips[i], grads)
        return grads, gz


def forward(net: NetworkState, x: np.ndarray) -> np.ndarray:
    """Evaluate the network once (no training side effects)."""
    return SkipNet(net.config, net.params).forward(x)
