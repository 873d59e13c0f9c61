"""Architecture configs, the named parameter store and weight initialisation."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .._rng import stream
from ..autodiff import Tensor, default_dtype
from ..exceptions import ConfigError


@dataclass(frozen=True)
class GeneratorConfig:
    base_width: int = 64
    num_stages: int = 4
    input_channels: int = 3
    output_channels: int = 3

    def __post_init__(self):
        if self.base_width <= 0 or self.num_stages <= 0:
            raise ConfigError("base_width and num_stages must be positive")
        if self.base_width % 4:
            # every inception block splits its width over four branches
            raise ConfigError(f"base_width must be divisible by 4, got {self.base_width}")

    def width(self, stage):
        return self.base_width * 2**stage

    @property
    def divisor(self):
        return 2**self.num_stages


@dataclass(frozen=True)
class DiscriminatorConfig:
    base_width: int = 64
    strides: tuple = (2, 2, 2, 2, 1, 1)
    input_channels: int = 3
    slope: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "strides", tuple(int(s) for s in self.strides))
        if len(self.strides) != 6:
            raise ConfigError("the discriminator has exactly six blocks")
        if any(s not in (1, 2) for s in self.strides):
            raise ConfigError(f"block strides must be 1 or 2, got {self.strides}")
        if self.base_width <= 0:
            raise ConfigError("base_width must be positive")

    @property
    def num_blocks(self):
        return len(self.strides)

    def width(self, block):
        return self.base_width * 2 ** min(block, 3)

    @staticmethod
    def kernel(stride):
        """4x4/pad 1 halves the size exactly; 3x3/pad 1 preserves it."""
        return (4, 1) if stride == 2 else (3, 1)


class ModelParams:
    """Named trainable tensors plus non-trainable buffers.

    Parameter paths look like ``gen.enc.0.conv1.w``. Buffers hold batch-norm
    running statistics and are keyed the same way.
    """

    def __init__(self, tensors=None, buffers=None):
        self.tensors: dict[str, Tensor] = dict(tensors or {})
        self.buffers: dict[str, np.ndarray] = dict(buffers or {})

    def __getitem__(self, name):
        return self.tensors[name]

    def __contains__(self, name):
        return name in self.tensors

    def __len__(self):
        return len(self.tensors)

    def __iter__(self):
        return iter(self.tensors)

    def names(self, prefix=""):
        return [k for k in self.tensors if k.startswith(prefix)]

    def subset(self, prefix):
        return {k: v for k, v in self.tensors.items() if k.startswith(prefix)}

    def zero_grad(self, prefix=""):
        for k in self.names(prefix):
            self.tensors[k].grad = None

    def num_parameters(self, prefix=""):
        return sum(self.tensors[k].size for k in self.names(prefix))

    def copy(self):
        tensors = {
            k: Tensor(v.data.copy(), requires_grad=True, dtype=v.dtype) for k, v in self.tensors.items()
        }
        return ModelParams(tensors, {k: v.copy() for k, v in self.buffers.items()})

    def astype(self, dtype):
        tensors = {k: Tensor(v.data, requires_grad=True, dtype=dtype) for k, v in self.tensors.items()}
        return ModelParams(tensors, {k: v.astype(dtype) for k, v in self.buffers.items()})

    def equal(self, other):
        """Bitwise equality of names, shapes and values."""
        if set(self.tensors) != set(other.tensors) or set(self.buffers) != set(other.buffers):
            return False
        same = all(
            self.tensors[k].dtype == other.tensors[k].dtype
            and np.array_equal(self.tensors[k].data, other.tensors[k].data)
            for k in self.tensors
        )
        return same and all(np.array_equal(self.buffers[k], other.buffers[k]) for k in self.buffers)


class _Initializer:
    def __init__(self, seed, stddev, dtype):
        self.seed = seed
        self.stddev = stddev
        self.dtype = dtype
        self.tensors = {}
        self.buffers = {}

    def conv(self, name, cout, cin, kh, kw, transposed=False):
        shape = (cin, cout, kh, kw) if transposed else (cout, cin, kh, kw)
        w = stream(self.seed, name).standard_normal(shape) * self.stddev
        self.tensors[f"{name}.w"] = Tensor(w, requires_grad=True, dtype=self.dtype)
        self.tensors[f"{name}.b"] = Tensor(np.zeros(cout), requires_grad=True, dtype=self.dtype)

    def norm(self, name, channels):
        self.tensors[f"{name}.gamma"] = Tensor(np.ones(channels), requires_grad=True, dtype=self.dtype)
        self.tensors[f"{name}.beta"] = Tensor(np.zeros(channels), requires_grad=True, dtype=self.dtype)
        self.buffers[f"{name}.running_mean"] = np.zeros(channels, dtype=self.dtype)
        self.buffers[f"{name}.running_var"] = np.ones(channels, dtype=self.dtype)


INCEPTION_BRANCHES = (("b1x1", 1, 1), ("b1x3", 1, 3), ("b3x1", 3, 1), ("b3x3", 3, 3))


def _init_inception(init, name, cin, cout):
    if cout % 4:
        raise ConfigError(f"inception output width {cout} is not divisible by 4")
    for branch, kh, kw in INCEPTION_BRANCHES:
        init.conv(f"{name}.{branch}", cout // 4, cin, kh, kw)


def init_generator(cfg: GeneratorConfig, seed=0, stddev=0.02, dtype=None, init=None):
    init = init or _Initializer(seed, stddev, dtype or default_dtype())
    cin = cfg.input_channels
    for s in range(cfg.num_stages):
        w = cfg.width(s)
        init.conv(f"gen.enc.{s}.conv1", w, cin, 3, 3)
        init.conv(f"gen.enc.{s}.conv2", w, w, 3, 3)
        _init_inception(init, f"gen.enc.{s}.inc", cin, w)
        cin = w
    for s in reversed(range(cfg.num_stages)):
        w = cfg.width(s)
        init.conv(f"gen.dec.{s}.conv1", w, cin, 3, 3)
        init.conv(f"gen.dec.{s}.conv2", w, w, 3, 3)
        init.conv(f"gen.dec.{s}.up", w, w, 2, 2, transposed=True)
        cin = w
    init.conv("gen.out", cfg.output_channels, cin, 1, 1)
    return ModelParams(init.tensors, init.buffers)


def init_discriminator(cfg: DiscriminatorConfig, seed=0, stddev=0.02, dtype=None, init=None):
    init = init or _Initializer(seed, stddev, dtype or default_dtype())
    cin = cfg.input_channels
    for i, stride in enumerate(cfg.strides):
        k, _ = cfg.kernel(stride)
        w = cfg.width(i)
        init.conv(f"disc.block.{i}.conv", w, cin, k, k)
        if i > 0:
            init.norm(f"disc.block.{i}.bn", w)
        cin = w
    init.conv("disc.out", 1, cin, 1, 1)
    return ModelParams(init.tensors, init.buffers)


def init_model(gen_cfg, disc_cfg, seed=0, stddev=0.02, dtype=None):
    """Generator and discriminator parameters in one store."""
    init = _Initializer(seed, stddev, dtype or default_dtype())
    init_generator(gen_cfg, init=init)
    init_discriminator(disc_cfg, init=init)
    return ModelParams(init.tensors, init.buffers)


def config_dict(cfg):
    return asdict(cfg)
