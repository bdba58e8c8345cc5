"""
Layers Component

Parameterized building blocks for the VAE and the denoising U-net.

Composes:
- Tensor (primitive)
- nn_ops (primitive)

A Module collects its parameters by walking its attributes, so a network's
ParamSet is the dict returned by parameters(): dotted unique names mapped to
trainable tensors, each carrying its own gradient buffer.
"""

from math import gcd
from typing import Optional

import numpy as np

from src.primitives import nn_ops
from src.primitives.errors import CheckpointFormatError, ShapeMismatchError
from src.primitives.tensor import Tensor, parameter

ParamSet = dict[str, Tensor]


def kaiming_uniform(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


class Module:
    """Base class: parameter discovery, state export/import, call forwarding"""

    def parameters(self, prefix: str = "") -> ParamSet:
        params: ParamSet = {}
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                params[name] = value
            elif isinstance(value, Module):
                params.update(value.parameters(name + "."))
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        params.update(item.parameters(f"{name}.{index}."))
        return params

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def state(self) -> dict[str, np.ndarray]:
        """Copy of every parameter value."""
        return {name: t.data.copy() for name, t in self.parameters().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        """
        Overwrite parameters from a name -> array mapping.

        Raises:
            CheckpointFormatError: On missing names or shape differences
        """
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        if missing:
            raise CheckpointFormatError(f"checkpoint is missing parameters: {missing[:5]}")
        for name, tensor in params.items():
            value = np.asarray(state[name], dtype=np.float32)
            if value.shape != tensor.shape:
                raise CheckpointFormatError(
                    f"parameter {name} has shape {value.shape}, expected {tensor.shape}"
                )
            tensor.data = value.copy()
            tensor.grad = None

    def parameter_count(self) -> int:
        return sum(t.size for t in self.parameters().values())

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: Optional[int] = None,
        zero_init: bool = False,
    ):
        fan_in = in_channels * kernel_size * kernel_size
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        self.weight = parameter(np.zeros(shape) if zero_init else kaiming_uniform(rng, shape, fan_in))
        self.bias = parameter(np.zeros(out_channels))
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding

    def forward(self, x: Tensor) -> Tensor:
        return nn_ops.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.weight = parameter(kaiming_uniform(rng, (out_features, in_features), in_features))
        self.bias = parameter(np.zeros(out_features))

    def forward(self, x: Tensor) -> Tensor:
        return nn_ops.linear(x, self.weight, self.bias)


class GroupNorm(Module):
    def __init__(self, channels: int, groups: int, eps: float = 1e-5):
        if channels % groups != 0:
            raise ShapeMismatchError(f"{channels} channels not divisible into {groups} groups")
        self.gain = parameter(np.ones(channels))
        self.bias = parameter(np.zeros(channels))
        self.groups = groups
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return nn_ops.group_norm(x, self.groups, self.gain, self.bias, self.eps)


class ResBlock(Module):
    """
    GroupNorm, SiLU, conv, GroupNorm, SiLU, conv on the residual branch.

    When time_dim is given, a projected time embedding is added to the branch
    after the first conv. The second conv starts at zero so a fresh block is
    the identity (or its 1x1 skip projection).
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        groups: int,
        rng: np.random.Generator,
        time_dim: Optional[int] = None,
    ):
        self.norm1 = GroupNorm(in_channels, gcd(groups, in_channels))
        self.conv1 = Conv2d(in_channels, out_channels, 3, rng)
        self.norm2 = GroupNorm(out_channels, gcd(groups, out_channels))
        self.conv2 = Conv2d(out_channels, out_channels, 3, rng, zero_init=True)
        self.time_proj = Linear(time_dim, out_channels, rng) if time_dim else None
        self.skip = Conv2d(in_channels, out_channels, 1, rng) if in_channels != out_channels else None

    def forward(self, x: Tensor, temb: Optional[Tensor] = None) -> Tensor:
        h = self.conv1(nn_ops.silu(self.norm1(x)))
        if self.time_proj is not None and temb is not None:
            t = self.time_proj(nn_ops.silu(temb))
            h = h + t.reshape(t.shape[0], t.shape[1], 1, 1)
        h = self.conv2(nn_ops.silu(self.norm2(h)))
        shortcut = self.skip(x) if self.skip is not None else x
        return shortcut + h


class AttentionBlock(Module):
    """x + attention(GroupNorm(x)), single head"""

    def __init__(self, channels: int, groups: int, rng: np.random.Generator):
        self.norm = GroupNorm(channels, gcd(groups, channels))
        bound = 1.0 / np.sqrt(channels)
        for key in ("q", "k", "v"):
            setattr(self, f"w{key}", parameter(rng.uniform(-bound, bound, (channels, channels))))
            setattr(self, f"b{key}", parameter(np.zeros(channels)))

    def forward(self, x: Tensor) -> Tensor:
        attended, _ = nn_ops.attention(
            self.norm(x), self.wq, self.bq, self.wk, self.bk, self.wv, self.bv
        )
        return x + attended


class Downsample(Module):
    """Stride-2 3x3 convolution"""

    def __init__(self, channels: int, rng: np.random.Generator, out_channels: Optional[int] = None):
        self.conv = Conv2d(channels, out_channels or channels, 3, rng, stride=2, padding=1)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(x)


class Upsample(Module):
    """Nearest-neighbour 2x upsampling followed by a 3x3 convolution"""

    def __init__(self, channels: int, rng: np.random.Generator, out_channels: Optional[int] = None):
        self.conv = Conv2d(channels, out_channels or channels, 3, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.conv(nn_ops.upsample_nearest2x(x))


def sinusoidal_embedding(timesteps: np.ndarray, dim: int) -> np.ndarray:
    """(N, dim) float32 embedding: sines then cosines at geometric frequencies."""
    timesteps = np.asarray(timesteps, dtype=np.float64).reshape(-1)
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half, 1))
    args = timesteps[:, None] * freqs[None, :]
    embedding = np.concatenate([np.sin(args), np.cos(args)], axis=1)
    if dim % 2:
        embedding = np.pad(embedding, ((0, 0), (0, 1)))
    return embedding.astype(np.float32)
