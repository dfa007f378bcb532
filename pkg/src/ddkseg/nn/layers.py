"""Feed-forward layers: conv1d, batchnorm, leaky ReLU, dropout, linear.

Every layer keeps its trainable arrays in self.params (name -> ndarray) and
fills self.grads with matching shapes during backward(). Convolution runs
as a tap-sliced im2col followed by one batched GEMM, which is where nearly
all training time goes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .ops import kaiming_uniform


class Layer:
    """Base: holds params/grads dicts; subclasses implement forward/backward."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def extra_state(self) -> dict[str, np.ndarray]:
        """Non-trainable arrays that still belong in checkpoints."""
        return {}


def conv_output_length(in_length: int, kernel: int, stride: int, padding: int, dilation: int = 1) -> int:
    eff = dilation * (kernel - 1) + 1
    return (in_length + 2 * padding - eff) // stride + 1


class Conv1d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, stride: int = 1,
                 padding: int = 0, dilation: int = 1, rng: np.random.Generator | None = None,
                 dtype=np.float32):
        super().__init__()
        if stride < 1 or dilation < 1 or kernel < 1:
            raise ValueError("kernel, stride and dilation must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        self.dilation = dilation
        rng = rng or np.random.default_rng(0)
        self.params = {
            "weight": kaiming_uniform(rng, (out_channels, in_channels, kernel), in_channels * kernel, dtype),
            "bias": np.zeros(out_channels, dtype=dtype),
        }
        self._cache = None

    def forward(self, x, train=False, rng=None):
        batch, channels, length = x.shape
        if channels != self.in_channels:
            raise ShapeError(f"conv1d expects {self.in_channels} input channels, got {channels}")
        out_len = conv_output_length(length, self.kernel, self.stride, self.padding, self.dilation)
        if out_len <= 0:
            raise ShapeError(f"conv1d input length {length} too short for kernel "
                             f"{self.kernel} (dilation {self.dilation}, padding {self.padding})")
        xp = np.pad(x, ((0, 0), (0, 0), (self.padding, self.padding))) if self.padding else x
        span = (out_len - 1) * self.stride + 1
        cols = np.empty((batch, self.in_channels, self.kernel, out_len), dtype=x.dtype)
        for tap in range(self.kernel):
            lo = tap * self.dilation
            cols[:, :, tap, :] = xp[:, :, lo:lo + span:self.stride]
        cols2 = cols.reshape(batch, self.in_channels * self.kernel, out_len)
        w2 = self.params["weight"].reshape(self.out_channels, -1)
        out = np.matmul(w2, cols2)
        out += self.params["bias"][None, :, None]
        self._cache = (cols2, xp.shape, length)
        return out

    def backward(self, dout):
        cols2, xp_shape, length = self._cache
        batch, _, out_len = dout.shape
        w2 = self.params["weight"].reshape(self.out_channels, -1)

        self.grads["bias"] = dout.sum(axis=(0, 2))
        dw2 = np.matmul(dout, cols2.transpose(0, 2, 1)).sum(axis=0)
        self.grads["weight"] = dw2.reshape(self.params["weight"].shape)

        dcols = np.matmul(w2.T, dout).reshape(batch, self.in_channels, self.kernel, out_len)
        dxp = np.zeros(xp_shape, dtype=dout.dtype)
        span = (out_len - 1) * self.stride + 1
        for tap in range(self.kernel):
            lo = tap * self.dilation
            dxp[:, :, lo:lo + span:self.stride] += dcols[:, :, tap, :]
        if self.padding:
            return dxp[:, :, self.padding:self.padding + length]
        return dxp


class BatchNorm1d(Layer):
    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5, dtype=np.float32):
        super().__init__()
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.params = {
            "gamma": np.ones(channels, dtype=dtype),
            "beta": np.zeros(channels, dtype=dtype),
        }
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def extra_state(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, train=False, rng=None):
        if x.shape[1] != self.channels:
            raise ShapeError(f"batchnorm expects {self.channels} channels, got {x.shape[1]}")
        gamma = self.params["gamma"][None, :, None]
        beta = self.params["beta"][None, :, None]
        if train:
            n = x.shape[0] * x.shape[2]
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
            unbiased = var * (n / (n - 1)) if n > 1 else var
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (unbiased - self.running_var)
            self._cache = ("train", xhat, inv_std)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean[None, :, None]) * inv_std[None, :, None]
            self._cache = ("eval", xhat, inv_std)
        return gamma * xhat + beta

    def backward(self, dout):
        mode, xhat, inv_std = self._cache
        gamma = self.params["gamma"]
        self.grads["gamma"] = (dout * xhat).sum(axis=(0, 2))
        self.grads["beta"] = dout.sum(axis=(0, 2))
        if mode == "eval":
            return dout * (gamma * inv_std)[None, :, None]
        n = dout.shape[0] * dout.shape[2]
        dxhat = dout * gamma[None, :, None]
        sum_dxhat = dxhat.sum(axis=(0, 2))[None, :, None]
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2))[None, :, None]
        return (inv_std[None, :, None] / n) * (n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)


class LeakyReLU(Layer):
    def __init__(self, slope: float = 0.01):
        super().__init__()
        self.slope = slope
        self._neg = None

    def forward(self, x, train=False, rng=None):
        neg = x < 0
        self._neg = neg
        return np.where(neg, x * x.dtype.type(self.slope), x)

    def backward(self, dout):
        return np.where(self._neg, dout * dout.dtype.type(self.slope), dout)


class Dropout(Layer):
    """Inverted dropout: train scales survivors by 1/(1-p); eval is identity."""

    def __init__(self, p: float):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self._mask = None

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = rng.random(x.shape, dtype=np.float32) >= self.p
        self._mask = keep.astype(x.dtype) / (1.0 - self.p)
        return x * self._mask

    def backward(self, dout):
        if self._mask is None:
            return dout
        return dout * self._mask


class Linear(Layer):
    """Affine map over the last axis."""

    def __init__(self, in_features: int, out_features: int,
                 rng: np.random.Generator | None = None, dtype=np.float32):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        rng = rng or np.random.default_rng(0)
        self.params = {
            "weight": kaiming_uniform(rng, (out_features, in_features), in_features, dtype),
            "bias": np.zeros(out_features, dtype=dtype),
        }
        self._cache = None

    def forward(self, x, train=False, rng=None):
        if x.shape[-1] != self.in_features:
            raise ShapeError(f"linear expects {self.in_features} features, got {x.shape[-1]}")
        x2 = x.reshape(-1, self.in_features)
        out = x2 @ self.params["weight"].T + self.params["bias"]
        self._cache = (x2, x.shape)
        return out.reshape(x.shape[:-1] + (self.out_features,))

    def backward(self, dout):
        x2, x_shape = self._cache
        d2 = dout.reshape(-1, self.out_features)
        self.grads["weight"] = d2.T @ x2
        self.grads["bias"] = d2.sum(axis=0)
        return (d2 @ self.params["weight"]).reshape(x_shape)


class Sequential(Layer):
    """Chains layers; named_params flattens to "<idx>.<name>" keys."""

    def __init__(self, layers: list[Layer]):
        super().__init__()
        self.layers = layers

    def forward(self, x, train=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def named_params(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.params.items()}

    def named_grads(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.grads.items()}
