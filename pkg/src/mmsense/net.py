"""From-scratch residual CNN on NCHW float64 tensors.

Layers implement forward/backward explicitly; convolution runs as
im2col + matrix multiply (BLAS), with the backward scatter handled by the
kernels module. Parameters and gradients are exposed as flat name -> array
dictionaries so the optimizer, serialization, and the finite-difference
gradient check all see the same storage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, InputError, NumericsError

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


@dataclass(frozen=True)
class ResidualNetConfig:
    n_blocks: int = 2
    channels: tuple = (8, 16)
    input_shape: tuple = (32, 32)
    n_classes: int = 3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        object.__setattr__(self, "input_shape", tuple(int(s) for s in self.input_shape))
        if self.n_blocks < 1:
            raise ConfigError("n_blocks must be >= 1")
        if len(self.channels) != self.n_blocks:
            raise ConfigError("channels must list one width per block")
        if any(c < 1 for c in self.channels):
            raise ConfigError("channel widths must be >= 1")
        if self.n_classes < 2:
            raise ConfigError("n_classes must be >= 2")


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    n, c, h, w = x.shape
    pad = k // 2
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    # (n, c, h, w, k, k) -> (n*h*w, c*k*k)
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * h * w, c * k * k)


class Conv2D:
    """Same-padding stride-1 convolution, no bias (batch norm follows)."""

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator):
        self.c_in, self.c_out, self.k = c_in, c_out, k
        std = np.sqrt(2.0 / (c_in * k * k))
        self.w = rng.normal(0.0, std, (c_out, c_in, k, k))
        self.dw = np.zeros_like(self.w)
        self._col = None
        self._shape = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        n, c, h, w = x.shape
        col = _im2col(x, self.k)
        out = col @ self.w.reshape(self.c_out, -1).T
        if train:
            self._col, self._shape = col, x.shape
        return out.reshape(n, h, w, self.c_out).transpose(0, 3, 1, 2)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        n, c, h, w = self._shape
        dmat = np.ascontiguousarray(dout.transpose(0, 2, 3, 1)).reshape(n * h * w, self.c_out)
        self.dw[...] = (dmat.T @ self._col).reshape(self.w.shape)
        dcol = dmat @ self.w.reshape(self.c_out, -1)
        dcol6 = dcol.reshape(n, h, w, self.c_in, self.k, self.k)
        dpad = kernels.col2im(dcol6)
        pad = self.k // 2
        if pad:
            return dpad[:, :, pad:pad + h, pad:pad + w]
        return dpad


class BatchNorm2D:
    def __init__(self, c: int):
        self.gamma = np.ones(c)
        self.beta = np.zeros(c)
        self.dgamma = np.zeros(c)
        self.dbeta = np.zeros(c)
        self.running_mean = np.zeros(c)
        self.running_var = np.ones(c)
        self._cache = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        g = self.gamma[None, :, None, None]
        b = self.beta[None, :, None, None]
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            ivar = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (x - mean[None, :, None, None]) * ivar[None, :, None, None]
            self._cache = (xhat, ivar)
            self.running_mean += BN_MOMENTUM * (mean - self.running_mean)
            self.running_var += BN_MOMENTUM * (var - self.running_var)
            return g * xhat + b
        ivar = 1.0 / np.sqrt(self.running_var + BN_EPS)
        xhat = (x - self.running_mean[None, :, None, None]) * ivar[None, :, None, None]
        return g * xhat + b

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xhat, ivar = self._cache
        m = dout.shape[0] * dout.shape[2] * dout.shape[3]
        self.dgamma[...] = (dout * xhat).sum(axis=(0, 2, 3))
        self.dbeta[...] = dout.sum(axis=(0, 2, 3))
        dxhat = dout * self.gamma[None, :, None, None]
        # standard batch-norm backward, folded per channel
        sum_dxhat = dxhat.sum(axis=(0, 2, 3))[None, :, None, None]
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2, 3))[None, :, None, None]
        return (ivar[None, :, None, None] / m) * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if train:
            self._mask = x > 0
            return x * self._mask
        return np.maximum(x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._mask


class Dense:
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator | None,
                 zero_init: bool):
        if zero_init:
            self.w = np.zeros((c_out, c_in))
        else:
            self.w = rng.normal(0.0, np.sqrt(1.0 / c_in), (c_out, c_in))
        self.b = np.zeros(c_out)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        if train:
            self._x = x
        return x @ self.w.T + self.b

    def backward(self, dout: np.ndarray) -> np.ndarray:
        self.dw[...] = dout.T @ self._x
        self.db[...] = dout.sum(axis=0)
        return dout @ self.w


class ResidualBlock:
    """conv-bn-relu-conv-bn plus skip (1x1 conv + bn when widths differ), then relu."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator):
        self.conv1 = Conv2D(c_in, c_out, 3, rng)
        self.bn1 = BatchNorm2D(c_out)
        self.relu1 = ReLU()
        self.conv2 = Conv2D(c_out, c_out, 3, rng)
        self.bn2 = BatchNorm2D(c_out)
        self.relu_out = ReLU()
        if c_in != c_out:
            self.proj_conv = Conv2D(c_in, c_out, 1, rng)
            self.proj_bn = BatchNorm2D(c_out)
        else:
            self.proj_conv = None
            self.proj_bn = None

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        h = self.relu1.forward(self.bn1.forward(self.conv1.forward(x, train), train), train)
        h = self.bn2.forward(self.conv2.forward(h, train), train)
        if self.proj_conv is not None:
            skip = self.proj_bn.forward(self.proj_conv.forward(x, train), train)
        else:
            skip = x
        return self.relu_out.forward(h + skip, train)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        d = self.relu_out.backward(dout)
        dmain = self.conv1.backward(self.bn1.backward(self.relu1.backward(
            self.conv2.backward(self.bn2.backward(d)))))
        if self.proj_conv is not None:
            dskip = self.proj_conv.backward(self.proj_bn.backward(d))
        else:
            dskip = d
        return dmain + dskip


class ResidualNet:
    """Stem conv, a stack of residual blocks, global average pool, linear head."""

    def __init__(self, cfg: ResidualNetConfig, head_init: str = "zero"):
        if head_init not in ("zero", "random"):
            raise ConfigError("head_init must be 'zero' or 'random'")
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        c0 = cfg.channels[0]
        self.stem_conv = Conv2D(1, c0, 3, rng)
        self.stem_bn = BatchNorm2D(c0)
        self.stem_relu = ReLU()
        self.blocks = []
        prev = c0
        for c in cfg.channels:
            self.blocks.append(ResidualBlock(prev, c, rng))
            prev = c
        self.head = Dense(prev, cfg.n_classes, rng, zero_init=(head_init == "zero"))
        self._gap_shape = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2:] != self.cfg.input_shape:
            raise InputError(
                f"expected images of shape (n, 1, {self.cfg.input_shape[0]}, "
                f"{self.cfg.input_shape[1]}), got {x.shape}"
            )
        h = self.stem_relu.forward(self.stem_bn.forward(
            self.stem_conv.forward(x, train), train), train)
        for block in self.blocks:
            h = block.forward(h, train)
        self._gap_shape = h.shape
        pooled = h.mean(axis=(2, 3))
        return self.head.forward(pooled, train)

    def backward(self, dlogits: np.ndarray) -> None:
        d = self.head.backward(dlogits)
        n, c, h, w = self._gap_shape
        d = np.broadcast_to(d[:, :, None, None], self._gap_shape) / (h * w)
        for block in reversed(self.blocks):
            d = block.backward(d)
        self.stem_conv.backward(self.stem_bn.backward(self.stem_relu.backward(d)))

    def _layers(self):
        yield "stem.conv", self.stem_conv
        yield "stem.bn", self.stem_bn
        for i, block in enumerate(self.blocks, start=1):
            yield f"block{i}.conv1", block.conv1
            yield f"block{i}.bn1", block.bn1
            yield f"block{i}.conv2", block.conv2
            yield f"block{i}.bn2", block.bn2
            if block.proj_conv is not None:
                yield f"block{i}.proj.conv", block.proj_conv
                yield f"block{i}.proj.bn", block.proj_bn
        yield "head.fc", self.head

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self._layers():
            if isinstance(layer, Conv2D):
                out[f"{name}.w"] = layer.w
            elif isinstance(layer, BatchNorm2D):
                out[f"{name}.gamma"] = layer.gamma
                out[f"{name}.beta"] = layer.beta
            elif isinstance(layer, Dense):
                out[f"{name}.w"] = layer.w
                out[f"{name}.b"] = layer.b
        return out

    def grads(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self._layers():
            if isinstance(layer, Conv2D):
                out[f"{name}.w"] = layer.dw
            elif isinstance(layer, BatchNorm2D):
                out[f"{name}.gamma"] = layer.dgamma
                out[f"{name}.beta"] = layer.dbeta
            elif isinstance(layer, Dense):
                out[f"{name}.w"] = layer.dw
                out[f"{name}.b"] = layer.db
        return out

    def state(self) -> dict[str, np.ndarray]:
        """Parameters plus batch-norm running statistics, for serialization."""
        out = dict(self.params())
        for name, layer in self._layers():
            if isinstance(layer, BatchNorm2D):
                out[f"{name}.running_mean"] = layer.running_mean
                out[f"{name}.running_var"] = layer.running_var
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        targets = self.state()
        missing = set(targets) - set(state)
        if missing:
            raise InputError(f"parameter file missing entries: {sorted(missing)}")
        for name, arr in targets.items():
            src = np.asarray(state[name], dtype=np.float64)
            if src.shape != arr.shape:
                raise InputError(
                    f"shape mismatch for {name}: file {src.shape}, net {arr.shape}"
                )
            arr[...] = src


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(z)
    p = expz / expz.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    eps = 1e-300  # log argument floor; p is bounded below anyway
    loss = float(-np.mean(np.log(p[np.arange(n), labels] + eps)))
    dlogits = p.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def gradient_check(net: ResidualNet, x: np.ndarray, labels: np.ndarray,
                   eps: float = 1e-5, rtol: float = 1e-4,
                   atol: float = 1e-7) -> dict:
    """Compare backprop gradients against central finite differences.

    Every scalar parameter is perturbed; a parameter passes when the
    absolute difference is under atol or the relative error (denominator
    max(|fd|, |bp|)) is under rtol. Returns per-parameter worst stats.
    """
    loss, dlogits = softmax_cross_entropy(net.forward(x, train=True), labels)
    net.backward(dlogits)
    grads = {k: v.copy() for k, v in net.grads().items()}
    report = {"worst_rel": 0.0, "worst_param": None, "n_checked": 0, "failures": []}

    def loss_at() -> float:
        val, _ = softmax_cross_entropy(net.forward(x, train=True), labels)
        return val

    for name, param in net.params().items():
        flat = param.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            up = loss_at()
            flat[i] = keep - eps
            down = loss_at()
            flat[i] = keep
            fd = (up - down) / (2 * eps)
            bp = gflat[i]
            diff = abs(fd - bp)
            rel = diff / max(abs(fd), abs(bp), 1e-300)
            report["n_checked"] += 1
            if diff > atol and rel > rtol:
                report["failures"].append((name, i, fd, bp, rel))
            if diff > atol and rel > report["worst_rel"]:
                report["worst_rel"] = rel
                report["worst_param"] = (name, i)
    return report
