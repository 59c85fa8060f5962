"""Training loop (SGD with momentum), evaluation, and duration sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import images_from_bank, stratified_split
from .errors import ConfigError, InputError, NumericsError
from .net import ResidualNet, ResidualNetConfig, softmax_cross_entropy

log = logging.getLogger(__name__)

DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 16
DEFAULT_LR = 0.01
DEFAULT_MOMENTUM = 0.9


@dataclass
class TrainReport:
    epoch_losses: list
    accuracy: float = float("nan")
    confusion: np.ndarray | None = None  # rows true class, cols predicted


def train(net: ResidualNet, images: np.ndarray, labels: np.ndarray,
          epochs: int = DEFAULT_EPOCHS, batch_size: int = DEFAULT_BATCH_SIZE,
          lr: float = DEFAULT_LR, momentum: float = DEFAULT_MOMENTUM,
          seed: int = 0) -> TrainReport:
    """Mini-batch SGD with momentum on softmax cross-entropy, seeded shuffling."""
    n = images.shape[0]
    if n == 0:
        raise InputError("training set is empty")
    if batch_size < 1 or batch_size > n:
        raise ConfigError(f"batch_size must be in 1..{n}, got {batch_size}")
    rng = np.random.default_rng(int(seed))
    params = net.params()
    velocity = {name: np.zeros_like(p) for name, p in params.items()}
    losses = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss, dlogits = softmax_cross_entropy(
                net.forward(images[idx], train=True), labels[idx])
            if not math.isfinite(loss):
                raise NumericsError(f"training diverged at epoch {epoch}: loss {loss}")
            net.backward(dlogits)
            grads = net.grads()
            for name, p in params.items():
                v = velocity[name]
                v *= momentum
                v += grads[name]
                p -= lr * v
            total += loss * idx.size
        losses.append(total / n)
    return TrainReport(epoch_losses=losses)


def evaluate(net: ResidualNet, images: np.ndarray, labels: np.ndarray,
             batch_size: int = 64) -> TrainReport:
    """Inference-mode accuracy and confusion matrix (running batch-norm stats)."""
    if images.shape[0] == 0:
        raise InputError("evaluation set is empty")
    n_classes = net.cfg.n_classes
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for start in range(0, images.shape[0], batch_size):
        logits = net.forward(images[start:start + batch_size], train=False)
        pred = np.argmax(logits, axis=1)
        for t, p in zip(labels[start:start + batch_size], pred):
            confusion[t, p] += 1
    accuracy = float(np.trace(confusion) / confusion.sum())
    return TrainReport(epoch_losses=[], accuracy=accuracy, confusion=confusion)


def run_training(images: np.ndarray, labels: np.ndarray, cfg: ResidualNetConfig,
                 n_train_per_class: int, seed: int,
                 epochs: int = DEFAULT_EPOCHS, batch_size: int = DEFAULT_BATCH_SIZE,
                 lr: float = DEFAULT_LR, momentum: float = DEFAULT_MOMENTUM
                 ) -> tuple[ResidualNet, TrainReport]:
    """Split, train, evaluate. One seed drives split, init, and shuffling."""
    split_seed, init_seed, shuffle_seed = [
        int(x) for x in np.random.SeedSequence(int(seed)).generate_state(3, np.uint64)
    ]
    train_idx, test_idx = stratified_split(labels, n_train_per_class, split_seed)
    net = ResidualNet(ResidualNetConfig(
        n_blocks=cfg.n_blocks, channels=cfg.channels, input_shape=cfg.input_shape,
        n_classes=cfg.n_classes, seed=init_seed))
    report = train(net, images[train_idx], labels[train_idx], epochs=epochs,
                   batch_size=batch_size, lr=lr, momentum=momentum, seed=shuffle_seed)
    test_report = evaluate(net, images[test_idx], labels[test_idx])
    test_report.epoch_losses = report.epoch_losses
    return net, test_report


def accuracy_sweep(bank: list, durations: list, seeds: list,
                   cfg: ResidualNetConfig, n_train_per_class: int,
                   image_shape: tuple, **train_kw) -> list[dict]:
    """Train/evaluate per (duration, seed); rows sorted by duration then seed."""
    rows = []
    for duration in durations:
        images, labels = images_from_bank(bank, duration, image_shape)
        for seed in seeds:
            _, report = run_training(images, labels, cfg, n_train_per_class,
                                     seed, **train_kw)
            log.info("duration %.3g s seed %d: accuracy %.4f",
                     duration, seed, report.accuracy)
            rows.append({
                "duration": float(duration), "seed": int(seed),
                "accuracy": report.accuracy, "confusion": report.confusion,
            })
    return rows


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise InputError("spearman needs two equal-length series of >= 2 points")
    rx, ry = _average_ranks(x), _average_ranks(y)
    sx, sy = rx.std(), ry.std()
    if sx < 1e-12 or sy < 1e-12:
        raise NumericsError("spearman undefined: a series is constant under ranking")
    return float(np.mean((rx - rx.mean()) * (ry - ry.mean())) / (sx * sy))
