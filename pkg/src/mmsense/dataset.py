"""Spectrogram image datasets for the classifier.

Pipeline per sample: fast time-Doppler spectrogram of the surveillance /
reference pair, rows truncated to the requested sensing duration, per-image
max normalization, log(1 + magnitude) compression, bilinear resize to the
network input shape, per-image standardization. Max normalization before
the log makes the final image exactly invariant to positive rescaling of
the raw magnitudes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .caf import CafGrid, spectrogram_fast
from .channel import GESTURES, GestureSample
from .errors import InputError
from .waveform import IqTrace

log = logging.getLogger(__name__)

LOG_SCALE = 1000.0  # dynamic range kept visible after max normalization
IMAGE_SHAPE = (32, 32)


def bilinear_resize(image: np.ndarray, out_shape: tuple) -> np.ndarray:
    """Bilinear resampling with corner alignment; handles single-row inputs."""
    h, w = image.shape
    oh, ow = out_shape
    yy = np.linspace(0.0, h - 1.0, oh) if oh > 1 else np.zeros(1)
    xx = np.linspace(0.0, w - 1.0, ow) if ow > 1 else np.zeros(1)
    y0 = np.clip(np.floor(yy).astype(int), 0, max(h - 2, 0))
    x0 = np.clip(np.floor(xx).astype(int), 0, max(w - 2, 0))
    wy = (yy - y0)[:, None]
    wx = (xx - x0)[None, :]
    if h == 1:
        rows0 = rows1 = image
    else:
        rows0, rows1 = image[y0], image[y0 + 1]
    if w == 1:
        a = b = rows0
        c = d = rows1
    else:
        a, b = rows0[:, x0], rows0[:, x0 + 1]
        c, d = rows1[:, x0], rows1[:, x0 + 1]
    top = a * (1 - wx) + b * wx
    bottom = c * (1 - wx) + d * wx
    return top * (1 - wy) + bottom * wy


def image_from_magnitudes(values: np.ndarray, image_shape: tuple = IMAGE_SHAPE) -> np.ndarray:
    """Log-compressed, resized, standardized image from raw spectrogram magnitudes."""
    values = np.asarray(values, dtype=np.float64)
    peak = values.max() if values.size else 0.0
    if not np.isfinite(peak) or peak <= 0.0:
        raise InputError("spectrogram is all zero (or non-finite); cannot standardize")
    img = np.log1p(LOG_SCALE * (values / peak))
    img = bilinear_resize(img, image_shape)
    std = img.std()
    if std < 1e-12:
        raise InputError("image has zero variance after log scaling")
    return (img - img.mean()) / std


@dataclass
class BankEntry:
    """Full-duration spectrogram of one sample plus the window geometry."""

    values: np.ndarray  # (n_windows_total, n_freq)
    label: str
    n_samples: int  # trace length in samples
    sample_rate: float
    n_win: int
    n_hop: int


def spectrogram_bank(samples, grid: CafGrid) -> list:
    """Precompute each sample's full spectrogram once; rows are sliced per duration.

    Accepts any iterable of GestureSample, so callers can stream samples in
    without holding every trace pair in memory at once.
    """
    bank = []
    for sample in samples:
        spec = spectrogram_fast(sample.y_s, sample.y_r, grid)
        fs = sample.y_s.sample_rate
        bank.append(BankEntry(
            values=spec.values,
            label=sample.label,
            n_samples=min(len(sample.y_s), len(sample.y_r)),
            sample_rate=fs,
            n_win=int(round(grid.cit * fs)),
            n_hop=int(round(grid.hop * fs)),
        ))
    return bank


def rows_for_duration(entry: BankEntry, duration: float) -> int:
    n_need = int(round(duration * entry.sample_rate))
    if n_need > entry.n_samples:
        raise InputError(
            f"duration {duration} s exceeds trace length "
            f"{entry.n_samples / entry.sample_rate:.6f} s"
        )
    if n_need < entry.n_win:
        raise InputError(f"duration {duration} s shorter than one window")
    return (n_need - entry.n_win) // entry.n_hop + 1


def images_from_bank(bank: list, duration: float,
                     image_shape: tuple = IMAGE_SHAPE) -> tuple[np.ndarray, np.ndarray]:
    """(images (n, 1, H, W), integer labels) for one sensing duration.

    Truncating the spectrogram to the first rows_for_duration windows is
    identical to recomputing it from a truncated trace: each window only
    sees samples inside [0, duration).
    """
    images, labels = [], []
    for entry in bank:
        rows = rows_for_duration(entry, duration)
        try:
            img = image_from_magnitudes(entry.values[:rows], image_shape)
        except InputError as exc:
            log.warning("rejecting sample (label %s): %s", entry.label, exc)
            continue
        images.append(img)
        labels.append(GESTURES.index(entry.label))
    if not images:
        raise InputError("no usable samples in the bank")
    x = np.stack(images)[:, None, :, :]
    return x, np.asarray(labels, dtype=np.intp)


def build_dataset(samples: list, grid: CafGrid, duration: float,
                  image_shape: tuple = IMAGE_SHAPE) -> tuple[np.ndarray, np.ndarray]:
    """Images and labels straight from labeled trace pairs."""
    return images_from_bank(spectrogram_bank(samples, grid), duration, image_shape)


def stratified_split(labels: np.ndarray, n_train_per_class: int,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded per-class split: n_train_per_class train, the rest test.

    One global seeded permutation drives every class pool, so relabeling
    classes leaves the selected index sets unchanged (the split depends on
    sample positions, not label values).
    """
    rng = np.random.default_rng(int(seed))
    order = rng.permutation(labels.size)
    train_idx, test_idx = [], []
    for cls in np.unique(labels):
        pool = order[labels[order] == cls]
        if pool.size < n_train_per_class + 1:
            raise InputError(
                f"class {cls} has {pool.size} samples; need more than "
                f"{n_train_per_class} for a train/test split"
            )
        train_idx.append(pool[:n_train_per_class])
        test_idx.append(pool[n_train_per_class:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))
