"""Transmitted waveform synthesis.

The transmitted signal is a burst of identical-length frames. Each frame
starts with a fixed training sequence (same chips in every frame) followed
by a pseudo-random payload re-drawn per frame. All chips are unit-modulus
QPSK-like symbols at one chip per sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError

SAMPLE_RATE = 1_000_000.0  # Hz
TRAINING_DURATION = 16e-6  # s
PAYLOAD_DURATION = 200e-6  # s

# Chosen so the 16-chip training sequence has an autocorrelation
# peak-to-max-sidelobe magnitude ratio >= 3 (delay discrimination).
# Seed 3623 measures 7.16; the ratio is pinned in the test suite.
DEFAULT_TRAINING_SEED = 3623
DEFAULT_PAYLOAD_SEED = 1234

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_QPSK_TABLE = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))


def _mix64(x: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 arithmetic wraps mod 2**64 by construction.
    z = x.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def _seed_u64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)


def unit_chips(seed: int, n: int) -> np.ndarray:
    """n deterministic unit-modulus QPSK chips from a counter-mode generator."""
    if n < 0:
        raise ConfigError(f"chip count must be >= 0, got {n}")
    counters = np.arange(1, n + 1, dtype=np.uint64)
    z = _mix64(counters * _GOLDEN + _seed_u64(seed))
    idx = (z >> np.uint64(62)).astype(np.intp)
    return _QPSK_TABLE[idx]


def frame_seeds(payload_seed: int, n_frames: int) -> np.ndarray:
    """Per-frame payload seeds derived from the master payload seed."""
    counters = np.arange(1, n_frames + 1, dtype=np.uint64)
    return _mix64(counters * _GOLDEN + _seed_u64(payload_seed))


@dataclass(frozen=True)
class FrameSpec:
    """Frame layout and seeding for the transmitted signal."""

    training_duration: float = TRAINING_DURATION
    payload_duration: float = PAYLOAD_DURATION
    sample_rate: float = SAMPLE_RATE
    training_seed: int = DEFAULT_TRAINING_SEED
    payload_seed: int = DEFAULT_PAYLOAD_SEED

    def __post_init__(self):
        if self.training_duration <= 0:
            raise ConfigError("training_duration must be > 0")
        if self.payload_duration < 0:
            raise ConfigError("payload_duration must be >= 0")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be > 0")
        for name in ("training_duration", "payload_duration"):
            n = getattr(self, name) * self.sample_rate
            if abs(n - round(n)) > 1e-6:
                raise ConfigError(
                    f"{name} * sample_rate must be a whole sample count, got {n}"
                )
        if self.n_frame < 1:
            raise ConfigError("frame must contain at least one sample")

    @property
    def n_training(self) -> int:
        return int(round(self.training_duration * self.sample_rate))

    @property
    def n_payload(self) -> int:
        return int(round(self.payload_duration * self.sample_rate))

    @property
    def n_frame(self) -> int:
        return self.n_training + self.n_payload

    @property
    def frame_duration(self) -> float:
        return self.n_frame / self.sample_rate

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.n_frame


@dataclass(frozen=True)
class IqTrace:
    """Uniformly sampled complex baseband signal."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 1:
            raise InputError("trace must be a nonempty 1-D sample array")
        if self.sample_rate <= 0:
            raise InputError("sample_rate must be > 0")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate


def training_sequence(spec: FrameSpec) -> np.ndarray:
    return unit_chips(spec.training_seed, spec.n_training)


def make_frame(spec: FrameSpec, frame_index: int = 0) -> IqTrace:
    """One frame: training sequence followed by that frame's payload."""
    train = training_sequence(spec)
    if spec.n_payload == 0:
        return IqTrace(train, spec.sample_rate)
    fseed = int(frame_seeds(spec.payload_seed, frame_index + 1)[frame_index])
    payload = unit_chips(fseed, spec.n_payload)
    return IqTrace(np.concatenate([train, payload]), spec.sample_rate)


def make_burst(spec: FrameSpec, n_frames: int) -> IqTrace:
    """Concatenation of n_frames frames sharing one training sequence.

    Payload chips are re-drawn per frame from a per-frame seed derived
    from spec.payload_seed, so frames differ in payload only.
    """
    if n_frames < 1:
        raise ConfigError(f"n_frames must be >= 1, got {n_frames}")
    frames = np.empty((n_frames, spec.n_frame), dtype=np.complex128)
    frames[:, : spec.n_training] = training_sequence(spec)
    if spec.n_payload:
        seeds = frame_seeds(spec.payload_seed, n_frames)
        counters = np.arange(1, spec.n_payload + 1, dtype=np.uint64)
        z = _mix64(counters[None, :] * _GOLDEN + seeds[:, None])
        idx = (z >> np.uint64(62)).astype(np.intp)
        frames[:, spec.n_training :] = _QPSK_TABLE[idx]
    return IqTrace(frames.ravel(), spec.sample_rate)


def autocorrelation_ratio(seq: np.ndarray) -> float:
    """Zero-lag to max-nonzero-lag magnitude ratio of the linear autocorrelation."""
    c = np.correlate(seq, seq, mode="full")
    mag = np.abs(c)
    center = seq.size - 1
    peak = mag[center]
    mag[center] = 0.0
    side = mag.max()
    return float(peak / side) if side > 0 else float("inf")
