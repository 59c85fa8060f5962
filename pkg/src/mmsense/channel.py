"""Multipath channel simulation with gesture-driven time-varying Doppler.

Each propagation path contributes gain * s(t - delay) * exp(j*phi(t)) where
phi is the accumulated Doppler phase phi(t) = -2*pi * integral of f(u) du,
integrated at sample resolution (cumulative trapezoid). The whole channel
output is then rotated by the transmitter/receiver frequency-offset factor
exp(-j*2*pi*offset*t) and circular complex Gaussian noise is added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .caf import delayed_reference
from .errors import ConfigError, InputError
from .waveform import FrameSpec, IqTrace, make_burst

PUSH_PEAK_HZ = 200.0
PUSH_PERIOD_S = 1.0
THUMB_PEAK_HZ = 150.0
THUMB_SIGMA_S = 0.03
RUB_BAND_HZ = 60.0

GESTURES = ("push", "thumb", "rub")
SCENARIOS = ("LoS", "NLoS")


@dataclass(frozen=True)
class DopplerTrajectory:
    """Instantaneous Doppler frequency f(t) of one path."""

    kind: str  # constant | sinusoid | impulse_train | jitter
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "impulse_train", "jitter"):
            raise ConfigError(f"unknown trajectory kind {self.kind!r}")

    def frequencies(self, t: np.ndarray) -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            return np.full(t.shape, float(p.get("f0", 0.0)))
        if self.kind == "sinusoid":
            return p["peak"] * np.sin(2 * np.pi * t / p["period"] + p.get("phase", 0.0))
        if self.kind == "impulse_train":
            f = np.zeros(t.shape)
            sigma = p["sigma"]
            for tk, sk in zip(p["times"], p["signs"]):
                f += sk * np.exp(-((t - tk) ** 2) / (2 * sigma**2))
            return p["peak"] * f
        # jitter: seeded sinusoid bank, peak-normalized to the band limit
        comps = _jitter_components(p["seed"], p.get("duration", 2.0))
        f = _jitter_eval(comps, t)
        return p["band"] * f

    def is_static(self) -> bool:
        return self.kind == "constant" and float(self.params.get("f0", 0.0)) == 0.0


def _jitter_components(seed: int, duration: float, n_components: int = 6):
    rng = np.random.default_rng(int(seed))
    nu = rng.uniform(0.5, 6.0, n_components)
    phase = rng.uniform(0.0, 2 * np.pi, n_components)
    amp = rng.uniform(0.5, 1.0, n_components)
    # normalization grid is fixed so f(t) does not depend on the caller's grid
    t_ref = np.linspace(0.0, duration, 2048)
    raw = (amp[:, None] * np.sin(2 * np.pi * nu[:, None] * t_ref + phase[:, None])).sum(axis=0)
    peak = np.abs(raw).max()
    scale = 1.0 / peak if peak > 0 else 1.0
    return nu, phase, amp, scale


def _jitter_eval(comps, t: np.ndarray) -> np.ndarray:
    nu, phase, amp, scale = comps
    out = np.zeros(t.shape)
    for i in range(nu.size):
        out += amp[i] * np.sin(2 * np.pi * nu[i] * t + phase[i])
    return out * scale


def constant_trajectory(f0: float) -> DopplerTrajectory:
    return DopplerTrajectory("constant", {"f0": float(f0)})


def gesture_trajectory(label: str, duration: float, seed: int) -> DopplerTrajectory:
    """Parametric Doppler trajectory family for one gesture sample.

    push: smooth sinusoidal swing between +/- 200 Hz (period 1 s, seeded phase).
    thumb: 2-4 alternating-sign Gaussian impulses per second, peak 150 Hz.
    rub: band-limited jitter, peak 60 Hz.
    """
    if duration <= 0:
        raise InputError("duration must be > 0")
    rng = np.random.default_rng(int(seed))
    if label == "push":
        return DopplerTrajectory("sinusoid", {
            "peak": PUSH_PEAK_HZ,
            "period": PUSH_PERIOD_S,
            "phase": float(rng.uniform(0.0, 2 * np.pi)),
        })
    if label == "thumb":
        per_second = int(rng.integers(2, 5))
        n = max(1, int(round(per_second * duration)))
        pitch = duration / n
        times = (np.arange(n) + 0.5) * pitch + rng.uniform(-0.2, 0.2, n) * pitch
        first = 1.0 if rng.uniform() < 0.5 else -1.0
        signs = first * (-1.0) ** np.arange(n)
        return DopplerTrajectory("impulse_train", {
            "peak": THUMB_PEAK_HZ,
            "sigma": THUMB_SIGMA_S,
            "times": [float(x) for x in times],
            "signs": [float(s) for s in signs],
        })
    if label == "rub":
        return DopplerTrajectory("jitter", {
            "band": RUB_BAND_HZ,
            "seed": int(seed),
            "duration": float(duration),
        })
    raise InputError(f"unknown gesture label {label!r}")


@dataclass(frozen=True)
class Path:
    gain: complex
    delay: float = 0.0  # seconds
    doppler: DopplerTrajectory = field(default_factory=lambda: constant_trajectory(0.0))

    def __post_init__(self):
        if self.delay < 0:
            raise ConfigError("path delay must be >= 0")
        if abs(self.gain) <= 0:
            raise ConfigError("path gain must be nonzero")


@dataclass(frozen=True)
class ChannelConfig:
    paths: tuple
    freq_offset: float = 0.0
    noise_power: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        if not self.paths:
            raise ConfigError("channel needs at least one path")
        if self.noise_power < 0:
            raise ConfigError("noise_power must be >= 0")
        object.__setattr__(self, "paths", tuple(self.paths))


def accumulated_phase(freqs: np.ndarray, dt: float) -> np.ndarray:
    """phi[k] = -2*pi * trapezoid integral of f up to sample k, phi[0] = 0."""
    phi = np.empty(freqs.size)
    phi[0] = 0.0
    np.cumsum((freqs[1:] + freqs[:-1]) * (0.5 * dt), out=phi[1:])
    return -2 * np.pi * phi


def apply_channel(tx: IqTrace, cfg: ChannelConfig) -> IqTrace:
    """Receive tx through the configured multipath channel (Doppler, offset, noise)."""
    fs = tx.sample_rate
    duration = tx.duration
    for path in cfg.paths:
        if path.delay >= duration:
            raise ConfigError(
                f"path delay {path.delay} s >= trace duration {duration} s"
            )
    t = tx.times()
    y = np.zeros(len(tx), dtype=np.complex128)
    for path in cfg.paths:
        contrib = delayed_reference(tx.samples, path.delay * fs)
        if not path.doppler.is_static():
            f_inst = path.doppler.frequencies(t)
            contrib = contrib * np.exp(1j * accumulated_phase(f_inst, 1.0 / fs))
        y += path.gain * contrib
    if cfg.freq_offset != 0.0:
        y *= np.exp(-2j * np.pi * cfg.freq_offset * t)
    if cfg.noise_power > 0.0:
        rng = np.random.default_rng(int(cfg.noise_seed))
        scale = math.sqrt(cfg.noise_power / 2.0)
        y += scale * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return IqTrace(y, fs, tx.t0)


# ------------------------------------------------------------------ presets

@dataclass(frozen=True)
class ScenarioPreset:
    """Per-scenario path geometry and gains. All values are tunables."""

    scenario: str
    reference_gain: complex
    clutter: tuple  # ((gain, delay_s), ...) static surveillance paths
    gesture_gain: complex
    gesture_delay: float

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        object.__setattr__(self, "clutter", tuple(tuple(c) for c in self.clutter))


# LoS values; the NLoS preset scales the reference gain (wall reflection is
# weaker) and all surveillance gains by common per-channel factors, keeping
# geometry identical.
_LOS_REFERENCE_GAIN = 1.0
_LOS_CLUTTER = ((0.6, 2e-6),)
_LOS_GESTURE_GAIN = 0.35
_GESTURE_DELAY = 4e-6
_NLOS_REFERENCE_SCALE = 0.4
_NLOS_SURVEILLANCE_SCALE = 0.5


def scenario_preset(scenario: str) -> ScenarioPreset:
    if scenario == "LoS":
        return ScenarioPreset("LoS", _LOS_REFERENCE_GAIN, _LOS_CLUTTER,
                              _LOS_GESTURE_GAIN, _GESTURE_DELAY)
    if scenario == "NLoS":
        clutter = tuple((g * _NLOS_SURVEILLANCE_SCALE, d) for g, d in _LOS_CLUTTER)
        return ScenarioPreset("NLoS", _LOS_REFERENCE_GAIN * _NLOS_REFERENCE_SCALE,
                              clutter, _LOS_GESTURE_GAIN * _NLOS_SURVEILLANCE_SCALE,
                              _GESTURE_DELAY)
    raise ConfigError(f"unknown scenario {scenario!r}")


@dataclass(frozen=True)
class GestureSample:
    y_r: IqTrace
    y_s: IqTrace
    label: str
    scenario: str
    meta: dict = field(default_factory=dict)


def _snr_to_noise_power(dominant_gain: complex, snr_db: float) -> float:
    if math.isinf(snr_db):
        return 0.0
    return abs(dominant_gain) ** 2 / (10.0 ** (snr_db / 10.0))


def synthesize_sample(spec: FrameSpec, n_frames: int, preset: ScenarioPreset,
                      label: str, snr_db: float = 10.0, offset_hz: float = 0.0,
                      seed: int = 0) -> GestureSample:
    """One labeled reference/surveillance trace pair.

    The reference channel is a single static path; the surveillance channel
    is static clutter plus one gesture path. Both share the transmitted
    burst and the frequency offset. Noise is set per channel so its dominant
    path has the requested SNR. Deterministic given (spec, seed).
    """
    if label not in GESTURES:
        raise InputError(f"unknown gesture label {label!r}")
    tx = make_burst(spec, n_frames)
    traj_seed, noise_r_seed, noise_s_seed = [
        int(x) for x in np.random.SeedSequence(int(seed)).generate_state(3, np.uint64)
    ]
    trajectory = gesture_trajectory(label, tx.duration, traj_seed)
    ref_cfg = ChannelConfig(
        paths=(Path(preset.reference_gain, 0.0),),
        freq_offset=offset_hz,
        noise_power=_snr_to_noise_power(preset.reference_gain, snr_db),
        noise_seed=noise_r_seed,
    )
    surv_paths = [Path(g, d) for g, d in preset.clutter]
    surv_paths.append(Path(preset.gesture_gain, preset.gesture_delay, trajectory))
    dominant = max((p.gain for p in surv_paths), key=abs)
    surv_cfg = ChannelConfig(
        paths=tuple(surv_paths),
        freq_offset=offset_hz,
        noise_power=_snr_to_noise_power(dominant, snr_db),
        noise_seed=noise_s_seed,
    )
    y_r = apply_channel(tx, ref_cfg)
    y_s = apply_channel(tx, surv_cfg)
    meta = {
        "label": label, "scenario": preset.scenario, "snr_db": snr_db,
        "offset_hz": offset_hz, "seed": int(seed), "n_frames": n_frames,
    }
    return GestureSample(y_r, y_s, label, preset.scenario, meta)
