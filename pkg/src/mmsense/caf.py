"""Cross ambiguity function and sliding-window time-Doppler spectrograms.

The ambiguity surface over delay tau and frequency f is the Riemann sum

    R[tau, f] = sum_k y_s[k] * conj(y_r(t_k - tau)) * exp(+j*2*pi*f*t_k) * dt

over one coherent integration window, with t_k measured from the window
start. The spectrogram slides that window along the trace and keeps, per
(window, f), the magnitude maximized over the delay grid.

Sign convention of the frequency axis: a surveillance factor
exp(-j*2*pi*f0*t) (a path whose trajectory frequency is f0) produces its
peak at axis value +f0. Displays preferring the opposite convention should
flip the axis; the magnitudes are identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, InputError
from .waveform import IqTrace

DEFAULT_CIT = 0.1  # s
DEFAULT_HOP = 0.05  # s
DEFAULT_FRAME_RATE = 1_000_000.0 / 216.0  # Hz, frames per second at defaults


@dataclass(frozen=True)
class CafGrid:
    """Delay/Doppler evaluation grid plus window geometry."""

    delay_bins: np.ndarray  # seconds
    doppler_bins: np.ndarray  # Hz
    cit: float = DEFAULT_CIT
    hop: float = DEFAULT_HOP
    frame_rate: float = DEFAULT_FRAME_RATE

    def __post_init__(self):
        delays = np.atleast_1d(np.asarray(self.delay_bins, dtype=np.float64))
        freqs = np.atleast_1d(np.asarray(self.doppler_bins, dtype=np.float64))
        object.__setattr__(self, "delay_bins", delays)
        object.__setattr__(self, "doppler_bins", freqs)
        if self.cit <= 0 or self.hop <= 0:
            raise ConfigError("cit and hop must be > 0")
        if delays.size == 0 or np.any(delays < 0):
            raise ConfigError("delay_bins must be nonempty and non-negative")
        if np.any(np.diff(delays) <= 0) and delays.size > 1:
            raise ConfigError("delay_bins must be strictly increasing")
        if freqs.size == 0 or (freqs.size > 1 and np.any(np.diff(freqs) <= 0)):
            raise ConfigError("doppler_bins must be nonempty and strictly increasing")
        # symmetric about 0: every +f needs its -f partner
        tol = 1e-9 * max(1.0, np.abs(freqs).max())
        if not np.allclose(np.sort(-freqs), freqs, atol=tol):
            raise ConfigError("doppler_bins must be symmetric about 0")
        half_frame_rate = self.frame_rate / 2.0
        if np.abs(freqs).max() > half_frame_rate + 1e-9:
            raise ConfigError(
                f"doppler bins beyond +/-{half_frame_rate:.1f} Hz "
                "(half the frame rate) are rejected"
            )

    @property
    def max_delay(self) -> float:
        return float(self.delay_bins[-1])


def default_grid(sample_rate: float = 1_000_000.0, n_delay_samples: int = 16,
                 f_span: float = 500.0, f_step: float = 10.0,
                 cit: float = DEFAULT_CIT, hop: float = DEFAULT_HOP,
                 frame_rate: float = DEFAULT_FRAME_RATE) -> CafGrid:
    """Default grid: delays 0..n_delay_samples, Doppler -f_span..+f_span."""
    delays = np.arange(n_delay_samples + 1) / sample_rate
    n_steps = int(round(f_span / f_step))
    freqs = np.arange(-n_steps, n_steps + 1) * f_step
    return CafGrid(delays, freqs, cit=cit, hop=hop, frame_rate=frame_rate)


@dataclass(frozen=True)
class AmbiguitySurface:
    values: np.ndarray  # (n_delay, n_doppler) complex
    grid: CafGrid
    t_start: float


@dataclass(frozen=True)
class Spectrogram:
    values: np.ndarray  # (n_windows, n_doppler) non-negative magnitudes
    time_axis: np.ndarray  # window start times, s
    freq_axis: np.ndarray  # Hz
    cit: float
    hop: float


def delayed_reference(samples: np.ndarray, delay_samples: float) -> np.ndarray:
    """y_r(t - tau) on the trace's own sample grid, zero-filled before the start.

    Integer delays are exact shifts; fractional delays use linear
    interpolation between the two bracketing integer shifts.
    """
    if delay_samples < 0:
        raise InputError("delay must be non-negative")
    n = samples.size
    out = np.zeros(n, dtype=np.complex128)
    d_floor = int(np.floor(delay_samples))
    frac = delay_samples - d_floor
    if frac < 1e-9 or frac > 1 - 1e-9:
        d = int(round(delay_samples))
        if d < n:
            out[d:] = samples[: n - d]
        return out
    lo, hi = d_floor, d_floor + 1
    if lo < n:
        out[lo:] += (1.0 - frac) * samples[: n - lo]
    if hi < n:
        out[hi:] += frac * samples[: n - hi]
    return out


def _check_pair(y_s: IqTrace, y_r: IqTrace) -> None:
    if abs(y_s.sample_rate - y_r.sample_rate) > 1e-6:
        raise InputError(
            f"sample-rate mismatch: {y_s.sample_rate} vs {y_r.sample_rate}"
        )
    if abs(y_s.t0 - y_r.t0) > 1e-12:
        raise InputError("traces must share the same start time")


def caf(y_s: IqTrace, y_r: IqTrace, grid: CafGrid,
        t_start: float | None = None) -> AmbiguitySurface:
    """Ambiguity surface of one window starting at t_start.

    Both traces must cover [t_start - max delay, t_start + cit]. The default
    t_start is the earliest time satisfying that.
    """
    _check_pair(y_s, y_r)
    fs = y_s.sample_rate
    if t_start is None:
        t_start = y_s.t0 + grid.max_delay
    n_win = int(round(grid.cit * fs))
    if n_win < 1:
        raise InputError("cit shorter than one sample")
    t_end = t_start + grid.cit
    lo_need = t_start - grid.max_delay
    for trace, name in ((y_s, "surveillance"), (y_r, "reference")):
        if lo_need < trace.t0 - 1e-12 or t_end > trace.t0 + trace.duration + 1e-12:
            raise InputError(
                f"{name} trace does not cover [{lo_need:.6f}, {t_end:.6f}] s"
            )
    k0 = int(round((t_start - y_s.t0) * fs))
    ys_win = y_s.samples[k0:k0 + n_win]
    if ys_win.size < n_win:
        raise InputError("surveillance trace does not cover the window")
    dt = 1.0 / fs
    t_local = np.arange(n_win) * dt
    q = np.empty((grid.delay_bins.size, n_win), dtype=np.complex128)
    for di, delay in enumerate(grid.delay_bins):
        zr = delayed_reference(y_r.samples, delay * fs)
        q[di] = ys_win * np.conj(zr[k0:k0 + n_win])
    values = kernels.caf_accumulate(q, grid.doppler_bins, t_local) * dt
    return AmbiguitySurface(values, grid, t_start)


def _window_layout(n_samples: int, fs: float, grid: CafGrid) -> tuple[int, int, int]:
    n_win = int(round(grid.cit * fs))
    n_hop = int(round(grid.hop * fs))
    if n_hop < 1:
        raise ConfigError("hop shorter than one sample")
    if n_samples < n_win:
        raise InputError(
            f"trace of {n_samples} samples shorter than one {n_win}-sample window"
        )
    n_windows = (n_samples - n_win) // n_hop + 1
    return n_win, n_hop, n_windows


def spectrogram(y_s: IqTrace, y_r: IqTrace, grid: CafGrid) -> Spectrogram:
    """Direct (brute-force) sliding-window spectrogram, max-|R| over delays."""
    _check_pair(y_s, y_r)
    fs = y_s.sample_rate
    n = min(len(y_s), len(y_r))
    n_win, n_hop, n_windows = _window_layout(n, fs, grid)
    dt = 1.0 / fs
    t_local = np.arange(n_win) * dt
    out = np.zeros((n_windows, grid.doppler_bins.size))
    q = np.empty((grid.delay_bins.size, n_win), dtype=np.complex128)
    delayed = [delayed_reference(y_r.samples, d * fs) for d in grid.delay_bins]
    for w in range(n_windows):
        k0 = w * n_hop
        ys_win = y_s.samples[k0:k0 + n_win]
        for di in range(grid.delay_bins.size):
            q[di] = ys_win * np.conj(delayed[di][k0:k0 + n_win])
        surface = np.abs(kernels.caf_accumulate(q, grid.doppler_bins, t_local)) * dt
        out[w] = surface.max(axis=0)
    times = y_s.t0 + np.arange(n_windows) * (n_hop / fs)
    return Spectrogram(out, times, grid.doppler_bins.copy(), n_win / fs, n_hop / fs)


def _fft_bin_indices(freqs: np.ndarray, fs: float, n_win: int) -> np.ndarray:
    j = freqs * n_win / fs
    j_round = np.round(j)
    if np.abs(j - j_round).max() > 1e-6:
        worst = freqs[np.abs(j - j_round).argmax()]
        raise InputError(
            f"doppler bin {worst} Hz is not on the window FFT lattice "
            f"(multiples of {fs / n_win:.6f} Hz); use the direct spectrogram "
            "or an aligned grid"
        )
    return (-j_round.astype(np.int64)) % n_win


def spectrogram_fast(y_s: IqTrace, y_r: IqTrace, grid: CafGrid) -> Spectrogram:
    """FFT-batched spectrogram, equal to spectrogram() up to float rounding.

    Per window and delay, the conjugate product q[k] is transformed once by
    an FFT; Doppler bin f = j*fs/n_win is read from FFT index (-j) mod n_win.
    Requires every doppler bin to sit on that FFT lattice.
    """
    _check_pair(y_s, y_r)
    fs = y_s.sample_rate
    n = min(len(y_s), len(y_r))
    n_win, n_hop, n_windows = _window_layout(n, fs, grid)
    cols = _fft_bin_indices(grid.doppler_bins, fs, n_win)
    dt = 1.0 / fs
    out = np.zeros((n_windows, grid.doppler_bins.size))
    ys = y_s.samples[:n]
    for delay in grid.delay_bins:
        zr = delayed_reference(y_r.samples, delay * fs)[:n]
        prod = ys * np.conj(zr)
        windows = np.lib.stride_tricks.sliding_window_view(prod, n_win)[::n_hop]
        spec = np.fft.fft(windows[:n_windows], axis=1)
        np.maximum(out, np.abs(spec[:, cols]) * dt, out=out)
    times = y_s.t0 + np.arange(n_windows) * (n_hop / fs)
    return Spectrogram(out, times, grid.doppler_bins.copy(), n_win / fs, n_hop / fs)


def argmax_doppler(spec: Spectrogram) -> np.ndarray:
    """Per-window frequency of the spectrogram's maximum magnitude."""
    return spec.freq_axis[np.argmax(spec.values, axis=1)]
