"""Per-frame CSI estimation and the CSI-magnitude spectrogram baseline.

Each frame's FIR channel taps are least-squares fitted from the known
training sequence. The baseline spectrogram is the sliding-window DFT of
the dominant tap's magnitude sequence; taking magnitudes first removes any
common frequency offset exactly, at the cost of folding Doppler onto a
non-negative axis and introducing intermodulation between movers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .caf import Spectrogram
from .errors import ConfigError, InputError, NumericsError
from .waveform import FrameSpec, IqTrace, training_sequence

MAX_CONDITION = 1e8
DEFAULT_N_TAPS = 6


@dataclass(frozen=True)
class CsiSeries:
    values: np.ndarray  # (n_frames, n_taps) complex
    frame_rate: float
    n_taps: int
    t0: float = 0.0

    def frame_times(self) -> np.ndarray:
        return self.t0 + np.arange(self.values.shape[0]) / self.frame_rate


def training_matrix(train: np.ndarray, n_taps: int) -> np.ndarray:
    """Convolution (Toeplitz) matrix X with X[r, j] = train[r + n_taps - 1 - j].

    Rows cover only training indices where every modeled tap still lands
    inside the training block, so payload chips never leak into the fit.
    """
    n = train.size
    if not 1 <= n_taps <= n:
        raise ConfigError(f"n_taps must be in 1..{n}, got {n_taps}")
    rows = n - n_taps + 1
    x = np.empty((rows, n_taps), dtype=np.complex128)
    for j in range(n_taps):
        x[:, j] = train[n_taps - 1 - j : n - j]
    return x


def estimate_csi(y_s: IqTrace, spec: FrameSpec, n_taps: int = DEFAULT_N_TAPS) -> CsiSeries:
    """Least-squares FIR taps per frame from the received training segments."""
    n_frame = spec.n_frame
    if abs(y_s.sample_rate - spec.sample_rate) > 1e-6:
        raise InputError("trace sample rate does not match the frame spec")
    if len(y_s) < n_frame or len(y_s) % n_frame != 0:
        raise InputError(
            f"trace of {len(y_s)} samples is not a whole number of "
            f"{n_frame}-sample frames"
        )
    train = training_sequence(spec)
    x = training_matrix(train, n_taps)
    cond = np.linalg.cond(x)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericsError(
            f"training matrix ill-conditioned: condition number {cond:.3e}"
        )
    pinv = np.linalg.pinv(x)
    n_frames = len(y_s) // n_frame
    frames = y_s.samples.reshape(n_frames, n_frame)
    received = frames[:, n_taps - 1 : spec.n_training]
    taps = received @ pinv.T
    return CsiSeries(taps, spec.frame_rate, n_taps, y_s.t0)


def dominant_tap_magnitude(csi: CsiSeries) -> np.ndarray:
    """Magnitude series of the tap with the largest mean power."""
    power = np.mean(np.abs(csi.values) ** 2, axis=0)
    return np.abs(csi.values[:, int(np.argmax(power))])


def csi_spectrogram(csi: CsiSeries, cit: float = 0.1, hop: float = 0.05) -> Spectrogram:
    """Sliding-window DFT of the mean-removed dominant-tap magnitude.

    The magnitude sequence is real, so only the non-negative half of the
    spectrum is kept (0 .. frame_rate/2).
    """
    series = dominant_tap_magnitude(csi)
    n_win = int(round(cit * csi.frame_rate))
    n_hop = int(round(hop * csi.frame_rate))
    if n_win < 2 or n_hop < 1:
        raise ConfigError("cit/hop too short for the frame rate")
    if series.size < n_win:
        raise InputError(
            f"CSI series of {series.size} frames shorter than one "
            f"{n_win}-frame window"
        )
    n_windows = (series.size - n_win) // n_hop + 1
    dt = 1.0 / csi.frame_rate
    out = np.empty((n_windows, n_win // 2 + 1))
    for w in range(n_windows):
        seg = series[w * n_hop : w * n_hop + n_win]
        out[w] = np.abs(np.fft.rfft(seg - seg.mean())) * dt
    freqs = np.arange(n_win // 2 + 1) * (csi.frame_rate / n_win)
    times = csi.t0 + np.arange(n_windows) * (n_hop / csi.frame_rate)
    return Spectrogram(out, times, freqs, n_win * dt, n_hop * dt)
