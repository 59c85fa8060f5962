"""Hot numeric kernels with numba acceleration and pure-numpy fallbacks.

Set MMSENSE_DISABLE_NUMBA=1 to force the numpy paths (same results,
different speed). Selection happens once at import time.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("MMSENSE_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on",
)

HAS_NUMBA = False
if not _DISABLED:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        pass


def is_numba_available() -> bool:
    return HAS_NUMBA


def numba_mode() -> str:
    if HAS_NUMBA:
        return "numba"
    return "numpy (disabled by MMSENSE_DISABLE_NUMBA)" if _DISABLED else "numpy (numba not importable)"


# ------------------------------------------------------------ CAF accumulation
#
# R[d, f] = sum_k q[d, k] * exp(+j * 2 * pi * freqs[f] * t[k])
# with q[d, k] = y_s[k] * conj(y_r[k - delay_d]) prepared by the caller.

def _caf_accumulate_np(q: np.ndarray, freqs: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty((q.shape[0], freqs.size), dtype=np.complex128)
    for fi in range(freqs.size):
        phasor = np.exp(2j * np.pi * freqs[fi] * t)
        out[:, fi] = q @ phasor
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _caf_accumulate_nb(q, freqs, t):  # pragma: no cover - timing only
        n_tau, n = q.shape
        out = np.zeros((n_tau, freqs.size), dtype=np.complex128)
        for fi in range(freqs.size):
            w = 2.0 * np.pi * freqs[fi]
            for k in range(n):
                e = complex(np.cos(w * t[k]), np.sin(w * t[k]))
                for d in range(n_tau):
                    out[d, fi] += q[d, k] * e
        return out

    def caf_accumulate(q, freqs, t):
        return _caf_accumulate_nb(
            np.ascontiguousarray(q, dtype=np.complex128),
            np.ascontiguousarray(freqs, dtype=np.float64),
            np.ascontiguousarray(t, dtype=np.float64),
        )

else:
    caf_accumulate = _caf_accumulate_np


# ------------------------------------------------------------ col2im scatter
#
# Backward pass of a 3x3 same-padding convolution: scatter column gradients
# back onto the (zero-padded) input. dcol6 has shape (n, h, w, c, kh, kw);
# the result is the padded input gradient (n, c, h + kh - 1, w + kw - 1).

def _col2im_np(dcol6: np.ndarray) -> np.ndarray:
    n, h, w, c, kh, kw = dcol6.shape
    out = np.zeros((n, c, h + kh - 1, w + kw - 1), dtype=dcol6.dtype)
    for ky in range(kh):
        for kx in range(kw):
            out[:, :, ky:ky + h, kx:kx + w] += dcol6[:, :, :, :, ky, kx].transpose(0, 3, 1, 2)
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _col2im_nb(dcol6):  # pragma: no cover - timing only
        n, h, w, c, kh, kw = dcol6.shape
        out = np.zeros((n, c, h + kh - 1, w + kw - 1), dtype=dcol6.dtype)
        for i in range(n):
            for y in range(h):
                for x in range(w):
                    for ch in range(c):
                        for ky in range(kh):
                            for kx in range(kw):
                                out[i, ch, y + ky, x + kx] += dcol6[i, y, x, ch, ky, kx]
        return out

    def col2im(dcol6):
        return _col2im_nb(np.ascontiguousarray(dcol6))

else:
    col2im = _col2im_np
