"""Least-squares fit of the accuracy-versus-duration law psi = gamma - alpha * T**(-beta).

beta is the only nonlinear parameter: for fixed beta, (gamma, alpha) solve a
linear least-squares problem in closed form. A log-spaced multi-start grid
over beta followed by golden-section refinement keeps the fit deterministic
and immune to the nonconvexity in beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

BETA_LO = 0.05
BETA_HI = 3.0
N_STARTS = 60
BETA_TOL = 1e-9  # golden-section interval width
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AccuracyCurve:
    gamma: float
    alpha: float
    beta: float
    rmse: float
    degenerate: bool = False


def _check_points(durations: np.ndarray, accuracies: np.ndarray) -> None:
    if durations.size != accuracies.size or durations.size < 3:
        raise InputError("need at least 3 (duration, accuracy) points")
    if np.any(durations <= 0):
        raise InputError("durations must be > 0")
    if not np.all(np.isfinite(accuracies)):
        raise InputError("accuracies must be finite")
    if np.unique(durations).size < 3:
        raise InputError("need at least 3 distinct durations (3 free parameters)")


def _solve_beta(durations: np.ndarray, accuracies: np.ndarray, beta: float
                ) -> tuple[float, float, float]:
    """Closed-form (gamma, alpha) and SSE for a fixed beta."""
    z = durations ** (-beta)
    design = np.column_stack([np.ones_like(z), -z])
    coef, _, _, _ = np.linalg.lstsq(design, accuracies, rcond=None)
    resid = accuracies - design @ coef
    return float(coef[0]), float(coef[1]), float(resid @ resid)


def fit(durations, accuracies) -> AccuracyCurve:
    """Fit (gamma, alpha, beta) by multi-start + refined least squares."""
    durations = np.asarray(durations, dtype=np.float64).ravel()
    accuracies = np.asarray(accuracies, dtype=np.float64).ravel()
    _check_points(durations, accuracies)
    q = durations.size

    if np.ptp(accuracies) == 0.0:
        # flat data: alpha hits its zero boundary and beta is unidentifiable
        return AccuracyCurve(float(accuracies[0]), 0.0, 1.0, 0.0, degenerate=True)

    betas = np.geomspace(BETA_LO, BETA_HI, N_STARTS)
    sses = np.array([_solve_beta(durations, accuracies, b)[2] for b in betas])
    best = int(np.argmin(sses))

    lo = betas[max(best - 1, 0)]
    hi = betas[min(best + 1, N_STARTS - 1)]
    # golden-section descent on SSE(beta) inside the bracketing interval
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    f_c = _solve_beta(durations, accuracies, c)[2]
    f_d = _solve_beta(durations, accuracies, d)[2]
    while b - a > BETA_TOL:
        if f_c < f_d:
            b, d, f_d = d, c, f_c
            c = b - _INVPHI * (b - a)
            f_c = _solve_beta(durations, accuracies, c)[2]
        else:
            a, c, f_c = c, d, f_d
            d = a + _INVPHI * (b - a)
            f_d = _solve_beta(durations, accuracies, d)[2]
    beta = 0.5 * (a + b)
    gamma, alpha, sse = _solve_beta(durations, accuracies, beta)

    if alpha <= 0.0:
        # non-increasing data: report the alpha -> 0 boundary fit
        gamma = float(accuracies.mean())
        resid = accuracies - gamma
        return AccuracyCurve(gamma, 0.0, beta, float(np.sqrt(resid @ resid / q)),
                             degenerate=True)
    return AccuracyCurve(gamma, alpha, beta, float(np.sqrt(sse / q)))


def eval_curve(curve: AccuracyCurve, duration, clamp: bool = True):
    """Model value at the given duration(s); clamped to [0, 1] unless clamp=False."""
    t = np.asarray(duration, dtype=np.float64)
    if np.any(t <= 0):
        raise InputError("duration must be > 0")
    raw = curve.gamma - curve.alpha * t ** (-curve.beta)
    out = np.clip(raw, 0.0, 1.0) if clamp else raw
    return float(out) if np.isscalar(duration) else out
