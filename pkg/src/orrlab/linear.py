"""Exact solutions of the Euler equations linearized around Couette flow.

In the sheared frame the linear vorticity is stationary, so everything
below is a closed-form multiplier on the initial coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .spectral import SpectralField

__all__ = [
    "LinearDiagnostics",
    "linear_evolve",
    "orr_streamfunction",
    "laplacian_symbol",
    "velocity_from_streamfunction",
    "linear_velocity_series",
    "xavg_feedback",
    "xavg_feedback_field",
    "fit_loglog_slope",
]


@dataclass
class LinearDiagnostics:
    """Velocity norms of the linear solution sampled at ``times``."""

    times: np.ndarray
    ux_fluct_norm: np.ndarray
    uy_norm: np.ndarray
    ux_mean_feedback: np.ndarray
    mode_traces: dict = field(default_factory=dict)


def linear_evolve(omega_in: SpectralField, t: float) -> SpectralField:
    """Linear vorticity at time t in the sheared frame (coefficients unchanged)."""
    return SpectralField(omega_in.grid, omega_in.coeffs.copy(), float(t))


def laplacian_symbol(grid, t: float) -> np.ndarray:
    """k^2 + (eta - k t)^2, the negated symbol of the sheared Laplacian."""
    return grid.K ** 2 + (grid.ETA - grid.K * t) ** 2


def orr_streamfunction(omega_in: SpectralField, t: float) -> SpectralField:
    """phi_hat(t, k, eta) = -omega_hat(k, eta) / (k^2 + (eta - k t)^2).

    The k = 0 column uses -1/eta^2 and the (0, 0) coefficient is zero.
    """
    g = omega_in.grid
    sym = laplacian_symbol(g, t)
    zero = sym == 0.0
    inv = np.where(zero, 0.0, -1.0 / np.where(zero, 1.0, sym))
    return SpectralField(g, omega_in.coeffs * inv, float(t))


def velocity_from_streamfunction(phi: SpectralField, t: float | None = None):
    """Physical velocity (U^x, U^y) = (-d_y psi, d_x psi) in sheared coordinates.

    Returns the coefficient arrays of U^x and U^y.
    """
    g = phi.grid
    tt = phi.frame_time if t is None else t
    ux = -1j * (g.ETA - g.K * tt) * phi.coeffs
    uy = 1j * g.K * phi.coeffs
    return ux, uy


def _norm(coeffs: np.ndarray, d_eta: float) -> float:
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2) * d_eta))


def xavg_feedback_field(ux: np.ndarray, uy: np.ndarray, grid, t: float) -> np.ndarray:
    """Coefficients over eta of the x-average <U^y d_y U^x>, with no aliasing.

    The product transform is (1 / 2 pi) times the convolution; only pairs
    (l, -l) reach k = 0.  The returned array lives on the extended grid of
    2 n_y - 1 eta values j Delta eta, j = -n_y .. n_y - 2, so eta = 0 sits
    at index n_y.
    """
    km = grid.k_max
    d_eta = grid.d_eta
    out = np.zeros(2 * grid.n_y - 1, dtype=complex)
    # d_y at fixed x acting on U^x in sheared coordinates
    dy_ux = 1j * (grid.ETA - grid.K * t) * ux
    rows = np.flatnonzero(np.any(uy != 0, axis=1))
    for r in rows:
        l = r - km
        if l == 0:
            continue
        partner = -l + km
        if not np.any(dy_ux[partner]):
            continue
        out += fftconvolve(uy[r], dy_ux[partner])
    return out * d_eta / (2 * np.pi)


def xavg_feedback(omega_in: SpectralField, t: float) -> float:
    """|| <U^y d_y U^x>(t) ||_2 for the linear solution from ``omega_in``."""
    g = omega_in.grid
    phi = orr_streamfunction(omega_in, t)
    ux, uy = velocity_from_streamfunction(phi, t)
    ux = np.where(g.K != 0, ux, 0.0)
    fb = xavg_feedback_field(ux, uy, g, t)
    return _norm(fb, g.d_eta)


def linear_velocity_series(omega_in: SpectralField, times, modes=None) -> LinearDiagnostics:
    """Norms of the U^x fluctuation, U^y and the x-average feedback.

    Parameters
    ----------
    omega_in : SpectralField
        Initial vorticity.
    times : array_like
        Increasing sample times.
    modes : list of (k, j), optional
        Modes whose streamfunction magnitude is traced.
    """
    g = omega_in.grid
    times = np.asarray(times, dtype=float)
    ux_n = np.empty_like(times)
    uy_n = np.empty_like(times)
    fb_n = np.empty_like(times)
    traces = {m: np.empty_like(times) for m in (modes or [])}
    nonzero_k = g.K != 0
    for i, t in enumerate(times):
        phi = orr_streamfunction(omega_in, t)
        ux, uy = velocity_from_streamfunction(phi, t)
        ux = np.where(nonzero_k, ux, 0.0)
        ux_n[i] = _norm(ux, g.d_eta)
        uy_n[i] = _norm(uy, g.d_eta)
        fb_n[i] = _norm(xavg_feedback_field(ux, uy, g, t), g.d_eta)
        for m in traces:
            traces[m][i] = abs(phi[m])
    return LinearDiagnostics(times, ux_n, uy_n, fb_n, traces)


def fit_loglog_slope(t, y, window=(10.0, 100.0)) -> float:
    """Least-squares slope of log y against log t over ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = (t >= window[0]) & (t <= window[1]) & (y > 0)
    if np.count_nonzero(sel) < 2:
        raise ValueError(f"fewer than two positive samples in window {window}")
    slope, _ = np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)
    return float(slope)
