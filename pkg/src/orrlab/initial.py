"""Initial vorticity families.

All families have zero (0, 0) content, so the vorticity has zero mean.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .spectral import Grid, SpectralField, from_spectral

__all__ = [
    "gaussian_bump",
    "gevrey_bump",
    "two_mode_echo",
    "custom_modes",
    "random_field",
    "support_width",
    "check_support",
]


def gaussian_bump(grid: Grid, k: int, eta_c: float, width: float, amplitude: float) -> np.ndarray:
    """Coefficients of amplitude * cos(k z + eta_c y) * exp(-width^2 y^2 / 2).

    The envelope is Gaussian in eta with standard deviation ``width``,
    which is entire in y and hence Gevrey regular.  ``amplitude`` is the
    peak physical value.
    """
    if k == 0:
        raise ConfigError("gaussian_bump needs k != 0; use custom_modes for k = 0")
    a = amplitude * np.sqrt(2 * np.pi) / (2 * width)
    c = np.zeros(grid.shape, dtype=complex)
    row = a * np.exp(-((grid.eta - eta_c) ** 2) / (2 * width ** 2))
    c[grid.k_max + k, :] += row
    c[grid.k_max - k, :] += a * np.exp(-((grid.eta + eta_c) ** 2) / (2 * width ** 2))
    c[:, 0] = 0.0
    return c


def gevrey_bump(grid: Grid, epsilon: float, width: float = 2.0, k: int = 1) -> SpectralField:
    """Gaussian-in-eta envelopes on k = +-1 (or +-k) centred at eta = 0."""
    return SpectralField(grid, gaussian_bump(grid, k, 0.0, width, epsilon))


def two_mode_echo(grid: Grid, epsilon: float, eta0: float, width: float = 2.0) -> SpectralField:
    """Two seeds on k = 1: one centred at eta = 0, one at eta = eta0 (on-grid)."""
    grid.eta_index(eta0)
    c = gaussian_bump(grid, 1, 0.0, width, epsilon) + gaussian_bump(grid, 1, eta0, width, epsilon)
    return SpectralField(grid, c)


def custom_modes(grid: Grid, modes) -> SpectralField:
    """Field from a list of ``(k, eta, re, im)`` entries plus conjugates."""
    c = np.zeros(grid.shape, dtype=complex)
    for entry in modes:
        k, eta, re, im = entry
        j = grid.eta_index(eta)
        if k == 0 and j == 0:
            raise ConfigError("custom mode (0, 0) is not allowed: the vorticity must have zero mean")
        val = complex(re, im)
        c[grid.index(k, j)] += val
        c[grid.index(-k, -j)] += np.conj(val)
    c[:, 0] = 0.0
    return SpectralField(grid, c)


def random_field(grid: Grid, rng: np.random.Generator, decay: float = 1.0,
                 dealiased: bool = False) -> SpectralField:
    """Random real field with Gaussian coefficients damped by exp(-decay |k, eta|^(1/2))."""
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c *= np.exp(-decay * np.sqrt(np.abs(grid.K) + np.abs(grid.ETA)))
    f = SpectralField(grid, c).symmetrize()
    if dealiased:
        f = f.with_coeffs(np.where(grid.dealias_mask, f.coeffs, 0.0))
    return f


def support_width(field: SpectralField, rel: float = 1e-3) -> float:
    """Length of the y-range where the z-RMS of the field exceeds ``rel`` times its max.

    The window is treated as periodic, so the width is L_y minus the
    longest contiguous quiet stretch.
    """
    g = field.grid
    u = from_spectral(field)
    prof = np.sqrt(np.mean(u ** 2, axis=0))
    peak = prof.max()
    if peak == 0:
        return 0.0
    quiet = prof < rel * peak
    if not quiet.any():
        return g.L_y
    # longest run of quiet points on the circle
    q = np.concatenate([quiet, quiet])
    best = run = 0
    for v in q:
        run = run + 1 if v else 0
        best = max(best, run)
    best = min(best, g.n_y)
    return g.L_y * (1 - best / g.n_y)


def check_support(field: SpectralField, factor: float = 4.0) -> None:
    """Raise ConfigError unless L_y exceeds ``factor`` times the support width."""
    w = support_width(field)
    if not field.grid.L_y > factor * w:
        raise ConfigError(
            f"grid.L_y={field.grid.L_y:.6g} must exceed {factor:g} x the initial support width {w:.6g}"
        )
