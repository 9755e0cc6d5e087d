"""Littlewood-Paley shells and the paraproduct decomposition.

The low-pass profile psi equals one on |xi| <= 1/2 and zero on
|xi| >= 3/4.  On the transition it is built from the bump
beta(x) = exp(1 - 1/(1 - x^2)) as beta(x) / (beta(x) + beta(1 - x)),
x = 4|xi| - 2, which is C-infinity.  With rho(xi) = psi(xi/2) - psi(xi)
the shells are

    f_{1/2} = psi(|D|) f,   f_M = rho(|D| / M) f,   M = 1, 2, 4, ...

and they sum to f.  The frequency magnitude is |k| + |eta|.
"""

from __future__ import annotations

import numpy as np

from .spectral import SpectralField, product

__all__ = [
    "psi",
    "rho",
    "shells",
    "lp_project",
    "lp_low",
    "paraproduct",
]


def _beta(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out


def psi(xi):
    """Smooth low-pass profile: 1 for |xi| <= 1/2, 0 for |xi| >= 3/4."""
    a = np.abs(np.asarray(xi, dtype=float))
    x = np.clip(4.0 * a - 2.0, 0.0, 1.0)
    num = _beta(x)
    den = num + _beta(1.0 - x)
    out = np.where(a <= 0.5, 1.0, 0.0)
    mid = (a > 0.5) & (a < 0.75)
    out = np.where(mid, num / np.where(den > 0, den, 1.0), out)
    return out


def rho(xi):
    """Annular profile psi(xi/2) - psi(xi), supported in 1/2 <= |xi| <= 3/2."""
    xi = np.asarray(xi, dtype=float)
    return psi(xi / 2.0) - psi(xi)


def _magnitude(field: SpectralField) -> np.ndarray:
    g = field.grid
    return np.abs(g.K) + np.abs(g.ETA)


def shells(field: SpectralField) -> list[float]:
    """Dyadic shells 1/2, 1, 2, ... up to the top frequency of the grid."""
    top = float(_magnitude(field).max())
    out = [0.5]
    m = 1.0
    while m / 2 <= top:
        out.append(m)
        m *= 2
    return out


def lp_project(field: SpectralField, M: float) -> SpectralField:
    """Shell projection f_M (f_{1/2} is the low-pass part)."""
    mag = _magnitude(field)
    mult = psi(mag) if M == 0.5 else rho(mag / M)
    return field.with_coeffs(field.coeffs * mult)


def lp_low(field: SpectralField, M: float) -> SpectralField:
    """f_{<M}: sum of the shells strictly below M."""
    mag = _magnitude(field)
    if M <= 0.5:
        return field.with_coeffs(np.zeros_like(field.coeffs))
    # the shells 1/2 .. M/2 telescope to psi(|D| / M)
    return field.with_coeffs(field.coeffs * psi(mag / M))


def paraproduct(f: SpectralField, g: SpectralField):
    """Split the dealiased product f g into (T_f g, T_g f, R(f, g)).

    T_f g = sum_{N >= 8} f_{<N/8} g_N collects low-high interactions,
    T_g f is its mirror and R(f, g) sums g_{N'} f_N over
    N/8 <= N' <= 8 N.  Every term uses the same dealiased product, so
    the three parts add up to ``product(f, g)``.
    """
    levels = shells(f)
    fs = {M: lp_project(f, M) for M in levels}
    gs = {M: lp_project(g, M) for M in levels}
    zero = f.with_coeffs(np.zeros_like(f.coeffs))
    t_fg = zero.copy()
    t_gf = zero.copy()
    rem = zero.copy()
    for N in levels:
        if N >= 8:
            t_fg = t_fg + product(lp_low(f, N / 8), gs[N])
            t_gf = t_gf + product(lp_low(g, N / 8), fs[N])
        near = [Np for Np in levels if N / 8 <= Np <= 8 * N]
        if near:
            g_near = gs[near[0]]
            for Np in near[1:]:
                g_near = g_near + gs[Np]
            rem = rem + product(g_near, fs[N])
    return t_fg, t_gf, rem
