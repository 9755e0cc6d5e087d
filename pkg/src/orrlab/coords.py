"""Adaptive coordinates (z, v), the operator Delta_t and the energy functional.

Given a solver snapshot at time t with accumulated integrals
I_ux = int_0^t <U^x> and I_omega = int_0^t <omega>, the coordinate

    v(t, y) = y + I_ux(y) / t

follows the time-averaged mean flow.  With ' the derivative in v,

    v'(t, v)   = 1 - I_omega(y(v)) / t,
    v''        = v' d_v v',
    [d_t v]    = (u0(v) - (v - y)) / t,       u0(v) = <U^x>(t, y(v)),
    hbar       = v' d_v [d_t v]   ( = -(f0 + v' - 1) / t ),

where f0(v) = <omega>(t, y(v)).  Functions of y are moved onto the
uniform v grid by monotone cubic (PCHIP) interpolation of their samples
at the nodes v(y_i), extended periodically since v - y is periodic.

Functions of v alone are measured as z-independent fields on the
(z, v) window, so they use the k = 0 row of the spectral conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.interpolate import PchipInterpolator

from . import weights as W
from .errors import ConfigError, DivergenceError, InvertibilityError
from .spectral import Grid, SpectralField, workers

__all__ = [
    "CoordinateState",
    "build_coordinates",
    "check_identities",
    "check_vpde_residuals",
    "apply_delta_t",
    "solve_delta_t",
    "delta_t_asymmetry",
    "coordinates_from_profile",
    "energy_E",
    "ck_functional",
    "CK_KINDS",
    "mean_profile",
    "profile_coeffs",
    "profile_values",
]


# ---------------------------------------------------------------------------
# one-dimensional helpers on the y (or v) grid


def profile_coeffs(values: np.ndarray, grid: Grid) -> np.ndarray:
    """k = 0 row coefficients of a real function of y sampled on ``grid.y``."""
    c = sfft.fftshift(sfft.fft(values, axis=-1, workers=workers()), axes=-1)
    c = c * (grid.L_y / grid.n_y) * grid._phase
    c[..., 0] = 0.0
    return c


def profile_values(coeffs: np.ndarray, grid: Grid, real: bool = True) -> np.ndarray:
    """Inverse of :func:`profile_coeffs` (row-wise for 2D input)."""
    c = np.array(coeffs, dtype=complex)
    c[..., 0] = 0.0
    u = sfft.ifft(sfft.ifftshift(c * grid._phase, axes=-1), axis=-1, workers=workers())
    u *= grid.n_y / grid.L_y
    return u.real.copy() if real else u


def _dv(values: np.ndarray, grid: Grid) -> np.ndarray:
    return profile_values(1j * grid.eta * profile_coeffs(values, grid), grid)


def mean_profile(h: SpectralField) -> np.ndarray:
    """x-average <h>(y) on the y grid."""
    return profile_values(h.coeffs[h.grid.k_max], h.grid)


def _mean_velocity(h: SpectralField) -> np.ndarray:
    """<U^x>(y) from the k = 0 row: U^x_hat = i h_hat / eta."""
    g = h.grid
    row = h.coeffs[g.k_max]
    eta = g.eta
    safe = np.where(eta == 0, 1.0, eta)
    return profile_values(np.where(eta == 0, 0.0, 1j * row / safe), g)


def _periodic_pchip(nodes: np.ndarray, values: np.ndarray, period: float, axis: int = -1):
    """PCHIP through (nodes, values) extended by one period on both sides."""
    x = np.concatenate([nodes - period, nodes, nodes + period])
    v = np.concatenate([values, values, values], axis=axis)
    return PchipInterpolator(x, v, axis=axis, extrapolate=False)


# ---------------------------------------------------------------------------
# coordinate state


@dataclass
class CoordinateState:
    """Coordinate fields at time t; all v-fields live on ``grid.y`` read as v."""

    grid: Grid
    t: float
    v_of_y: np.ndarray
    y_of_v: np.ndarray
    vprime: np.ndarray
    vprimeprime: np.ndarray
    dtv: np.ndarray
    hbar: np.ndarray
    f0: np.ndarray
    u0: np.ndarray
    v_minus_y: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def v(self) -> np.ndarray:
        return self.grid.y

    @property
    def perturbation(self) -> float:
        """||v' - 1||_inf."""
        return float(np.max(np.abs(self.vprime - 1.0)))


def build_coordinates(state) -> CoordinateState:
    """Coordinate fields from a solver snapshot (requires t >= 1)."""
    g = state.grid
    t = float(state.t)
    if t < 1.0:
        raise ConfigError(f"coordinate diagnostics need t >= 1 (got t={t:g})")
    y = g.y
    shift = state.I_ux / t
    v_nodes = y + shift
    vp_y = 1.0 - state.I_omega / t
    steps = np.diff(np.concatenate([v_nodes, [v_nodes[0] + g.L_y]]))
    if np.any(steps <= 0) or np.any(vp_y <= 0):
        raise InvertibilityError(
            f"v(y) is not monotone at t={t:g}: ||v' - 1||_inf = {np.max(np.abs(vp_y - 1)):.3g}"
        )
    ux = _mean_velocity(state.h)
    om = mean_profile(state.h)
    stacked = np.stack([y, shift, vp_y, ux, om])
    # y itself is not periodic; interpolate y - v's periodic part instead
    at_v = _periodic_pchip(v_nodes, stacked[1:], g.L_y, axis=1)(y)
    v_minus_y, vprime, u0, f0 = at_v
    y_of_v = y - v_minus_y
    return _assemble(g, t, v_nodes, y_of_v, vprime, u0, f0, v_minus_y, {"source": "snapshot"})


def _assemble(g, t, v_nodes, y_of_v, vprime, u0, f0, v_minus_y, meta) -> CoordinateState:
    vpp = vprime * _dv(vprime, g)
    dtv = (u0 - v_minus_y) / t
    hbar = vprime * _dv(dtv, g)
    return CoordinateState(g, t, v_nodes, y_of_v, vprime, vpp, dtv, hbar, f0, u0, v_minus_y, dict(meta))


def coordinates_from_profile(grid: Grid, t: float, vprime: np.ndarray,
                             vprimeprime: np.ndarray | None = None) -> CoordinateState:
    """Coordinate state with a prescribed v' profile (for the elliptic solver).

    Only v', v'' and t are meaningful; the remaining fields are zero.
    """
    vprime = np.asarray(vprime, dtype=float)
    if vprime.shape != (grid.n_y,):
        raise ConfigError(f"v' profile must have shape ({grid.n_y},), got {vprime.shape}")
    vpp = vprime * _dv(vprime, grid) if vprimeprime is None else np.asarray(vprimeprime, dtype=float)
    zero = np.zeros(grid.n_y)
    return CoordinateState(grid, float(t), grid.y.copy(), grid.y.copy(), vprime, vpp, zero.copy(),
                           zero.copy(), zero.copy(), zero.copy(), zero.copy(), {"source": "profile"})


def _rel(res: np.ndarray, ref: np.ndarray) -> float:
    nr = float(np.linalg.norm(ref))
    nres = float(np.linalg.norm(res))
    if nr == 0.0:
        return 0.0 if nres == 0.0 else math.inf
    return nres / nr


def check_identities(coords: CoordinateState) -> dict:
    """Relative residuals of the two pointwise identities.

    ``hbar``: v' d_v [d_t v] + (f0 + v' - 1)/t, relative to ||f0||/t;
    ``u0``:   d_v u0 + f0 / v', relative to ||f0 / v'||.
    """
    g = coords.grid
    t = coords.t
    r_h = coords.hbar + (coords.f0 + coords.vprime - 1.0) / t
    r_u = _dv(coords.u0, g) + coords.f0 / coords.vprime
    return {
        "hbar": _rel(r_h, coords.f0 / t),
        "u0": _rel(r_u, coords.f0 / coords.vprime),
    }


def check_vpde_residuals(history) -> dict:
    """Residuals of the v' transport equation and of v'' = v' d_v v'.

    The time derivative of t (v' - 1) at fixed v is a centred difference
    between neighbouring snapshots, so the first and last snapshot only
    serve as stencil ends.
    """
    hist = list(history)
    if len(hist) < 3:
        raise ConfigError(f"need at least 3 coordinate snapshots, got {len(hist)}")
    pde, vpp = [], []
    for prev, cur, nxt in zip(hist, hist[1:], hist[2:]):
        g = cur.grid
        dt = nxt.t - prev.t
        if dt <= 0:
            raise ConfigError("coordinate snapshots must be ordered in time")
        ddt = (nxt.t * (nxt.vprime - 1) - prev.t * (prev.vprime - 1)) / dt
        res = ddt + cur.dtv * cur.t * _dv(cur.vprime, g) + cur.f0
        pde.append(_rel(res, cur.f0))
        vpp.append(_rel(cur.vprimeprime - cur.vprime * _dv(cur.vprime, g), cur.vprimeprime)
                   if np.any(cur.vprimeprime) else 0.0)
    return {
        "times": [c.t for c in hist[1:-1]],
        "pdevp": pde,
        "vpp": vpp,
        "pdevp_max": max(pde),
        "vpp_max": max(vpp),
    }


# ---------------------------------------------------------------------------
# Delta_t


def _mul_v(coeffs: np.ndarray, profile: np.ndarray, grid: Grid) -> np.ndarray:
    """Coefficients of (function of v) x (field), product taken on the v grid."""
    rows = profile_values(coeffs, grid, real=False)
    return profile_coeffs(rows * profile[None, :], grid)


def _symbols(grid: Grid, t: float):
    D = 1j * (grid.ETA - grid.K * t)
    lap = -(grid.K ** 2) + D ** 2
    return D, lap.real


def apply_delta_t(phi: SpectralField, coords: CoordinateState) -> SpectralField:
    """d_zz phi + v'^2 (d_v - t d_z)^2 phi + v'' (d_v - t d_z) phi."""
    g = phi.grid
    t = coords.t
    D, _ = _symbols(g, t)
    c = phi.coeffs
    out = -(g.K ** 2) * c
    out = out + _mul_v(D * D * c, coords.vprime ** 2, g) + _mul_v(D * c, coords.vprimeprime, g)
    return SpectralField(g, out, t)


def delta_t_asymmetry(coords: CoordinateState, rng: np.random.Generator) -> float:
    """|<Delta_t a, b> - <a, Delta_t b>| / (||Delta_t a|| ||b||) for random a, b."""
    from .initial import random_field
    from .spectral import inner, l2_norm

    g = coords.grid
    a = random_field(g, rng, 0.5)
    b = random_field(g, rng, 0.5)
    a.coeffs[g.k_max] = 0.0
    b.coeffs[g.k_max] = 0.0
    la, lb = apply_delta_t(a, coords), apply_delta_t(b, coords)
    return abs(inner(la, b) - inner(a, lb)) / (l2_norm(la) * l2_norm(b))


def solve_delta_t(f: SpectralField, coords: CoordinateState, tol: float = 1e-12,
                  max_iter: int = 100) -> SpectralField:
    """Solve Delta_t phi = f by iterating around Delta_L.

    Each step solves
        Delta_L phi_{n+1} = f + (1 - v'^2)(d_v - t d_z)^2 phi_n - v'' (d_v - t d_z) phi_n
    exactly in Fourier space, starting from phi_0 = 0.  The returned
    field carries ``meta`` with the iteration count, the residual history
    and the contraction factor (geometric mean of residual ratios).
    """
    g = f.grid
    t = coords.t
    if coords.perturbation > 0.75:
        raise DivergenceError(
            f"||v' - 1||_inf = {coords.perturbation:.3g} exceeds 3/4", coords.perturbation
        )
    D, lap = _symbols(g, t)
    zero = lap == 0
    inv = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, lap))
    a2 = 1.0 - coords.vprime ** 2
    fc = np.where(zero, 0.0, f.coeffs)
    f_norm = float(np.sqrt(np.sum(np.abs(fc) ** 2)))
    phi = np.zeros_like(fc)
    history = []
    if f_norm == 0.0:
        out = SpectralField(g, phi, t)
        out.meta.update(iterations=0, residuals=[0.0], contraction=0.0, residual=0.0)
        return out
    rising = 0
    for it in range(1, max_iter + 1):
        rhs = fc + _mul_v(D * D * phi, a2, g) - _mul_v(D * phi, coords.vprimeprime, g)
        phi = inv * rhs
        res = apply_delta_t(SpectralField(g, phi, t), coords).coeffs - fc
        history.append(float(np.sqrt(np.sum(np.abs(res) ** 2))) / f_norm)
        if history[-1] <= tol:
            break
        if len(history) > 1 and history[-1] >= history[-2]:
            rising += 1
            if rising >= 5:
                raise DivergenceError(
                    f"elliptic iteration stopped contracting after {it} steps "
                    f"(||v' - 1||_inf = {coords.perturbation:.3g})",
                    coords.perturbation,
                )
        else:
            rising = 0
    ratios = [b / a for a, b in zip(history, history[1:]) if a > 0 and b > 0]
    contraction = float(np.exp(np.mean(np.log(ratios)))) if ratios else 0.0
    out = SpectralField(g, phi, t)
    out.meta.update(iterations=len(history), residuals=history, contraction=contraction,
                    residual=history[-1])
    return out


# ---------------------------------------------------------------------------
# energy and CK functionals


def resample_to_v(state, coords: CoordinateState) -> SpectralField:
    """The vorticity f(t, z, v) = h(t, z + t (v - y(v)), y(v)) on the (z, v) grid."""
    g = state.grid
    rows = profile_values(state.h.coeffs, g, real=False)
    ext = _periodic_pchip(coords.v_of_y, np.concatenate([rows.real, rows.imag]), g.L_y, axis=1)
    vals = ext(g.y)
    n = g.shape[0]
    rows_v = vals[:n] + 1j * vals[n:]
    rows_v *= np.exp(1j * g.k[:, None] * coords.t * coords.v_minus_y[None, :])
    return SpectralField(g, profile_coeffs(rows_v, g), coords.t)


def _jt(t: float) -> float:
    return math.sqrt(1.0 + t * t)


def _row_norm_sq(coeffs: np.ndarray, log_mult, d_eta: float) -> float:
    return W.weighted_norm(coeffs, log_mult, d_eta) ** 2


def energy_E(state, coords: CoordinateState, spec: W.MultiplierSpec, epsilon: float | None = None,
             K_D: float = 1.0, K_v: float = 100.0):
    """E = 1/2 ||A f||^2 + E_v with its components.

    E_v = <t>^{2+2s} ||A/<d_v>^s hbar||^2 + <t>^{4 - K_D eps} ||[d_t v]||^2_{G^{lambda(t), sigma-6}}
          + ||A^R (v' - 1)||^2 / K_v.
    ``epsilon`` defaults to ``state.params['epsilon']`` (0 if absent).
    """
    g = state.grid
    t = coords.t
    if epsilon is None:
        epsilon = float(state.params.get("epsilon", 0.0))
    lam = spec.lambda_of(t)
    f = resample_to_v(state, coords)
    log_a = W.log_A(t, g.K, g.ETA, spec, lam)
    e_f = 0.5 * _row_norm_sq(f.coeffs, log_a, g.d_eta)
    eta = g.eta
    br = 0.5 * np.log1p(eta ** 2)
    log_a0 = W.log_A(t, 0, eta, spec, lam)
    hb = profile_coeffs(coords.hbar, g)
    dtv = profile_coeffs(coords.dtv, g)
    vp = profile_coeffs(coords.vprime - 1.0, g)
    e_hbar = _jt(t) ** (2 + 2 * spec.s) * _row_norm_sq(hb, log_a0 - spec.s * br, g.d_eta)
    log_g = lam * np.abs(eta) ** spec.s + (spec.sigma - 6) * br
    e_dtv = _jt(t) ** (4 - K_D * epsilon) * _row_norm_sq(dtv, log_g, g.d_eta)
    e_vp = _row_norm_sq(vp, W.log_A_R(t, eta, spec, lam), g.d_eta) / K_v
    comps = {"Af": e_f, "hbar": e_hbar, "dtv": e_dtv, "vprime": e_vp}
    comps["E_v"] = e_hbar + e_dtv + e_vp
    return e_f + comps["E_v"], comps


CK_KINDS = (
    "CK_lambda",
    "CK_w",
    "CCK1_lambda",
    "CCK1_w",
    "CCK2_lambda",
    "CCK2_w",
    "CKv1_lambda",
    "CKv1_w",
    "CKv2_lambda",
    "CKv2_w",
)


def ck_functional(kind: str, field, spec: W.MultiplierSpec, t: float) -> float:
    """Cauchy-Kovalevskaya functional ``kind`` at time t.

    ``CK_*`` take the (z, v) vorticity as a SpectralField; the others take a
    CoordinateState and pick their target: 1 - v'^2 (CCK1), v'' (CCK2),
    [d_t v] (CKv1) or v' d_v [d_t v] (CKv2).
    """
    if kind not in CK_KINDS:
        raise ConfigError(f"unknown CK kind {kind!r}; expected one of {', '.join(CK_KINDS)}")
    lam = spec.lambda_of(t)
    minus_ldot = -spec.lambda_dot(t)
    if kind.startswith("CK_"):
        g = field.grid
        K, ETA = g.K, g.ETA
        mag = np.abs(K) + np.abs(ETA)
        log_a = W.log_A(t, K, ETA, spec, lam)
        if kind == "CK_lambda":
            if minus_ldot == 0.0:
                return 0.0
            with np.errstate(divide="ignore"):
                lm = log_a + 0.5 * spec.s * np.log(np.where(mag > 0, mag, 1.0))
            lm = np.where(mag > 0, lm, -np.inf)
            return minus_ldot * _row_norm_sq(field.coeffs, lm, g.d_eta)
        dw = W.dlog_w(t, K, ETA, spec)
        pos = dw > 0
        if not pos.any():
            return 0.0
        lm = 0.5 * (np.log(np.where(pos, dw, 1.0)) + W.log_A_tilde(t, K, ETA, spec, lam) + log_a)
        return _row_norm_sq(field.coeffs, np.where(pos, lm, -np.inf), g.d_eta)

    coords: CoordinateState = field
    g = coords.grid
    eta = g.eta
    br = 0.5 * np.log1p(eta ** 2)
    with np.errstate(divide="ignore"):
        log_abs = np.where(eta != 0, np.log(np.abs(np.where(eta != 0, eta, 1.0))), -np.inf)
    if kind.startswith("CCK"):
        log_m = W.log_A_R(t, eta, spec, lam)
        dw = W.dlog_w_r(t, eta, spec)
        if kind.startswith("CCK1"):
            target = 1.0 - coords.vprime ** 2
        else:
            target = coords.vprimeprime
            log_m = log_m - br
        pref = 1.0
    else:
        log_m = W.log_A(t, 0, eta, spec, lam) - spec.s * br
        dw = W.dlog_w_nr(t, eta, spec)
        target = coords.dtv if kind.startswith("CKv1") else coords.hbar
        pref = _jt(t) ** (2 + 2 * spec.s)
    c = profile_coeffs(target, g)
    if kind.endswith("lambda"):
        if minus_ldot == 0.0:
            return 0.0
        return pref * minus_ldot * _row_norm_sq(c, log_m + 0.5 * spec.s * log_abs, g.d_eta)
    pos = dw > 0
    if not pos.any():
        return 0.0
    lm = np.where(pos, log_m + 0.5 * np.log(np.where(pos, dw, 1.0)), -np.inf)
    return pref * _row_norm_sq(c, lm, g.d_eta)
