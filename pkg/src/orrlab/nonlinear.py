"""Pseudospectral evolution of the perturbation vorticity in the sheared frame.

The unknown h(t, z, y) with z = x - t y satisfies

    d_t h + grad_perp psi . grad h = 0,    Delta_L psi = h,

where Delta_L has symbol -(k^2 + (eta - k t)^2) and the bracket uses
plain (z, y) derivatives.  The k = 0 streamfunction column is kept, so
this is the full nonlinear problem written in a frame where the linear
part is frozen.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .errors import BlowUpError, StepSizeError
from .linear import velocity_from_streamfunction, xavg_feedback_field
from .spectral import Grid, SpectralField, from_half, sobolev_norm, to_half, workers

__all__ = [
    "SimState",
    "TimeSeries",
    "Stepper",
    "rhs",
    "step_rk4",
    "initial_state",
    "run",
    "echo_experiment",
    "EchoResult",
]


@dataclass
class SimState:
    """Solver snapshot.

    Attributes
    ----------
    h : SpectralField
        Perturbation vorticity in the sheared frame, ``h.frame_time == t``.
    t : float
        Current time.
    I_ux, I_omega : ndarray
        Time integrals of <U^x> and <omega> on the y grid.
    step_count : int
        Number of accepted steps.
    params : dict
        Free-form run parameters carried along (for checkpoints).
    """

    h: SpectralField
    t: float
    I_ux: np.ndarray
    I_omega: np.ndarray
    step_count: int = 0
    params: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.h.grid


def initial_state(h0: SpectralField, params: dict | None = None) -> SimState:
    g = h0.grid
    h = SpectralField(g, np.where(g.dealias_mask, h0.coeffs, 0.0), 0.0)
    return SimState(h, 0.0, np.zeros(g.n_y), np.zeros(g.n_y), 0, dict(params or {}))


class TimeSeries:
    """Named scalar diagnostics sampled at output times."""

    def __init__(self, names):
        self.names = list(names)
        self.rows: list[list[float]] = []

    def append(self, row: dict) -> None:
        self.rows.append([float(row[n]) for n in self.names])

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.names.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        for r in self.rows:
            w.writerow([format(v, ".17g") for v in r])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "TimeSeries":
        rows = list(csv.reader(io.StringIO(text)))
        ts = cls(rows[0])
        ts.rows = [[float(v) for v in r] for r in rows[1:] if r]
        return ts


class Stepper:
    """RK4 integrator working on the half (rfftn) layout of a grid."""

    def __init__(self, grid: Grid, check_cfl: bool = True):
        self.grid = grid
        self.check_cfl = check_cfl
        self.K = grid.k_half[:, None]
        self.ETA = grid.eta_fft[None, :]
        self.iK = 1j * self.K
        self.iETA = 1j * self.ETA
        self.mask = grid.half_dealias_mask
        self.s = (grid.n_y, grid.n_z)
        self.min_cell = min(grid.dz, grid.dy)
        self.max_speed = 0.0

    def _inv(self, x):
        return sfft.irfftn(x, s=self.s, axes=(1, 0), workers=workers())

    def _fwd(self, u):
        return sfft.rfftn(u, axes=(1, 0), workers=workers())

    def inv_laplacian(self, H, t):
        sym = self.K ** 2 + (self.ETA - self.K * t) ** 2
        sym[0, 0] = 1.0
        P = -H / sym
        P[0, 0] = 0.0
        return P

    def rhs(self, H, t):
        P = self.inv_laplacian(H, t)
        psi_z = self._inv(self.iK * P)
        psi_y = self._inv(self.iETA * P)
        h_z = self._inv(self.iK * H)
        h_y = self._inv(self.iETA * H)
        adv = psi_z * h_y - psi_y * h_z
        self.max_speed = max(float(np.abs(psi_y).max()), float(np.abs(psi_z).max()))
        out = self._fwd(adv)
        out *= self.mask
        return -out

    def mean_profiles(self, H, t):
        """(<U^x>, <omega>) on the y grid, ordered like ``grid.y``."""
        g = self.grid
        P0 = self.inv_laplacian(H, t)[0]
        # the half layout holds raw samples starting at y = -L_y/2
        ux = sfft.ifft(-1j * g.eta_fft * P0).real / g.n_z
        om = sfft.ifft(H[0]).real / g.n_z
        return ux, om

    def step(self, H, t, dt, Iux, Iom, q0=None):
        """One RK4 step.  Returns (H_new, Iux_new, Iom_new, k1, q1)."""
        k1 = self.rhs(H, t)
        if self.check_cfl and abs(dt) * self.max_speed > 0.5 * self.min_cell:
            raise StepSizeError(
                f"dt={dt:g} violates CFL: dt*max|u|={abs(dt) * self.max_speed:.3g} > "
                f"0.5*cell={0.5 * self.min_cell:.3g}"
            )
        k2 = self.rhs(H + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = self.rhs(H + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = self.rhs(H + dt * k3, t + dt)
        Hn = H + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(Hn)):
            raise BlowUpError(f"non-finite coefficients at t={t + dt:g}")
        if q0 is None:
            q0 = self.mean_profiles(H, t)
        q1 = self.mean_profiles(Hn, t + dt)
        Iux = Iux + 0.5 * dt * (q0[0] + q1[0])
        Iom = Iom + 0.5 * dt * (q0[1] + q1[1])
        return Hn, Iux, Iom, k1, q1


def rhs(state: SimState) -> SpectralField:
    """-(grad_perp psi . grad h), dealiased, as a full-layout field."""
    g = state.grid
    st = Stepper(g, check_cfl=False)
    H = to_half(state.h)
    out = st.rhs(H, state.t)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"non-finite right-hand side at t={state.t:g}", state)
    return from_half(out, g, state.t)


def step_rk4(state: SimState, dt: float) -> SimState:
    """Advance ``state`` by one RK4 step of size ``dt`` (negative allowed)."""
    g = state.grid
    st = Stepper(g)
    H = to_half(state.h)
    try:
        Hn, Iux, Iom, _, _ = st.step(H, state.t, dt, state.I_ux, state.I_omega)
    except BlowUpError as exc:
        exc.state = state
        raise
    t = state.t + dt
    return SimState(from_half(Hn, g, t), t, Iux, Iom, state.step_count + 1, dict(state.params))


SERIES_BASE = [
    "t",
    "h_l2",
    "h_increment",
    "h_integral",
    "mean_l2",
    "ux_fluct",
    "uy",
    "ux_mean_feedback",
    "high_fraction",
]


def _diagnostics(h: SpectralField, prev: SpectralField | None, sobolev_N, gevrey) -> dict:
    from .linear import orr_streamfunction

    g = h.grid
    t = h.frame_time
    c = h.coeffs
    d = {"t": t}
    d["h_l2"] = float(np.sqrt(np.sum(np.abs(c) ** 2) * g.d_eta))
    d["h_increment"] = (
        float(np.sqrt(np.sum(np.abs(c - prev.coeffs) ** 2) * g.d_eta)) if prev is not None else 0.0
    )
    d["h_integral"] = float(2 * np.pi * c[g.index(0, 0)].real)
    d["mean_l2"] = float(np.sqrt(np.sum(np.abs(c[g.k_max]) ** 2) * g.d_eta))
    phi = orr_streamfunction(h, t)
    ux, uy = velocity_from_streamfunction(phi, t)
    ux = np.where(g.K != 0, ux, 0.0)
    d["ux_fluct"] = float(np.sqrt(np.sum(np.abs(ux) ** 2) * g.d_eta))
    d["uy"] = float(np.sqrt(np.sum(np.abs(uy) ** 2) * g.d_eta))
    fb = xavg_feedback_field(ux, uy, g, t)
    d["ux_mean_feedback"] = float(np.sqrt(np.sum(np.abs(fb) ** 2) * g.d_eta))
    tot = np.sum(np.abs(c) ** 2)
    high = (np.abs(g.K) > 0.5 * g.k_cut) | (np.abs(g.ETA) > 0.5 * g.eta_max * 2 / 3)
    d["high_fraction"] = float(np.sum(np.abs(c[high]) ** 2) / tot) if tot > 0 else 0.0
    for N in sobolev_N:
        d[f"sobolev_{N:g}"] = sobolev_norm(h, N, physical=True)
    if gevrey is not None:
        from .weights import gevrey_norm

        d["gevrey"] = gevrey_norm(h, gevrey.lambda_of(t), gevrey.sigma, gevrey.s)
    return d


def run(
    h0: SpectralField,
    dt: float,
    t_end: float,
    output_stride: int = 100,
    sobolev_N=(1.0, 2.0),
    multipliers=None,
    callback: Callable[[SimState], None] | None = None,
    state: SimState | None = None,
    checkpoint: Callable[[SimState], None] | None = None,
    checkpoint_stride: int = 0,
):
    """Integrate from ``h0`` (or resume from ``state``) up to ``t_end``.

    Parameters
    ----------
    h0 : SpectralField
        Initial vorticity (ignored when ``state`` is given).
    dt : float
        Fixed time step.
    t_end : float
        Final time; the step count is ``round((t_end - t0) / dt)``.
    output_stride : int
        Diagnostics are recorded every ``output_stride`` steps.
    sobolev_N : sequence of float
        Orders of the physical-frame Sobolev norms to record.
    multipliers : MultiplierSpec, optional
        If given, the Gevrey norm with index lambda(t) is recorded.
    callback : callable, optional
        Called with the full state at every output time.
    state : SimState, optional
        Resume point.
    checkpoint : callable, optional
        Called with the state every ``checkpoint_stride`` steps.

    Returns
    -------
    (SimState, TimeSeries)
    """
    if dt <= 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    if state is None:
        state = initial_state(h0)
    g = state.grid
    names = list(SERIES_BASE) + [f"sobolev_{N:g}" for N in sobolev_N]
    if multipliers is not None:
        names.append("gevrey")
    series = TimeSeries(names)
    st = Stepper(g)
    H = to_half(state.h)
    t0 = state.t
    t = t0
    Iux, Iom = state.I_ux.copy(), state.I_omega.copy()
    n0 = state.step_count
    n_steps = int(round((t_end - t0) / dt))
    prev = state.h

    def emit(h_field, prev_field, snap):
        series.append(_diagnostics(h_field, prev_field, sobolev_N, multipliers))
        if callback is not None:
            callback(snap)

    emit(state.h, None, state)
    q = None
    for i in range(1, n_steps + 1):
        try:
            H, Iux, Iom, _, q = st.step(H, t, dt, Iux, Iom, q)
        except BlowUpError as exc:
            exc.state = SimState(from_half(H, g, t), t, Iux, Iom, n0 + i - 1, dict(state.params))
            raise
        # recompute t from the step count so long runs carry no drift
        t = t0 + i * dt
        need_out = i % output_stride == 0 or i == n_steps
        need_ck = checkpoint is not None and checkpoint_stride and i % checkpoint_stride == 0
        if need_out or need_ck:
            snap = SimState(from_half(H, g, t), t, Iux.copy(), Iom.copy(), n0 + i, dict(state.params))
            if need_out:
                emit(snap.h, prev, snap)
                prev = snap.h
            if need_ck:
                checkpoint(snap)
    final = SimState(from_half(H, g, t), t, Iux, Iom, n0 + n_steps, dict(state.params))
    return final, series


@dataclass
class EchoResult:
    """Mode traces of an echo run."""

    times: np.ndarray
    h_modes: dict
    psi_modes: dict
    dh_dt: dict
    argmax_dh_dt: dict
    argmax_h: dict
    series: TimeSeries


def echo_experiment(h0: SpectralField, eta0: float, dt: float, t_end: float,
                    ks=(1, 2, 3)) -> EchoResult:
    """Track |h_hat(k, eta0)|, |psi_hat(k, eta0)| and d/dt h_hat(k, eta0).

    The time derivative is the exact right-hand side evaluated at every
    step (the first RK4 stage), not a finite difference.
    """
    g = h0.grid
    j0 = g.eta_index(eta0)
    st = Stepper(g)
    state = initial_state(h0)
    H = to_half(state.h)
    col = j0 % g.n_y
    n_steps = int(round(t_end / dt))
    times = np.arange(n_steps + 1) * dt
    hm = {k: np.empty(n_steps + 1) for k in ks}
    pm = {k: np.empty(n_steps + 1) for k in ks}
    dm = {k: np.empty(n_steps + 1) for k in ks}
    scale = g._scale * g._phase[j0 + g.n_y // 2]
    Iux = np.zeros(g.n_y)
    Iom = np.zeros(g.n_y)
    q = None
    t = 0.0
    for i in range(n_steps + 1):
        t = i * dt
        for k in ks:
            hm[k][i] = abs(H[k, col] * scale)
            pm[k][i] = hm[k][i] / (k ** 2 + (eta0 - k * t) ** 2)
        if i == n_steps:
            k1 = st.rhs(H, t)
        else:
            H, Iux, Iom, k1, q = st.step(H, t, dt, Iux, Iom, q)
        for k in ks:
            dm[k][i] = abs(k1[k, col] * scale)
    series = TimeSeries(["t"] + [f"h_{k}" for k in ks] + [f"psi_{k}" for k in ks] + [f"dhdt_{k}" for k in ks])
    for i in range(n_steps + 1):
        row = {"t": times[i]}
        for k in ks:
            row[f"h_{k}"] = hm[k][i]
            row[f"psi_{k}"] = pm[k][i]
            row[f"dhdt_{k}"] = dm[k][i]
        series.append(row)
    arg = {k: float(times[int(np.argmax(dm[k]))]) for k in ks}
    arg_h = {k: float(times[int(np.argmax(hm[k]))]) for k in ks}
    return EchoResult(times, hm, pm, dm, arg, arg_h, series)
