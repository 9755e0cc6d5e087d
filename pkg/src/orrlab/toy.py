"""Two-mode ODE model of growth across one critical interval.

On the interval around the critical time eta/k a resonant mode f_R and a
non-resonant mode f_NR exchange energy as

    d f_R / dt  = kappa (k^2 / eta) f_NR,
    d f_NR / dt = kappa eta / (k^2 + (eta - k t)^2) f_R,

starting from f_R = f_NR = 1 at tau = t - eta/k = -eta/k^2 and running
to tau = +eta/k^2.  The resonance has width O(1) while the interval has
length 2 eta/k^2, so the integration runs in the stretched variable
tau = sinh(u), which turns the Lorentzian forcing into a smooth
1 / cosh(u) and lets uniform RK4 steps resolve both scales.

With ``self_interaction`` the resonant mode also forces itself through
the same kernel, which is the form that arises when both modes share a
frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = ["ToyTrajectory", "integrate_toy", "fit_growth_exponents", "envelope_constant", "predicted_exponent"]


@dataclass
class ToyTrajectory:
    tau: np.ndarray
    f_R: np.ndarray
    f_NR: np.ndarray
    k: int
    eta: float
    kappa: float
    n_steps: int
    self_convergence: float
    params: dict = field(default_factory=dict)

    @property
    def length(self) -> float:
        """Half-length eta / k^2 of the critical interval."""
        return self.eta / self.k ** 2


def predicted_exponent(kappa: float) -> float:
    """Growth exponent p with p (p - 1) = kappa^2 of the far-field power law."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa))


def _rk4(k: int, eta: float, kappa: float, n_steps: int, self_interaction: bool):
    L = eta / k ** 2
    u_max = math.asinh(L)
    du = 2.0 * u_max / n_steps
    a = kappa / L  # kappa k^2 / eta
    b = kappa * L  # kappa eta / k^2, times 1/(1 + tau^2)

    def rhs(u, y):
        ch = math.cosh(u)
        # d tau = cosh(u) du and 1 + tau^2 = cosh(u)^2
        fr, fnr = y
        kern = b / ch
        dfr = a * fnr * ch
        if self_interaction:
            dfr += kern * fr
        dfnr = kern * fr
        return dfr, dfnr

    u = np.linspace(-u_max, u_max, n_steps + 1)
    fr = np.empty(n_steps + 1)
    fnr = np.empty(n_steps + 1)
    y = (1.0, 1.0)
    fr[0], fnr[0] = y
    for i in range(n_steps):
        ui = u[i]
        k1 = rhs(ui, y)
        k2 = rhs(ui + 0.5 * du, (y[0] + 0.5 * du * k1[0], y[1] + 0.5 * du * k1[1]))
        k3 = rhs(ui + 0.5 * du, (y[0] + 0.5 * du * k2[0], y[1] + 0.5 * du * k2[1]))
        k4 = rhs(ui + du, (y[0] + du * k3[0], y[1] + du * k3[1]))
        y = (
            y[0] + du / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y[1] + du / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        )
        fr[i + 1], fnr[i + 1] = y
    return np.sinh(u), fr, fnr


def integrate_toy(k: int, eta: float, kappa: float, n_steps: int | None = None,
                  self_interaction: bool = False, tol: float = 1e-8,
                  max_steps: int = 1 << 18) -> ToyTrajectory:
    """Integrate the two-mode model across I_{k,eta}.

    Without ``n_steps`` the step count starts at 256 and doubles until the
    final values of two successive resolutions agree to ``tol``
    (relative); the finer run is returned and the reached agreement is
    stored in ``self_convergence``.
    """
    if k < 1 or eta <= 0:
        raise ConfigError(f"toy model needs k >= 1 and eta > 0 (got k={k}, eta={eta})")
    if not (0.0 <= kappa < 0.5):
        raise ConfigError(f"toy model needs 0 <= kappa < 1/2 (got {kappa})")
    if eta / k ** 2 < 1:
        raise ConfigError(f"toy model needs eta/k^2 >= 1 (got {eta / k ** 2:g})")
    if n_steps is not None:
        tau, fr, fnr = _rk4(k, eta, kappa, n_steps, self_interaction)
        coarse = _rk4(k, eta, kappa, max(n_steps // 2, 2), self_interaction)
        err = _rel_diff((fr[-1], fnr[-1]), (coarse[1][-1], coarse[2][-1]))
        return ToyTrajectory(tau, fr, fnr, k, eta, kappa, n_steps, err, {"self_interaction": self_interaction})
    n = 256
    prev = _rk4(k, eta, kappa, n, self_interaction)
    while True:
        n *= 2
        cur = _rk4(k, eta, kappa, n, self_interaction)
        err = _rel_diff((cur[1][-1], cur[2][-1]), (prev[1][-1], prev[2][-1]))
        if err < tol or n >= max_steps:
            tau, fr, fnr = cur
            return ToyTrajectory(tau, fr, fnr, k, eta, kappa, n, err, {"self_interaction": self_interaction})
        prev = cur


def _rel_diff(a, b) -> float:
    return max(abs(x - y) / max(abs(x), 1e-300) for x, y in zip(a, b))


def fit_growth_exponents(traj: ToyTrajectory, window: tuple[float, float] | None = None) -> dict:
    """Log-log exponents of the far-field power laws on both halves.

    ``alpha_right`` fits f_R ~ (1 + tau)^alpha on tau > 0 and
    ``alpha_left`` fits f_NR ~ (1 + |tau|)^(-alpha) on tau < 0.  The
    default window is min(10, L/20) <= |tau| <= L / 5, away from the
    resonance and from the interval ends.
    """
    L = traj.length
    lo, hi = window if window is not None else (min(10.0, L / 20.0), L / 5.0)
    if not hi > lo:
        raise ConfigError(f"fit window ({lo}, {hi}) is empty for eta/k^2 = {L}")
    a = np.abs(traj.tau)
    right = (traj.tau > 0) & (a >= lo) & (a <= hi)
    left = (traj.tau < 0) & (a >= lo) & (a <= hi)
    if min(right.sum(), left.sum()) < 3:
        raise ConfigError(f"fit window ({lo}, {hi}) holds fewer than 3 samples on one side")
    slope_r = np.polyfit(np.log1p(a[right]), np.log(traj.f_R[right]), 1)[0]
    slope_l = np.polyfit(np.log1p(a[left]), np.log(traj.f_NR[left]), 1)[0]
    i0 = int(np.argmin(np.abs(traj.tau)))
    return {
        "alpha_right": float(slope_r),
        "alpha_left": float(-slope_l),
        "predicted": predicted_exponent(traj.kappa),
        "ratio_at_resonance": float(traj.f_NR[i0] / traj.f_R[i0]),
        "window": (lo, hi),
    }


def envelope_constant(traj: ToyTrajectory, c_kappa: float | None = None) -> float:
    """Largest ratio of the trajectory to the weight-shaped envelope.

    The envelopes use the exponent C_kappa (default kappa):
    on tau < 0, f_NR <~ ((k^2/eta)(1+|tau|))^{-1-C} and f_R <~ ((k^2/eta)(1+|tau|))^{-C};
    on tau > 0, f_R <~ (eta/k^2)^C (1+tau)^{1+C} and f_NR <~ (eta/k^2)^{1+C} (1+tau)^C.
    """
    ck = traj.kappa if c_kappa is None else c_kappa
    L = traj.length
    a = 1.0 + np.abs(traj.tau)
    left = traj.tau <= 0
    env_nr = np.where(left, (a / L) ** (-1 - ck), L ** (1 + ck) * a ** ck)
    env_r = np.where(left, (a / L) ** (-ck), L ** ck * a ** (1 + ck))
    return float(max(np.max(traj.f_NR / env_nr), np.max(traj.f_R / env_r)))
