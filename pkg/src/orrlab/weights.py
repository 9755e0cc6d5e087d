"""Time-dependent weights and Gevrey multipliers.

Notation
--------
For a frequency eta with a = |eta| > 1, N = E(sqrt(a)) is the number of
critical intervals.  The critical times are

    t_{k} = a/k - a / (2 k (k+1)),  1 <= k <= N,      t_0 = 2 a,

and I_k = [t_k, t_{k-1}).  Going backwards in time from w = 1 at t = 2a,
each interval multiplies the non-resonant weight w_NR by (k^2/a)^c with
c = 1 + 2 C_kappa.  Inside I_k,

    right half [a/k, t_{k-1}):  w_NR = ((k^2/a)(1 + b_k |t - a/k|))^{C_kappa} w_NR(t_{k-1})
    left  half [t_k, a/k):      w_NR = (1 + a_k |t - a/k|)^{-1-C_kappa} w_NR(a/k)

and the resonant weight is w_R = (k^2/a)(1 + (b_k or a_k)|t - a/k|) w_NR.
The weight of mode (k, eta) is w_R on its own interval (k eta > 0) and
w_NR elsewhere; it is frozen below t_N and equals one from 2a on.

Every quantity here is returned as a natural logarithm, since the
multipliers overflow doubles long before they become interesting.
All evaluators broadcast over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, logsumexp

from .errors import ConfigError, RangeError

__all__ = [
    "MultiplierSpec",
    "n_intervals",
    "t_crit",
    "interval_of",
    "interval_index",
    "in_interval",
    "is_resonant",
    "b_coef",
    "a_coef",
    "log_w_nr",
    "log_w_r",
    "log_w",
    "dlog_w_nr",
    "dlog_w_r",
    "dlog_w",
    "log_J",
    "log_J_tilde",
    "log_A",
    "log_A_tilde",
    "log_A_R",
    "gevrey_norm",
    "weighted_norm",
]

LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class MultiplierSpec:
    """Parameter pack of the Gevrey multipliers.

    Parameters
    ----------
    s : float
        Gevrey index in (1/2, 1].
    lambda0, lambda_prime : float
        Regularity radii with lambda0 > lambda_prime > 0.
    sigma : float
        Sobolev correction, > 12.
    c_kappa : float
        Weight exponent; c = 1 + 2 c_kappa must lie in (3/2, 10).
    q_tilde : float
        Decay exponent of lambda(t), in (1/2, s/8 + 7/16].
    delta_lambda : float, optional
        Decay rate of lambda(t).  Defaults to the largest-safe rule
        0.5 (2 q_tilde - 1) ln((1 + lambda(1)) / (1 + (lambda0 + lambda_prime)/2)).
    """

    s: float = 0.55
    lambda0: float = 0.2
    lambda_prime: float = 0.1
    sigma: float = 13.0
    c_kappa: float = 0.5
    q_tilde: float = 0.506
    delta_lambda: float | None = None

    def __post_init__(self):
        if not (0.5 < self.s <= 1.0):
            raise ConfigError(f"multipliers.s={self.s} must lie in (1/2, 1]")
        if not (self.lambda0 > self.lambda_prime > 0):
            raise ConfigError(
                f"multipliers.lambda0={self.lambda0}, lambda_prime={self.lambda_prime}: need lambda0 > lambda_prime > 0"
            )
        if not self.sigma > 12:
            raise ConfigError(f"multipliers.sigma={self.sigma} must exceed 12")
        if not (1.5 < self.c < 10):
            raise ConfigError(f"multipliers.c_kappa={self.c_kappa}: 1 + 2 c_kappa must lie in (3/2, 10)")
        if not (0.5 < self.q_tilde <= self.s / 8 + 7 / 16 + 1e-15):
            raise ConfigError(
                f"multipliers.q_tilde={self.q_tilde} must lie in (1/2, s/8 + 7/16 = {self.s / 8 + 7 / 16:.6g}]"
            )
        if self.delta_lambda is None:
            object.__setattr__(self, "delta_lambda", self.default_delta_lambda())
        if not self.delta_lambda > 0:
            raise ConfigError(f"multipliers.delta_lambda={self.delta_lambda} must be positive")
        if not self.lambda_inf() > (self.lambda0 + self.lambda_prime) / 2:
            raise ConfigError(
                f"multipliers.delta_lambda={self.delta_lambda} too large: lambda(inf) <= (lambda0 + lambda_prime)/2"
            )

    @property
    def c(self) -> float:
        return 1.0 + 2.0 * self.c_kappa

    @property
    def mu(self) -> float:
        return 4.0 * self.c

    @property
    def lambda_short(self) -> float:
        return 0.75 * self.lambda0 + 0.25 * self.lambda_prime

    def default_delta_lambda(self) -> float:
        target = 1.0 + 0.5 * (self.lambda0 + self.lambda_prime)
        return 0.5 * (2 * self.q_tilde - 1) * math.log((1.0 + self.lambda_short) / target)

    def _decay_integral(self, t: float) -> float:
        return _decay_integral(self.q_tilde, float(t))

    def lambda_of(self, t):
        """Index lambda(t): constant on [0, 1], then 1 + lambda decays exponentially."""
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        out = np.empty_like(flat)
        for i, ti in enumerate(flat):
            if ti <= 1.0:
                out[i] = self.lambda_short
            else:
                out[i] = (1.0 + self.lambda_short) * math.exp(
                    -self.delta_lambda * self._decay_integral(ti)
                ) - 1.0
        return out.reshape(t_arr.shape) if t_arr.ndim else float(out[0])

    def lambda_dot(self, t) -> float:
        """d lambda / dt (zero for t <= 1)."""
        t = float(t)
        if t <= 1.0:
            return 0.0
        return -self.delta_lambda * (1.0 + self.lambda_of(t)) / (1.0 + t * t) ** self.q_tilde

    def lambda_inf(self) -> float:
        return (1.0 + self.lambda_short) * math.exp(
            -self.delta_lambda * _decay_integral(self.q_tilde, math.inf)
        ) - 1.0

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "lambda0": self.lambda0,
            "lambda_prime": self.lambda_prime,
            "sigma": self.sigma,
            "c_kappa": self.c_kappa,
            "q_tilde": self.q_tilde,
            "delta_lambda": self.delta_lambda,
        }


@lru_cache(maxsize=65536)
def _decay_integral(q: float, t: float) -> float:
    """integral_1^t (1 + tau^2)^{-q} d tau by adaptive quadrature."""
    if t <= 1.0:
        return 0.0
    f = lambda x: (1.0 + x * x) ** (-q)
    # split at 100 so the slowly decaying tail is handled on its own
    mid = min(t, 100.0)
    val, _ = quad(f, 1.0, mid, limit=200, epsabs=1e-15, epsrel=1e-12)
    if t > mid:
        tail, _ = quad(f, mid, t, limit=200, epsabs=1e-15, epsrel=1e-10)
        val += tail
    return val


# ---------------------------------------------------------------------------
# critical structure


def n_intervals(eta):
    """N = E(sqrt|eta|), the number of critical intervals (0 when |eta| < 1)."""
    a = np.floor(np.abs(np.asarray(eta, dtype=float)))
    n = np.floor(np.sqrt(a))
    # correct the rare off-by-one of floating sqrt
    n = np.where((n + 1) ** 2 <= a, n + 1, n)
    n = np.where(n ** 2 > a, n - 1, n)
    return n.astype(np.int64) if np.ndim(n) else int(n)


def _tc(n, a):
    """t_n for 1 <= n (no range check) and 2a for n = 0."""
    n = np.asarray(n, dtype=float)
    safe = np.where(n > 0, n, 1.0)
    return np.where(n > 0, a / safe - a / (2 * safe * (safe + 1)), 2 * a)


def t_crit(k, eta):
    """Critical time t_{k, eta}; NaN when |k| > E(sqrt|eta|)."""
    a = np.abs(np.asarray(eta, dtype=float))
    kk = np.abs(np.asarray(k))
    ok = (kk == 0) | (kk <= n_intervals(a))
    out = np.where(ok, _tc(kk, a), np.nan)
    return out if np.ndim(out) else float(out)


def _interval_index(t, a):
    """Index n with t in [t_n, t_{n-1}), or 0 where no interval contains t."""
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    N = n_intervals(a)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        q = np.where(t > 0, a / np.where(t > 0, t, 1.0), np.inf)
    n0 = np.floor(np.minimum(q, N + 1.0))
    n = np.where((n0 >= 1) & (t >= _tc(n0, a)), n0, n0 + 1)
    inside = (a > 1) & (N >= 1) & (t < 2 * a) & (t >= _tc(np.maximum(N, 1), a)) & (n >= 1) & (n <= N)
    return np.where(inside, n, 0).astype(np.int64)


def interval_of(t, eta):
    """The k >= 1 with t in I_{k,|eta|}, or None.

    Intervals are closed on the left and open on the right, so a shared
    endpoint belongs to the larger k.
    """
    n = int(_interval_index(float(t), abs(float(eta))))
    return n if n > 0 else None


def interval_index(t, eta):
    """Vectorized :func:`interval_of`, with 0 meaning no interval."""
    return _interval_index(t, np.abs(np.asarray(eta, dtype=float)))


def in_interval(t, k, eta):
    """Whether t lies in I_{k,eta} (empty unless k eta > 0)."""
    k = np.asarray(k)
    eta = np.asarray(eta, dtype=float)
    return ((k * eta) > 0) & (interval_index(t, eta) == np.abs(k))


def is_resonant(k, eta) -> bool:
    """Whether I_{k,eta} is a resonant interval (2 sqrt|eta| <= t_{k,eta}, k eta > 0)."""
    k = int(k)
    if k == 0 or k * eta <= 0:
        return False
    N = n_intervals(eta)
    if abs(k) > N:
        return False
    return bool(2 * math.sqrt(abs(eta)) <= _tc(abs(k), abs(eta)))


def b_coef(n, a):
    """b_{n,a}: chosen so the right-half factor reaches one at t_{n-1}."""
    n = np.asarray(n, dtype=float)
    safe = np.where(n > 0, n, 1.0)
    return np.where(n == 1, 1.0 - 1.0 / a, 2 * (safe - 1) / safe * (1 - safe ** 2 / a))


def a_coef(n, a):
    """a_{n,a}: chosen so the left-half factor reaches one at t_n."""
    n = np.asarray(n, dtype=float)
    safe = np.where(n > 0, n, 1.0)
    return 2 * (safe + 1) / safe * (1 - safe ** 2 / a)


# ---------------------------------------------------------------------------
# weights


def _pieces(t, eta, ck):
    """Shared work for w_NR and w_R.

    Returns (n, a, tau, right, log_nr, coef) where n is the interval index
    of the clamped time (0 when w = 1), tau = t - a/n, ``right`` marks the
    right half and ``coef`` is b_n or a_n accordingly.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(np.asarray(eta, dtype=float))
    t, a = np.broadcast_arrays(t, a)
    N = n_intervals(a)
    tN = _tc(np.maximum(N, 1), a)
    active = (a > 1) & (N >= 1) & (t < 2 * a)
    tc = np.where(active & (t < tN), tN, t)  # frozen below t_N
    n = np.where(active, _interval_index(tc, np.where(active, a, 4.0)), 0)
    nn = np.maximum(n, 1).astype(float)
    aa = np.where(active, a, 4.0)
    center = aa / nn
    tau = tc - center
    right = tau >= 0
    c = 1.0 + 2.0 * ck
    # log w_NR(t_{n-1}) = c * sum_{m < n} log(m^2 / a)
    prefix = c * (2.0 * gammaln(nn) - (nn - 1.0) * np.log(aa))
    lr = np.log(nn ** 2 / aa)
    bb = b_coef(nn, aa)
    ac = a_coef(nn, aa)
    coef = np.where(right, bb, ac)
    absd = np.abs(tau)
    log_right = ck * (lr + np.log1p(bb * absd)) + prefix
    log_left = -(1.0 + ck) * np.log1p(ac * absd) + ck * lr + prefix
    log_nr = np.where(right, log_right, log_left)
    log_nr = np.where(n > 0, log_nr, 0.0)
    return n, aa, tau, right, log_nr, coef, lr, (t < tN) & active


def log_w_nr(t, eta, spec: MultiplierSpec):
    """ln w_NR(t, eta)."""
    out = _pieces(t, eta, spec.c_kappa)[4]
    return out if np.ndim(out) else float(out)


def log_w_r(t, eta, spec: MultiplierSpec):
    """ln w_R(t, eta) using the interval containing t (w_R(t_N) below t_N)."""
    n, aa, tau, right, log_nr, coef, lr, _ = _pieces(t, eta, spec.c_kappa)
    out = np.where(n > 0, lr + np.log1p(coef * np.abs(tau)) + log_nr, 0.0)
    return out if np.ndim(out) else float(out)


def log_w(t, k, eta, spec: MultiplierSpec):
    """ln w_k(t, eta).

    w_R is used when t lies in I_{|k|,|eta|} and k eta > 0; otherwise
    w_NR.  For t below t_N the value frozen at t_N is returned, and the
    weight is one for t >= 2|eta| or |eta| <= 1.
    """
    k = np.asarray(k)
    eta = np.asarray(eta, dtype=float)
    n, aa, tau, right, log_nr, coef, lr, frozen = _pieces(t, eta, spec.c_kappa)
    same_sign = (k * eta) > 0
    resonant = same_sign & (np.abs(k) == n) & (n > 0) & ~frozen
    log_r = lr + np.log1p(coef * np.abs(tau)) + log_nr
    out = np.where(resonant, log_r, log_nr)
    return out if np.ndim(out) else float(out)


def dlog_w_nr(t, eta, spec: MultiplierSpec):
    """d/dt ln w_NR, evaluated with the formula of the interval containing t."""
    n, aa, tau, right, log_nr, coef, lr, frozen = _pieces(t, eta, spec.c_kappa)
    ck = spec.c_kappa
    absd = np.abs(tau)
    d = np.where(right, ck * coef / (1 + coef * absd), (1 + ck) * coef / (1 + coef * absd))
    out = np.where((n > 0) & ~frozen, d, 0.0)
    return out if np.ndim(out) else float(out)


def dlog_w_r(t, eta, spec: MultiplierSpec):
    """d/dt ln w_R on the interval containing t."""
    n, aa, tau, right, log_nr, coef, lr, frozen = _pieces(t, eta, spec.c_kappa)
    ck = spec.c_kappa
    absd = np.abs(tau)
    d = np.where(right, (1 + ck) * coef / (1 + coef * absd), ck * coef / (1 + coef * absd))
    out = np.where((n > 0) & ~frozen, d, 0.0)
    return out if np.ndim(out) else float(out)


def dlog_w(t, k, eta, spec: MultiplierSpec):
    """d/dt ln w_k(t, eta), matching the branch used by :func:`log_w`."""
    k = np.asarray(k)
    eta = np.asarray(eta, dtype=float)
    n = _pieces(t, eta, spec.c_kappa)[0]
    frozen = _pieces(t, eta, spec.c_kappa)[7]
    resonant = ((k * eta) > 0) & (np.abs(k) == n) & (n > 0) & ~frozen
    out = np.where(resonant, dlog_w_r(t, eta, spec), dlog_w_nr(t, eta, spec))
    return out if np.ndim(out) else float(out)



# ---------------------------------------------------------------------------
# multipliers


def _log_bracket(k, eta):
    return 0.5 * np.log1p((np.abs(k) + np.abs(eta)) ** 2)


def log_J_tilde(t, k, eta, spec: MultiplierSpec):
    """ln(e^{mu sqrt|eta|} / w_k)."""
    out = spec.mu * np.sqrt(np.abs(eta)) - log_w(t, k, eta, spec)
    return out if np.ndim(out) else float(out)


def log_J(t, k, eta, spec: MultiplierSpec):
    """ln J_k(t, eta) = ln(e^{mu sqrt|eta|} / w_k + e^{mu sqrt|k|})."""
    out = np.logaddexp(log_J_tilde(t, k, eta, spec), spec.mu * np.sqrt(np.abs(np.asarray(k, dtype=float))))
    return out if np.ndim(out) else float(out)


def log_A(t, k, eta, spec: MultiplierSpec, lam: float | None = None):
    """ln A_k(t, eta) = lambda(t)|k,eta|^s + sigma ln<k,eta> + ln J."""
    lam = spec.lambda_of(t) if lam is None else lam
    keta = np.abs(k) + np.abs(eta)
    out = lam * keta ** spec.s + spec.sigma * _log_bracket(k, eta) + log_J(t, k, eta, spec)
    return out if np.ndim(out) else float(out)


def log_A_tilde(t, k, eta, spec: MultiplierSpec, lam: float | None = None):
    """ln of A with J replaced by e^{mu sqrt|eta|} / w_k."""
    lam = spec.lambda_of(t) if lam is None else lam
    keta = np.abs(k) + np.abs(eta)
    out = lam * keta ** spec.s + spec.sigma * _log_bracket(k, eta) + log_J_tilde(t, k, eta, spec)
    return out if np.ndim(out) else float(out)


def log_A_R(t, eta, spec: MultiplierSpec, lam: float | None = None):
    """ln A^R(t, eta): resonant regularity at every critical time."""
    lam = spec.lambda_of(t) if lam is None else lam
    a = np.abs(np.asarray(eta, dtype=float))
    out = lam * a ** spec.s + spec.sigma * _log_bracket(0, a) + spec.mu * np.sqrt(a) - log_w_r(t, a, spec)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# norms


def weighted_norm(coeffs, log_mult, d_eta: float, where=None) -> float:
    """(sum exp(2 log_mult) |c|^2 d_eta)^{1/2}, accumulated in log space."""
    c = np.asarray(coeffs)
    lm = np.broadcast_to(np.asarray(log_mult, dtype=float), c.shape)
    mag = np.abs(c)
    nz = mag > 0
    if where is not None:
        nz &= where
    if not nz.any():
        return 0.0
    terms = 2.0 * lm[nz] + 2.0 * np.log(mag[nz])
    half_log = 0.5 * (logsumexp(terms) + math.log(d_eta))
    if half_log > LOG_MAX:
        worst = np.argwhere(nz)[int(np.argmax(terms))]
        raise RangeError(f"weighted norm overflows (log = {half_log:.1f}) at array index {tuple(worst)}")
    return float(math.exp(half_log))


def gevrey_norm(field, lam: float, sigma: float, s: float) -> float:
    """(sum_k int |f_hat|^2 e^{2 lam |k,eta|^s} <k,eta>^{2 sigma} d eta)^{1/2}."""
    g = field.grid
    keta = np.abs(g.K) + np.abs(g.ETA)
    lm = lam * keta ** s + sigma * _log_bracket(g.K, g.ETA)
    try:
        return weighted_norm(field.coeffs, lm, g.d_eta)
    except RangeError as exc:
        # report the offending mode in (k, eta) terms
        terms = 2 * lm + 2 * np.log(np.where(np.abs(field.coeffs) > 0, np.abs(field.coeffs), 1e-300))
        i, j = np.unravel_index(int(np.argmax(terms)), terms.shape)
        raise RangeError(f"{exc}; mode k={int(g.k[i])}, eta={g.eta[j]:g}") from None
