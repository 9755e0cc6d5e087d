"""Randomized numerical checks of the weight and multiplier inequalities.

Each check samples tuples (t, k, l, eta, xi) inside the hypotheses of an
inequality, evaluates LHS / RHS with the unspecified absolute constant
set to one, and reports the empirical constant C_emp (the maximum ratio).
A check passes when C_emp is finite and grows by at most a factor two
when the sample is doubled.  Constants below one are floored at one for
the stability test, since the inequality then already holds with the
trivial constant.  Two-sided statements ("approximately
equal") report the bracket of the ratio and use max(hi, 1/lo) as C_emp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import weights as W
from .errors import ConfigError
from .spectral import Grid, SpectralField, product

__all__ = ["LEMMA_IDS", "SampleSpec", "LemmaReport", "lemma_harness", "make_rng"]

LEMMA_IDS = (
    "wellsep",
    "dtw",
    "w-up-low",
    "WtFreqCompare",
    "WFreqCompare",
    "Jswap",
    "JTrans",
    "ProdAlg",
    "GAlg",
    "basic",
)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used for every randomized check."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class SampleSpec:
    """Sampling ranges for the harness.

    ``n`` is the base sample count; the harness draws ``2 n`` tuples and
    compares the statistic on the first half with the full set.
    """

    n: int = 2000
    eta_min: float = 4.0
    eta_max: float = 1.0e4
    alpha: float = 2.0
    k_spread: int = 3
    field_k_max: int = 4
    field_n_y: int = 128
    field_decay: float = 1.5
    basic_ladder: tuple = (1.0e4, 4.0e4)
    basic_points: int = 9

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"sample_spec.n={self.n} must be positive")
        if not (1.0 < self.eta_min < self.eta_max):
            raise ConfigError("sample_spec needs 1 < eta_min < eta_max")
        if self.alpha < 1:
            raise ConfigError(f"sample_spec.alpha={self.alpha} must be >= 1")


@dataclass
class LemmaReport:
    lemma_id: str
    n_samples: int
    n_admissible: int
    C_emp: float
    C_emp_half: float
    stable: bool
    violations: int = 0
    vacuous: bool = False
    passed: bool = False
    details: dict = field(default_factory=dict)

    def summary(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        if self.vacuous:
            return f"{self.lemma_id}: vacuous (no admissible samples)"
        return (
            f"{self.lemma_id}: {flag} C_emp={self.C_emp:.4g} (half sample {self.C_emp_half:.4g}), "
            f"admissible {self.n_admissible}/{self.n_samples}, violations {self.violations}"
        )


def _loguniform(rng, lo, hi, size):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def _report(lemma_id, ratios, admissible, n_half, two_sided=False, violations=0, details=None):
    """Assemble a report from per-sample ratios (NaN where inadmissible)."""
    ratios = np.asarray(ratios, dtype=float)
    admissible = np.asarray(admissible, dtype=bool) & np.isfinite(ratios)
    n_total = ratios.size
    details = dict(details or {})
    if not admissible.any():
        return LemmaReport(lemma_id, n_total, 0, math.nan, math.nan, False, violations, True, False, details)

    def stat(mask):
        r = ratios[mask]
        if r.size == 0:
            return math.nan, (math.nan, math.nan)
        lo, hi = float(r.min()), float(r.max())
        c = max(hi, 1.0 / lo) if two_sided else hi
        return c, (lo, hi)

    first = admissible.copy()
    first[n_half:] = False
    c_all, bracket = stat(admissible)
    c_half, _ = stat(first)
    if two_sided:
        details["bracket"] = bracket
    stable = bool(np.isfinite(c_all) and np.isfinite(c_half) and max(c_all, 1.0) <= 2.0 * max(c_half, 1.0))
    passed = stable and violations == 0
    return LemmaReport(lemma_id, n_total, int(admissible.sum()), c_all, c_half, stable, violations,
                       False, passed, details)


def _merge(lemma_id, reports, n_total, details=None):
    """Combine sub-checks: C_emp is the largest constant, all must be stable."""
    live = [r for r in reports if not r.vacuous]
    if not live:
        return LemmaReport(lemma_id, n_total, 0, math.nan, math.nan, False, 0, True, False, details or {})
    worst = max(live, key=lambda r: r.C_emp)
    d = dict(details or {})
    d["parts"] = {r.lemma_id: r.C_emp for r in reports}
    viol = sum(r.violations for r in reports)
    stable = all(r.stable for r in live)
    return LemmaReport(lemma_id, n_total, max(r.n_admissible for r in live), worst.C_emp,
                       worst.C_emp_half, stable, viol, False, stable and viol == 0, d)


# ---------------------------------------------------------------------------
# individual checks


def _wellsep(ss: SampleSpec, rng, spec):
    m = 2 * ss.n
    eta = _loguniform(rng, ss.eta_min, ss.eta_max, m)
    alpha = rng.uniform(1.0, ss.alpha, m)
    xi = eta * alpha ** rng.uniform(-1.0, 1.0, m)
    lo = np.maximum(W._tc(np.maximum(W.n_intervals(eta), 1), eta), W._tc(np.maximum(W.n_intervals(xi), 1), xi))
    hi = 2 * np.minimum(eta, xi)
    t = rng.uniform(lo, hi)
    # half the sample sits close to a resonance of eta, where (b) fails
    near = rng.random(m) < 0.5
    kk = np.maximum(W.interval_index(t, eta), 1)
    t_near = eta / kk + rng.normal(0.0, 0.1, m) * eta / kk ** 2
    t = np.where(near & (t_near >= lo) & (t_near < hi), t_near, t)
    k = W.interval_index(t, eta)
    n = W.interval_index(t, xi)
    adm = (k > 0) & (n > 0) & (hi > lo)
    ks = np.maximum(k, 1)
    ns = np.maximum(n, 1)
    a = k == n
    b = (np.abs(t - eta / ks) >= eta / (10 * alpha * ks ** 2)) & (np.abs(t - xi / ns) >= xi / (10 * alpha * ns ** 2))
    c_const = 1.0 / 20.0
    c = np.abs(eta - xi) >= c_const * eta / (alpha ** 2 * ns)
    viol = int(np.count_nonzero(adm & ~(a | b | c)))
    # implied constant of (c) on the samples where (a) and (b) fail
    need_c = adm & ~a & ~b
    with np.errstate(divide="ignore"):
        implied = eta / (alpha ** 2 * ns * np.abs(eta - xi))
    ratios = np.where(need_c, implied, np.nan)
    details = {
        "c_constant": c_const,
        "counts": {"a": int((adm & a).sum()), "b_only": int((adm & ~a & b).sum()), "c_only": int(need_c.sum())},
    }
    if not need_c.any():
        # (a) or (b) covers every sample: the trichotomy holds trivially
        ratios = np.where(adm, 0.0, np.nan)
    rep = _report("wellsep", ratios, adm, ss.n, violations=viol, details=details)
    rep.n_admissible = int(adm.sum())
    if not need_c.any() and rep.n_admissible:
        rep.C_emp = rep.C_emp_half = 0.0
        rep.stable = True
        rep.passed = viol == 0
    return rep


def _dtw_samples(ss: SampleSpec, rng):
    """(t, k, eta, tau) with t in I_{k,eta} and t > 2 sqrt(eta)."""
    m = 2 * ss.n
    eta = _loguniform(rng, max(ss.eta_min, 16.0), ss.eta_max, m)
    floor = 2 * np.sqrt(eta)
    # intervals reaching past 2 sqrt(eta): t_{k-1} > 2 sqrt(eta)
    kmax = np.maximum(1, np.floor(np.sqrt(eta) / 2 + 1)).astype(int)
    kmax = np.minimum(kmax, W.n_intervals(eta))
    k = 1 + np.floor(rng.random(m) * kmax).astype(int)
    lo = np.maximum(W._tc(k, eta), floor * (1 + 1e-12))
    hi = W._tc(k - 1, eta)
    adm = hi > lo
    t = rng.uniform(lo, np.where(adm, hi, lo + 1))
    adm &= W.interval_index(t, eta) == k
    tau = t - eta / k
    return t, k, eta, tau, adm


def _dtw(ss, rng, spec):
    t, k, eta, tau, adm = _dtw_samples(ss, rng)
    q_nr = W.dlog_w_nr(t, eta, spec) * (1 + np.abs(tau))
    q_r = W.dlog_w_r(t, eta, spec) * (1 + np.abs(tau))
    rep_nr = _report("dtw_NR", q_nr, adm, ss.n, two_sided=True)
    rep_r = _report("dtw_R", q_r, adm, ss.n, two_sided=True)
    out = _merge("dtw", [rep_nr, rep_r], q_nr.size,
                 {"bracket_NR": rep_nr.details.get("bracket"), "bracket_R": rep_r.details.get("bracket")})
    return out


def _wuplow(ss, rng, spec):
    t, k, eta, tau, adm = _dtw_samples(ss, rng)
    kappa = spec.c_kappa
    lw_r = W.log_w_r(t, eta, spec)
    lw_nr = W.log_w_nr(t, eta, spec)
    # d_tau w_R / (kappa k^2/eta w_NR)
    r1 = W.dlog_w_r(t, eta, spec) * np.exp(lw_r - lw_nr) / (kappa * k ** 2 / eta)
    # d_tau w_NR / (kappa eta / (k^2 (1 + tau^2)) w_R)
    r2 = W.dlog_w_nr(t, eta, spec) * np.exp(lw_nr - lw_r) / (kappa * eta / (k ** 2 * (1 + tau ** 2)))
    a = _report("w-up-low_R", r1, adm, ss.n, two_sided=True)
    b = _report("w-up-low_NR", r2, adm, ss.n, two_sided=True)
    return _merge("w-up-low", [a, b], r1.size,
                  {"bracket_R": a.details.get("bracket"), "bracket_NR": b.details.get("bracket")})


def _pair_sample(ss, rng, m):
    eta = _loguniform(rng, ss.eta_min, ss.eta_max, m)
    xi = eta * ss.alpha ** rng.uniform(-1.0, 1.0, m)
    return eta, xi


def _random_k(rng, t, eta, spread, m):
    """k equal to the resonant index (with random sign flips) or a nearby integer."""
    n = W.interval_index(t, eta)
    base = np.where(n > 0, n, rng.integers(1, 5, m))
    k = base + rng.integers(-spread, spread + 1, m) * (rng.random(m) < 0.5)
    sign = np.where(rng.random(m) < 0.8, 1, -1)
    return (sign * k).astype(int)


def _wtfreq(ss, rng, spec):
    m = 2 * ss.n
    eta, xi = _pair_sample(ss, rng, m)
    lo = np.maximum(np.maximum(2 * np.sqrt(xi), np.sqrt(eta)), 1.0)
    hi = 2 * np.minimum(xi, eta)
    adm = hi > lo
    t = rng.uniform(lo, np.where(adm, hi, lo + 1))
    k = _random_k(rng, t, eta, ss.k_spread, m)
    l = _random_k(rng, t, xi, ss.k_spread, m)
    bracket = np.sqrt(1 + (eta - xi) ** 2)
    num = W.dlog_w(t, k, eta, spec)
    den = W.dlog_w(t, l, xi, spec)
    adm &= den > 0
    r1 = num / np.where(den > 0, den, 1.0) / bracket
    part1 = _report("WtFreqCompare_i", r1, adm, ss.n)

    # (ii): any t >= 1, comparable frequencies
    t2 = _loguniform(rng, 1.0, 3.0 * np.maximum(eta, xi), m)
    k2 = _random_k(rng, t2, eta, ss.k_spread, m)
    l2 = _random_k(rng, t2, xi, ss.k_spread, m)
    lhs = np.sqrt(W.dlog_w(t2, l2, xi, spec))
    rhs = (np.sqrt(W.dlog_w(t2, k2, eta, spec)) + eta ** (spec.s / 2) / (1 + t2 ** 2) ** (spec.s / 2)) * bracket
    part2 = _report("WtFreqCompare_ii", lhs / rhs, np.ones(m, bool), ss.n)
    return _merge("WtFreqCompare", [part1, part2], m)


def _wfreq(ss, rng, spec):
    m = 2 * ss.n
    eta = _loguniform(rng, ss.eta_min, ss.eta_max, m)
    # offsets on every scale, from O(1) to O(eta)
    d = np.sign(rng.random(m) - 0.5) * _loguniform(rng, 1e-2, 1.0, m) * eta
    xi = np.abs(eta + d)
    t = rng.uniform(0.0, 2.5 * np.maximum(eta, xi))
    r = np.exp(W.log_w_nr(t, xi, spec) - W.log_w_nr(t, eta, spec) - spec.mu * np.sqrt(np.abs(eta - xi)))
    return _report("WFreqCompare", r, np.ones(m, bool), ss.n)


def _jswap(ss, rng, spec):
    m = 2 * ss.n
    eta = _loguniform(rng, ss.eta_min, ss.eta_max, m)
    xi = eta + rng.normal(0.0, 1.0, m) * rng.choice([0.5, 2.0, 8.0], m)
    xi = np.where(np.abs(xi) < 1e-3, 1e-3, xi)
    near = rng.random(m) < 0.7
    N = np.maximum(W.n_intervals(eta), 1)
    kk = 1 + np.floor(rng.random(m) * N).astype(int)
    t = np.where(near, eta / kk + rng.normal(0.0, 1.0, m) * eta / kk ** 2, rng.uniform(0, 2.5 * eta))
    t = np.maximum(t, 0.0)
    k = np.where(near, kk, _random_k(rng, t, eta, ss.k_spread, m))
    l = k + rng.integers(-ss.k_spread, ss.k_spread + 1, m) * (rng.random(m) < 0.5)
    k = np.where(k == 0, 1, k)
    dist = np.sqrt(np.abs(k - l) + np.abs(eta - xi))
    log_ratio = W.log_J(t, k, eta, spec) - W.log_J(t, l, xi, spec)
    in_k_eta = W.in_interval(t, k, eta)
    in_k_xi = W.in_interval(t, k, xi)
    in_l_xi = W.in_interval(t, l, xi)
    comparable = (np.abs(xi) <= ss.alpha * np.abs(eta)) & (np.abs(eta) <= ss.alpha * np.abs(xi))

    improved = ~in_k_eta | (k == l) | (in_k_eta & ~in_k_xi & comparable)
    r_imp = np.exp(log_ratio - 10 * spec.mu * dist)
    lead = np.abs(eta) / (k ** 2 * (1 + np.abs(t - eta / k)))
    r_gen = np.exp(log_ratio - 9 * spec.mu * dist) / lead
    ls = np.where(l == 0, 1, l)
    gain = ls ** 2 * (1 + np.abs(t - xi / ls)) / np.abs(xi)
    gain_case = in_l_xi & ~in_k_eta & comparable & (l != 0)
    r_gain = np.exp(log_ratio - 11 * spec.mu * dist) / gain
    parts = [
        _report("Jswap_improved", r_imp, improved, ss.n),
        _report("Jswap_general", r_gen, in_k_eta, ss.n),
        _report("Jswap_gain", r_gain, gain_case, ss.n),
    ]
    return _merge("Jswap", parts, m)


def _jtrans(ss, rng, spec):
    m = 2 * ss.n
    eta = _loguniform(rng, ss.eta_min, ss.eta_max, m) * np.where(rng.random(m) < 0.5, 1, -1)
    xi = eta + rng.normal(0.0, 1.0, m) * rng.choice([0.5, 4.0, 32.0], m)
    k = rng.integers(-6, 7, m)
    l = k + rng.integers(-2, 3, m)
    t = rng.uniform(0.0, 0.5 * np.sqrt(np.minimum(np.abs(eta), np.abs(xi))))
    dist = np.abs(k - l) + np.abs(eta - xi)
    lhs = np.abs(np.expm1(W.log_J(t, k, eta, spec) - W.log_J(t, l, xi, spec)))
    rhs = np.sqrt(1 + dist ** 2) / np.sqrt(np.abs(xi) + np.abs(eta) + np.abs(k) + np.abs(l)) * np.exp(
        11 * spec.mu * np.sqrt(dist)
    )
    return _report("JTrans", lhs / rhs, np.ones(m, bool), ss.n)


def _vfield(grid: Grid, rng, decay: float, s: float) -> SpectralField:
    """Random real function of v only (k = 0 row)."""
    c = np.zeros(grid.shape, dtype=complex)
    row = rng.standard_normal(grid.n_y) + 1j * rng.standard_normal(grid.n_y)
    row *= np.exp(-decay * np.abs(grid.eta) ** s)
    c[grid.k_max] = row
    f = SpectralField(grid, c).symmetrize()
    f.coeffs[grid.k_max, grid.n_y // 2] = 0.0
    return f.with_coeffs(np.where(grid.dealias_mask, f.coeffs, 0.0))


def _prodalg(ss, rng, spec):
    g = Grid(ss.field_k_max, ss.field_n_y)
    t_samples = rng.uniform(0.0, 2.0 * g.eta_max, 2 * ss.n)
    row = g.k_max
    eta = g.eta
    ratios_a, ratios_r = [], []
    for t in t_samples:
        f = _vfield(g, rng, ss.field_decay, spec.s)
        h = _vfield(g, rng, ss.field_decay, spec.s)
        fh = product(f, h)
        lam = spec.lambda_of(t)
        for log_mult, store in ((W.log_A(t, 0, eta, spec, lam), ratios_a), (W.log_A_R(t, eta, spec, lam), ratios_r)):
            n_fh = W.weighted_norm(fh.coeffs[row], log_mult, g.d_eta)
            n_f = W.weighted_norm(f.coeffs[row], log_mult, g.d_eta)
            n_h = W.weighted_norm(h.coeffs[row], log_mult, g.d_eta)
            store.append(n_fh / (n_f * n_h))
    ones = np.ones(len(t_samples), bool)
    return _merge("ProdAlg", [_report("ProdAlg_A", ratios_a, ones, ss.n), _report("ProdAlg_AR", ratios_r, ones, ss.n)],
                  len(t_samples))


def _galg(ss, rng, spec):
    from .initial import random_field

    g = Grid(ss.field_k_max, ss.field_n_y)
    lam, sigma = spec.lambda0, spec.sigma
    # 50 pairs per half, as a fixed random family
    m = 2 * min(ss.n, 50)
    ratios = []
    for _ in range(m):
        f = random_field(g, rng, ss.field_decay, dealiased=True)
        h = random_field(g, rng, ss.field_decay, dealiased=True)
        fh = product(f, h)
        ratios.append(
            W.gevrey_norm(fh, lam, sigma, spec.s) / (W.gevrey_norm(f, lam, sigma, spec.s) * W.gevrey_norm(h, lam, sigma, spec.s))
        )
    return _report("GAlg", ratios, np.ones(m, bool), m // 2)


def basic_ratio(eta, spec) -> float:
    """r(eta) = w(0,eta)^{-1} eta^{mu/8} exp(-mu sqrt(eta)/2)."""
    return math.exp(-W.log_w_nr(0.0, eta, spec) + spec.mu / 8 * math.log(eta) - spec.mu * math.sqrt(eta) / 2)


def _basic(ss, rng, spec):
    lo, hi = ss.basic_ladder
    ladder = np.geomspace(lo, hi, ss.basic_points)
    r = np.array([basic_ratio(e, spec) for e in ladder])
    endpoint_change = abs(r[-1] - r[0]) / r[0]
    spread = float(r.max() / r.min())
    rep = LemmaReport("basic", len(ladder), len(ladder), spread, spread, True, 0, False,
                      endpoint_change < 0.05,
                      {"ladder": ladder.tolist(), "r": r.tolist(), "relative_change": endpoint_change,
                       "limit": (2 * math.pi) ** (-spec.c)})
    return rep


_CHECKS = {
    "wellsep": _wellsep,
    "dtw": _dtw,
    "w-up-low": _wuplow,
    "WtFreqCompare": _wtfreq,
    "WFreqCompare": _wfreq,
    "Jswap": _jswap,
    "JTrans": _jtrans,
    "ProdAlg": _prodalg,
    "GAlg": _galg,
    "basic": _basic,
}


def lemma_harness(lemma_id: str, sample_spec: SampleSpec | None = None, seed: int = 0,
                  spec: W.MultiplierSpec | None = None) -> LemmaReport:
    """Run one randomized inequality check and return its report."""
    if lemma_id not in _CHECKS:
        raise ConfigError(f"unknown lemma id {lemma_id!r}; expected one of {', '.join(LEMMA_IDS)}")
    ss = sample_spec or SampleSpec()
    spec = spec or W.MultiplierSpec()
    rng = make_rng(seed)
    with np.errstate(over="ignore", under="ignore"):
        return _CHECKS[lemma_id](ss, rng, spec)
