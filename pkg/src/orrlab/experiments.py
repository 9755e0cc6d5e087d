"""Experiment drivers shared by the command line and the test-suite.

Every experiment writes ``series.csv`` (17 significant digits),
``summary.json`` (metrics with targets, pass flags and a one-line
statement of what each metric measures) and ``plot.py`` (a standalone
matplotlib script reading the CSV).
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import coords as C
from . import initial as I
from .checkpoint import save_checkpoint
from .config import ExperimentConfig, config_hash
from .errors import ConfigError, StepSizeError
from .lemmas import SampleSpec, lemma_harness
from .linear import fit_loglog_slope, linear_velocity_series, orr_streamfunction, velocity_from_streamfunction
from .nonlinear import SimState, TimeSeries, echo_experiment, initial_state, run
from .spectral import Grid, SpectralField, from_spectral
from .toy import envelope_constant, fit_growth_exponents, integrate_toy

__all__ = [
    "make_rng",
    "build_grid",
    "build_initial",
    "check_initial_step",
    "linear_damping_analysis",
    "recentred_coeffs",
    "nonlinear_analysis",
    "coordinate_analysis",
    "energy_series",
    "run_experiment",
    "resume_experiment",
    "write_outputs",
]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for an independent stream of the configured seed."""
    ss = np.random.SeedSequence(seed).spawn(stream + 1)[stream]
    return np.random.Generator(np.random.Philox(ss))


def _derived_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence(seed).spawn(stream + 1)[stream].generate_state(1, np.uint64)[0])


def build_grid(cfg: ExperimentConfig) -> Grid:
    return Grid(cfg.grid.k_max, cfg.grid.n_y, cfg.grid.L_y)


def build_initial(cfg: ExperimentConfig, grid: Grid, rng: np.random.Generator | None = None) -> SpectralField:
    """Initial vorticity described by ``cfg.init``."""
    ini = cfg.init
    if abs(ini.k) > grid.k_max:
        raise ConfigError(f"init.k={ini.k} exceeds grid.k_max={grid.k_max}")
    if ini.kind == "gevrey_bump":
        h0 = I.gevrey_bump(grid, ini.epsilon, ini.width, abs(ini.k))
    elif ini.kind == "two_mode_echo":
        if abs(ini.eta0) >= grid.eta_max * 2 / 3:
            raise ConfigError(f"init.eta0={ini.eta0} lies outside the dealiased band of the grid")
        h0 = I.two_mode_echo(grid, ini.epsilon, ini.eta0, ini.width)
    elif ini.kind == "custom":
        if not ini.modes:
            raise ConfigError("init.modes must list at least one (k, eta, re, im) entry")
        h0 = I.custom_modes(grid, ini.modes)
    else:
        rng = rng if rng is not None else make_rng(cfg.seed)
        h0 = I.random_field(grid, rng, ini.decay, dealiased=True)
        h0 = h0 * (ini.epsilon / max(float(np.abs(from_spectral(h0)).max()), 1e-300))
    if ini.kind in ("gevrey_bump", "two_mode_echo") and ini.epsilon > 0:
        I.check_support(h0)
    return h0


def check_initial_step(h0: SpectralField, dt: float) -> None:
    """Reject a time step that violates the CFL bound for the initial velocity."""
    g = h0.grid
    phi = orr_streamfunction(h0, 0.0)
    ux, uy = velocity_from_streamfunction(phi, 0.0)
    speed = max(float(np.abs(from_spectral(SpectralField(g, ux))).max()),
                float(np.abs(from_spectral(SpectralField(g, uy))).max()))
    if dt * speed > 0.5 * min(g.dz, g.dy):
        raise StepSizeError(f"time.dt={dt:g} violates the CFL bound for the initial data (max|u|={speed:.3g})")


# ---------------------------------------------------------------------------
# analyses


def _slope(t, y, window) -> float:
    """Log-log slope, or NaN when the window holds too few samples."""
    try:
        return fit_loglog_slope(t, y, window)
    except ValueError:
        return math.nan


def _metric(value, target: str, passed, claim: str) -> dict:
    if isinstance(value, float) and not math.isfinite(value):
        value = None  # keeps summary.json strict JSON
    return {"value": value, "target": target, "pass": None if passed is None else bool(passed), "claim": claim}


def linear_damping_analysis(h0: SpectralField, times, window=(10.0, 100.0)):
    """Series and fitted slopes of the linear velocity norms."""
    diag = linear_velocity_series(h0, times)
    ts = TimeSeries(["t", "ux_fluct", "uy", "ux_mean_feedback"])
    for i, t in enumerate(diag.times):
        ts.append({"t": t, "ux_fluct": diag.ux_fluct_norm[i], "uy": diag.uy_norm[i],
                   "ux_mean_feedback": diag.ux_mean_feedback[i]})
    slopes = {
        "ux_fluct": _slope(diag.times, diag.ux_fluct_norm, window),
        "uy": _slope(diag.times, diag.uy_norm, window),
        "ux_mean_feedback": _slope(diag.times, diag.ux_mean_feedback, window),
    }
    return ts, slopes


LINEAR_TARGETS = {"ux_fluct": (-1.0, 0.15), "uy": (-2.0, 0.15), "ux_mean_feedback": (-3.0, 0.3)}
CLAIMS = {
    "ux_fluct": "L2 norm of the x-dependent part of U^x decays like 1/t",
    "uy": "L2 norm of U^y decays like 1/t^2",
    "ux_mean_feedback": "x-average of U^y d_y U^x decays like 1/t^3",
    "h_convergence_rate": "vorticity, shifted by the accumulated mean flow, converges to its final state at rate 1/t",
    "enstrophy_drift": "L2 norm of the vorticity is conserved",
    "mean_fraction": "x-averaged vorticity carries a strict fraction of the enstrophy (no strong L2 convergence)",
    "sobolev": "physical-frame H^N norm of the vorticity grows like t^N",
}


def _linear_metrics(slopes: dict) -> dict:
    out = {}
    for name, (ref, tol) in LINEAR_TARGETS.items():
        val = slopes[name]
        ok = math.isfinite(val) and abs(val - ref) <= tol
        out[f"slope_{name}"] = _metric(val, f"{ref:g} +- {tol:g}", ok, CLAIMS[name])
    return out


def recentred_coeffs(state: SimState) -> np.ndarray:
    """Coefficients of h(t, z + Phi(t, y), y) with Phi = int_0^t <U^x> ds.

    Shifting each y-line by the accumulated mean-flow displacement removes
    the linear-in-t phase drift that the limiting shear imposes in the
    plain sheared frame; this is the frame in which h converges.
    """
    g = state.grid
    rows = C.profile_values(state.h.coeffs, g, real=False)
    rows *= np.exp(1j * g.k[:, None] * state.I_ux[None, :])
    return C.profile_coeffs(rows, g)


def _distance_rate(ts, coeffs, d_eta, conv_window):
    dist = np.array([math.sqrt(float(np.sum(np.abs(c - coeffs[-1]) ** 2)) * d_eta) for c in coeffs])
    sel = (ts >= conv_window[0]) & (ts <= conv_window[1])
    rate = _slope(ts[sel], dist[sel], conv_window)
    return dist, rate


def nonlinear_analysis(snapshots, series: TimeSeries, window=(10.0, 100.0), conv_window=(10.0, 50.0),
                       sobolev_window=(10.0, 60.0)) -> dict:
    """Rates and conservation numbers of a nonlinear run.

    ``snapshots`` are the states recorded at the output times (the last
    one is taken as the terminal state).
    """
    t = series.column("t")
    res = {}
    for name in ("ux_fluct", "uy", "ux_mean_feedback"):
        res[f"slope_{name}"] = _slope(t, series.column(name), window)
    h_l2 = series.column("h_l2")
    res["enstrophy_drift"] = float(np.max(np.abs(h_l2 - h_l2[0])) / h_l2[0]) if h_l2[0] > 0 else 0.0
    final = snapshots[-1]
    ts = np.array([s.t for s in snapshots])
    d_eta = final.grid.d_eta
    dist, rate = _distance_rate(ts, [recentred_coeffs(s) for s in snapshots], d_eta, conv_window)
    plain, plain_rate = _distance_rate(ts, [s.h.coeffs for s in snapshots], d_eta, conv_window)
    res["h_distance"] = {"t": ts.tolist(), "value": dist.tolist(), "plain": plain.tolist()}
    res["h_convergence_rate"] = rate
    res["h_convergence_rate_plain"] = plain_rate
    res["h_distance_decreasing"] = bool(np.all(np.diff(dist[ts >= conv_window[0]]) <= 0))
    g = final.grid
    c = final.h.coeffs
    total = float(np.sum(np.abs(c) ** 2))
    mean = float(np.sum(np.abs(c[g.k_max]) ** 2))
    c0 = snapshots[0].h.coeffs
    tot0 = float(np.sum(np.abs(c0) ** 2))
    res["initial_nonzero_k_fraction"] = float(1 - np.sum(np.abs(c0[g.k_max]) ** 2) / tot0) if tot0 > 0 else 0.0
    res["mean_fraction"] = math.sqrt(mean / total) if total > 0 else 0.0
    for name in series.names:
        if name.startswith("sobolev_"):
            res[f"growth_{name}"] = _slope(t, series.column(name), sobolev_window)
    return res


def coordinate_analysis(snapshots, times=(10.0, 50.0, 100.0)) -> dict:
    """Identity residuals of the coordinate fields at the requested times."""
    out = {}
    by_t = {round(s.t, 9): s for s in snapshots}
    for t in times:
        s = by_t.get(round(t, 9))
        if s is None:
            raise ConfigError(f"no snapshot at t={t:g} for the coordinate check")
        out[f"{t:g}"] = C.check_identities(C.build_coordinates(s))
    return out


def energy_series(snapshots, spec, epsilon: float, K_D: float = 1.0, K_v: float = 100.0,
                  t_min: float = 1.0) -> TimeSeries:
    """E(t) with its components, plus the identity residuals, at each snapshot."""
    ts = TimeSeries(["t", "E", "Af", "hbar", "dtv", "vprime", "res_hbar", "res_u0"])
    for s in snapshots:
        if s.t < t_min:
            continue
        cs = C.build_coordinates(s)
        E, comp = C.energy_E(s, cs, spec, epsilon, K_D, K_v)
        ident = C.check_identities(cs)
        ts.append({"t": s.t, "E": E, "Af": comp["Af"], "hbar": comp["hbar"], "dtv": comp["dtv"],
                   "vprime": comp["vprime"], "res_hbar": ident["hbar"], "res_u0": ident["u0"]})
    return ts


# ---------------------------------------------------------------------------
# outputs


PLOT_TEMPLATE = '''"""Plot {csv} (generated by orrlab)."""
import csv
import sys

import matplotlib.pyplot as plt

with open({csv!r}) as fh:
    rows = list(csv.DictReader(fh))
names = list(rows[0].keys())
x = [float(r[names[0]]) for r in rows]
fig, ax = plt.subplots()
for name in names[1:]:
    y = [abs(float(r[name])) for r in rows]
    if any(v > 0 for v in y):
        ax.plot(x, y, label=name)
ax.set_xlabel(names[0])
ax.set_xscale({xscale!r})
ax.set_yscale("log")
ax.legend()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png!r})
'''


def write_outputs(out_dir, series: TimeSeries, summary: dict, xscale: str = "log") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series.write_csv(out / "series.csv")
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    (out / "plot.py").write_text(PLOT_TEMPLATE.format(csv="series.csv", xscale=xscale, png="series.png"))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# ---------------------------------------------------------------------------
# dispatch


def _simulate(cfg: ExperimentConfig, h0: SpectralField | None, out_dir, state: SimState | None = None):
    spec = cfg.multipliers.build()
    chash = config_hash(cfg)
    snaps = []
    ck_cb = None
    if cfg.time.checkpoint_stride and out_dir is not None:
        ck_dir = Path(out_dir) / "checkpoints"
        ck_dir.mkdir(parents=True, exist_ok=True)

        def ck_cb(s):
            save_checkpoint(s, ck_dir / f"step{s.step_count:09d}.ck", spec, chash)

    if state is None:
        state = initial_state(h0, {"epsilon": cfg.init.epsilon, "config": cfg.model_dump(mode="json")})
    final, series = run(None, cfg.time.dt, cfg.time.t_end, cfg.time.output_stride, multipliers=spec,
                        callback=snaps.append, state=state, checkpoint=ck_cb,
                        checkpoint_stride=cfg.time.checkpoint_stride)
    return final, series, snaps, spec


def _nonlinear_summary(cfg, series, snaps) -> dict:
    eps = cfg.init.epsilon
    if eps == 0 or series.column("h_l2")[0] == 0:
        drift = float(np.max(np.abs(series.column("h_l2"))))
        return {"trivial-constant": True,
                "metrics": {"enstrophy_drift": _metric(drift, "== 0", drift == 0.0, CLAIMS["enstrophy_drift"])}}
    res = nonlinear_analysis(snaps, series, cfg.time.fit_window)
    m = {}
    linear = {"ux_fluct": -1.0, "uy": -2.0, "ux_mean_feedback": -3.0}
    for name, ref in linear.items():
        v = res[f"slope_{name}"]
        m[f"slope_{name}"] = _metric(v, f"{ref:g} +- 0.3", abs(v - ref) <= 0.3, CLAIMS[name])
    ok = res["h_convergence_rate"] <= -0.7 and res["h_distance_decreasing"]
    m["h_convergence_rate"] = _metric(res["h_convergence_rate"], "<= -0.7 and decreasing", ok,
                                      CLAIMS["h_convergence_rate"])
    m["h_convergence_rate_plain"] = _metric(res["h_convergence_rate_plain"], "diagnostic", None,
                                            "same distance without the mean-flow shift")
    m["enstrophy_drift"] = _metric(res["enstrophy_drift"], "< 1e-4", res["enstrophy_drift"] < 1e-4,
                                   CLAIMS["enstrophy_drift"])
    applies = res["initial_nonzero_k_fraction"] >= 0.2
    m["mean_fraction"] = _metric(res["mean_fraction"], "<= 0.9", (res["mean_fraction"] <= 0.9) if applies else None,
                                 CLAIMS["mean_fraction"])
    for name, v in res.items():
        if name.startswith("growth_sobolev_"):
            N = float(name.rsplit("_", 1)[1])
            m[name] = _metric(v, f"{N:g} +- 0.2", abs(v - N) <= 0.2, CLAIMS["sobolev"])
    return {"metrics": m, "h_distance": res["h_distance"]}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run the configured experiment, write its outputs and return the summary."""
    out_dir = Path(out_dir if out_dir is not None else cfg.output)
    grid = build_grid(cfg) if cfg.experiment not in ("lemmas", "toy", "elliptic") else None
    summary = {"experiment": cfg.experiment, "config_hash": config_hash(cfg), "seed": cfg.seed}
    xscale = "log"
    exp = cfg.experiment

    if exp == "linear-damping":
        h0 = build_initial(cfg, grid, make_rng(cfg.seed))
        times = np.linspace(1.0, cfg.time.t_end, int(round(cfg.time.t_end)) * 4 + 1)
        series, slopes = linear_damping_analysis(h0, times, cfg.time.fit_window)
        summary["metrics"] = _linear_metrics(slopes)

    elif exp in ("nonlinear-damping", "enstrophy-cascade", "sobolev-growth", "energy-monitor"):
        h0 = build_initial(cfg, grid, make_rng(cfg.seed))
        check_initial_step(h0, cfg.time.dt)
        final, series, snaps, spec = _simulate(cfg, h0, out_dir)
        summary.update(_nonlinear_summary(cfg, series, snaps))
        if exp == "energy-monitor":
            es = energy_series(snaps, spec, cfg.init.epsilon, cfg.energy.K_D, cfg.energy.K_v)
            E = es.column("E")
            if len(E):
                inside = (es.column("t") >= 10.0)
                ratio = float(E[inside].max() / E[inside].min()) if inside.any() and E[inside].min() > 0 else math.nan
                growth = float(E[inside].max() / E[inside][0]) if inside.any() and E[inside][0] > 0 else math.nan
                summary.setdefault("metrics", {})["energy_max_over_min"] = _metric(
                    ratio, "< 4", ratio < 4, "main energy stays within a bounded band")
                summary["metrics"]["energy_growth_from_start"] = _metric(
                    growth, "< 4", growth < 4, "main energy does not grow beyond its value at the window start")
            series = es
        summary["final_t"] = final.t

    elif exp == "echo":
        h0 = build_initial(cfg.model_copy(update={"init": cfg.init.model_copy(update={"kind": "two_mode_echo"})}),
                           grid)
        check_initial_step(h0, cfg.time.dt)
        res = echo_experiment(h0, cfg.init.eta0, cfg.time.dt, cfg.time.t_end)
        series = res.series
        target = cfg.init.eta0 / 2
        arg = res.argmax_dh_dt[2]
        summary["metrics"] = {
            "argmax_dhdt_k2": _metric(arg, f"{target:g} +- 10%", abs(arg - target) <= 0.1 * target,
                                      "forcing of mode (2, eta0) peaks at the echo time eta0/2"),
            "argmax_h_k2": _metric(res.argmax_h[2], f"{target:g} +- 10%",
                                   abs(res.argmax_h[2] - target) <= 0.1 * target,
                                   "amplitude of mode (2, eta0) peaks at the echo time eta0/2"),
        }
        xscale = "linear"

    elif exp == "lemmas":
        series = TimeSeries(["index", "C_emp", "C_emp_half", "admissible", "violations", "passed"])
        metrics = {}
        for i, lid in enumerate(cfg.lemmas.ids):
            rep = lemma_harness(lid, SampleSpec(n=cfg.lemmas.samples), _derived_seed(cfg.seed, i),
                                cfg.multipliers.build())
            series.append({"index": i, "C_emp": rep.C_emp, "C_emp_half": rep.C_emp_half,
                           "admissible": rep.n_admissible, "violations": rep.violations,
                           "passed": int(rep.passed)})
            metrics[lid] = _metric(rep.C_emp, "finite, stable within x2, no violations", rep.passed,
                                   f"empirical constant of the {lid} inequality")
            metrics[lid]["details"] = rep.details
            metrics[lid]["vacuous"] = rep.vacuous
        summary["metrics"] = metrics
        summary["lemma_ids"] = list(cfg.lemmas.ids)
        xscale = "linear"

    elif exp == "toy":
        tc = cfg.toy
        k = tc.k
        traj = integrate_toy(k, tc.eta_over_k2 * k * k, tc.kappa, self_interaction=tc.self_interaction)
        fit = fit_growth_exponents(traj)
        series = TimeSeries(["tau", "f_R", "f_NR"])
        for i in range(0, traj.tau.size, max(1, traj.tau.size // 4000)):
            series.append({"tau": traj.tau[i], "f_R": traj.f_R[i], "f_NR": traj.f_NR[i]})
        L = traj.length
        summary["metrics"] = {
            "alpha_right": _metric(fit["alpha_right"], f"{fit['predicted']:.6g} +- 0.05",
                                   abs(fit["alpha_right"] - fit["predicted"]) <= 0.05,
                                   "resonant mode grows like tau^p with p (p - 1) = kappa^2"),
            "ratio_at_resonance": _metric(fit["ratio_at_resonance"], f"within x10 of {L:g}",
                                          L / 10 <= fit["ratio_at_resonance"] <= 10 * L,
                                          "non-resonant mode is amplified by eta/k^2 relative to the resonant one"),
            "envelope_constant": _metric(envelope_constant(traj), "finite", None,
                                         "trajectory stays under the weight-shaped envelope"),
        }
        summary["alpha_left"] = fit["alpha_left"]
        summary["n_steps"] = traj.n_steps
        summary["self_convergence"] = traj.self_convergence
        xscale = "symlog"

    elif exp == "elliptic":
        series, info = elliptic_run(cfg, make_rng(cfg.seed))
        summary["metrics"] = {
            "residual": _metric(info["residual"], f"<= {cfg.elliptic.tol:g}", info["residual"] <= cfg.elliptic.tol,
                                "fixed-point iteration around Delta_L inverts Delta_t"),
            "iterations": _metric(info["iterations"], "<= max_iter", True, "iteration count"),
            "contraction": _metric(info["contraction"], "< 1", info["contraction"] < 1, "contraction factor"),
        }
        xscale = "linear"
    else:  # pragma: no cover - guarded by the config schema
        raise ConfigError(f"unknown experiment {exp!r}")

    write_outputs(out_dir, series, summary, xscale)
    return summary


def elliptic_run(cfg: ExperimentConfig, rng: np.random.Generator):
    """Solve Delta_t phi = f for random k != 0 data and v' = 1 + A cos(2 pi v / L_y)."""
    ec = cfg.elliptic
    g = Grid(ec.k_max, ec.n_y, ec.L_y)
    vp = 1.0 + ec.perturb * np.cos(2 * np.pi * g.y / g.L_y)
    cs = C.coordinates_from_profile(g, ec.t, vp)
    f = I.random_field(g, rng, 0.5, dealiased=True)
    f.coeffs[g.k_max] = 0.0
    phi = C.solve_delta_t(f, cs, ec.tol, ec.max_iter)
    series = TimeSeries(["iteration", "residual"])
    for i, r in enumerate(phi.meta["residuals"], 1):
        series.append({"iteration": i, "residual": r})
    return series, phi.meta


def resume_experiment(state: SimState, t_end: float | None = None, out_dir=None) -> dict:
    """Continue a checkpointed run using the configuration stored with it."""
    from .config import config_from_dict

    raw = state.params.get("config")
    if raw is None:
        raise ConfigError("checkpoint carries no configuration; cannot resume")
    cfg = config_from_dict(raw)
    if t_end is not None:
        cfg = cfg.model_copy(update={"time": cfg.time.model_copy(update={"t_end": float(t_end)})})
    if state.t >= cfg.time.t_end:
        raise ConfigError(f"checkpoint time {state.t:g} is not before time.t_end={cfg.time.t_end:g}")
    out = Path(out_dir if out_dir is not None else cfg.output)
    final, series, snaps, _ = _simulate(cfg, None, out, state=state)
    summary = {"experiment": cfg.experiment, "resumed_from": state.t, "final_t": final.t,
               "final_h_l2": series.column("h_l2")[-1], "config_hash": config_hash(cfg)}
    write_outputs(out, series, summary)
    return summary
