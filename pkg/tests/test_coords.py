import math

import numpy as np
import pytest

from orrlab import coords as C
from orrlab.errors import ConfigError, DivergenceError, InvertibilityError
from orrlab.initial import gevrey_bump, random_field
from orrlab.nonlinear import initial_state, run
from orrlab.spectral import Grid, SpectralField, l2_norm
from orrlab.weights import MultiplierSpec


def snapshots(grid, eps, t_end, stride, dt=0.05):
    out = []
    run(gevrey_bump(grid, eps), dt, t_end, output_stride=stride,
        callback=lambda s: out.append(s) if s.t >= 1 else None)
    return out


@pytest.fixture(scope="module")
def small_run():
    return snapshots(Grid(16, 128), 0.01, 12.0, 10)


def perturbed(grid, t, amp):
    vp = 1.0 + amp * np.cos(2 * math.pi * grid.y / grid.L_y)
    return C.coordinates_from_profile(grid, t, vp)


def dealiased_rhs(grid, rng):
    f = random_field(grid, rng, 0.5)
    f.coeffs[grid.k_max] = 0.0
    return f


class TestBuild:
    def test_zero_data_is_identity(self, grid):
        st = initial_state(SpectralField(grid, np.zeros(grid.shape, complex)))
        st.t = 3.0
        c = C.build_coordinates(st)
        assert np.allclose(c.y_of_v, grid.y, atol=1e-15)
        assert np.all(c.vprime == 1) and np.all(c.hbar == 0) and np.all(c.dtv == 0)
        assert c.perturbation == 0

    def test_early_time_rejected(self, grid):
        st = initial_state(SpectralField(grid, np.zeros(grid.shape, complex)))
        st.t = 0.5
        with pytest.raises(ConfigError, match="t >= 1"):
            C.build_coordinates(st)

    def test_non_monotone_rejected(self, grid):
        st = initial_state(SpectralField(grid, np.zeros(grid.shape, complex)))
        st.t = 2.0
        st.I_omega = 3.0 * np.cos(2 * math.pi * grid.y / grid.L_y)
        st.I_ux = np.zeros(grid.n_y)
        with pytest.raises(InvertibilityError, match="not monotone"):
            C.build_coordinates(st)

    def test_identities_on_run(self, small_run):
        for s in small_run[::6]:
            res = C.check_identities(C.build_coordinates(s))
            assert res["hbar"] < 1e-3 and res["u0"] < 1e-3

    def test_resample_preserves_frame_at_identity(self, grid, rng):
        h = random_field(grid, rng)
        st = initial_state(h)
        st.t = 2.0
        st.h = SpectralField(grid, st.h.coeffs, 2.0)
        f = C.resample_to_v(st, C.build_coordinates(st))
        assert np.allclose(f.coeffs, st.h.coeffs, atol=1e-13)


class TestVPDE:
    def test_residuals_small(self, small_run):
        r = C.check_vpde_residuals([C.build_coordinates(s) for s in small_run])
        assert r["vpp_max"] < 1e-8
        assert r["pdevp_max"] < 5e-2

    def test_second_order_in_snapshot_spacing(self):
        g = Grid(16, 128)
        res = {}
        for stride in (10, 5):
            r = C.check_vpde_residuals([C.build_coordinates(s) for s in snapshots(g, 0.01, 6.0, stride)])
            res[stride] = dict(zip(np.round(r["times"], 6), r["pdevp"]))
        for t in (2.0, 5.0):
            assert 3.0 <= res[10][t] / res[5][t] <= 5.0

    def test_zero_data(self, grid):
        cs = []
        for t in (1.0, 2.0, 3.0):
            st = initial_state(SpectralField(grid, np.zeros(grid.shape, complex)))
            st.t = t
            cs.append(C.build_coordinates(st))
        r = C.check_vpde_residuals(cs)
        assert r["pdevp_max"] == 0 and r["vpp_max"] == 0

    def test_needs_three(self, small_run):
        with pytest.raises(ConfigError, match="at least 3"):
            C.check_vpde_residuals([C.build_coordinates(s) for s in small_run[:2]])


class TestDeltaT:
    def test_reduces_to_delta_l(self, grid, rng):
        c = C.coordinates_from_profile(grid, 2.5, np.ones(grid.n_y))
        phi = random_field(grid, rng)
        D = 1j * (grid.ETA - grid.K * 2.5)
        want = (-(grid.K ** 2) + D * D) * phi.coeffs
        assert np.allclose(C.apply_delta_t(phi, c).coeffs, want, atol=1e-12)

    def test_linear(self, grid, rng):
        c = perturbed(grid, 3.0, 0.2)
        a, b = random_field(grid, rng), random_field(grid, rng)
        lhs = C.apply_delta_t(a.with_coeffs(2 * a.coeffs - 3 * b.coeffs), c).coeffs
        rhs = 2 * C.apply_delta_t(a, c).coeffs - 3 * C.apply_delta_t(b, c).coeffs
        assert np.allclose(lhs, rhs, atol=1e-10)

    def test_divergence_form_symmetric(self, grid, rng):
        # v'^2 d^2 + v'' d = v' d (v' d) is symmetric in the dv/v' measure, not in dv
        c = perturbed(grid, 3.0, 0.2)
        assert C.delta_t_asymmetry(C.coordinates_from_profile(grid, 3.0, np.ones(grid.n_y)), rng) < 1e-12
        assert C.delta_t_asymmetry(c, rng) > 1e-6

    def test_exact_for_flat_profile(self, grid, rng):
        c = C.coordinates_from_profile(grid, 2.0, np.ones(grid.n_y))
        f = dealiased_rhs(grid, rng)
        phi = C.solve_delta_t(f, c)
        assert phi.meta["iterations"] == 1
        assert phi.meta["residual"] < 1e-13

    def test_converges_for_small_perturbation(self, rng):
        g = Grid(16, 128)
        c = perturbed(g, 5.0, 0.1)
        phi = C.solve_delta_t(dealiased_rhs(g, rng), c, tol=1e-10)
        assert phi.meta["residual"] < 1e-10
        assert phi.meta["iterations"] <= 30

    def test_contraction_scales_with_perturbation(self, rng):
        g = Grid(16, 128)
        f = dealiased_rhs(g, rng)
        q1 = C.solve_delta_t(f, perturbed(g, 5.0, 0.05), tol=1e-12).meta["contraction"]
        q2 = C.solve_delta_t(f, perturbed(g, 5.0, 0.1), tol=1e-12).meta["contraction"]
        assert 1.5 <= q2 / q1 <= 2.5

    def test_zero_rhs(self, grid):
        phi = C.solve_delta_t(SpectralField(grid, np.zeros(grid.shape, complex)), perturbed(grid, 2.0, 0.1))
        assert not np.any(phi.coeffs) and phi.meta["iterations"] == 0

    def test_large_perturbation_rejected(self, grid, rng):
        with pytest.raises(DivergenceError, match="exceeds 3/4"):
            C.solve_delta_t(dealiased_rhs(grid, rng), perturbed(grid, 2.0, 0.8))


class TestEnergy:
    def test_zero_data(self, grid, spec):
        st = initial_state(SpectralField(grid, np.zeros(grid.shape, complex)))
        st.t = 4.0
        E, comps = C.energy_E(st, C.build_coordinates(st), spec)
        assert E == 0 and all(v == 0 for v in comps.values())

    def test_components(self, small_run, spec):
        s = small_run[-1]
        c = C.build_coordinates(s)
        E, comps = C.energy_E(s, c, spec, epsilon=0.01)
        assert all(v >= 0 for v in comps.values())
        assert E == pytest.approx(comps["Af"] + comps["E_v"])
        assert comps["E_v"] == pytest.approx(comps["hbar"] + comps["dtv"] + comps["vprime"])
        # A >= 1 everywhere
        assert comps["Af"] >= 0.5 * l2_norm(C.resample_to_v(s, c)) ** 2


class TestCK:
    def test_unknown_kind(self, grid, spec):
        with pytest.raises(ConfigError, match="unknown CK kind"):
            C.ck_functional("CK_x", SpectralField(grid, np.zeros(grid.shape, complex)), spec, 2.0)

    def test_zero_data(self, grid, spec):
        f = SpectralField(grid, np.zeros(grid.shape, complex))
        c = C.coordinates_from_profile(grid, 2.0, np.ones(grid.n_y))
        for kind in C.CK_KINDS:
            target = f if kind.startswith("CK_") else c
            assert C.ck_functional(kind, target, spec, 2.0) == 0

    def test_nonnegative(self, small_run, spec):
        s = small_run[-1]
        c = C.build_coordinates(s)
        f = C.resample_to_v(s, c)
        for kind in C.CK_KINDS:
            target = f if kind.startswith("CK_") else c
            assert C.ck_functional(kind, target, spec, s.t) >= 0

    def test_weight_term_vanishes_late(self, grid, rng, spec):
        f = random_field(grid, rng)
        late = 2 * grid.eta_max + 1
        assert C.ck_functional("CK_w", f, spec, late) == 0
        assert C.ck_functional("CK_w", f, spec, 2.0) > 0

    def test_integrated_ck_converges(self, spec):
        g = Grid(16, 128)
        vals = []

        def cb(s):
            if s.t >= 1:
                c = C.build_coordinates(s)
                vals.append((s.t, C.ck_functional("CK_lambda", C.resample_to_v(s, c), spec, s.t)))

        run(gevrey_bump(g, 0.005), 0.05, 200.0, output_stride=20, callback=cb)
        t, v = np.array(vals).T
        i100 = np.trapezoid(v[t <= 100], t[t <= 100])
        i200 = np.trapezoid(v, t)
        assert abs(i200 - i100) <= 0.1 * i100
