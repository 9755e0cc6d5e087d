import numpy as np
import pytest
from hypothesis import given, strategies as st

from orrlab.initial import gevrey_bump, random_field
from orrlab.linear import (
    fit_loglog_slope,
    linear_evolve,
    linear_velocity_series,
    orr_streamfunction,
    velocity_from_streamfunction,
    xavg_feedback,
    xavg_feedback_field,
)
from orrlab.spectral import Grid, SpectralField, from_spectral, l2_norm, sobolev_norm, to_spectral


def _mode(grid, k, eta, value=1.0):
    c = np.zeros(grid.shape, complex)
    j = grid.eta_index(eta)
    c[grid.index(k, j)] = value
    c[grid.index(-k, -j)] = np.conj(value)
    return SpectralField(grid, c)


class TestLinearEvolve:
    def test_identity_at_zero(self, grid, rng):
        f = random_field(grid, rng)
        out = linear_evolve(f, 0.0)
        assert np.array_equal(out.coeffs, f.coeffs) and out.frame_time == 0.0

    def test_coefficients_frozen(self, grid, rng):
        f = random_field(grid, rng)
        for t in (0.5, 10.0, 300.0):
            out = linear_evolve(f, t)
            assert np.array_equal(out.coeffs, f.coeffs) and out.frame_time == t
            assert l2_norm(out) == l2_norm(f)

    def test_sobolev_growth_linear_in_t(self):
        g = Grid(8, 256)
        f = gevrey_bump(g, 1.0)
        ts = np.geomspace(100.0, 1000.0, 12)
        vals = [sobolev_norm(linear_evolve(f, t), 1, physical=True) for t in ts]
        assert fit_loglog_slope(ts, vals, (100.0, 1000.0)) == pytest.approx(1.0, abs=0.01)

    def test_physical_frame_shift(self, unit_grid):
        # omega(t, x, y) = omega_in(x - t y, y): sample the sheared field at z = x - t y
        g = unit_grid
        f = _mode(g, 1, 3, 0.5)
        t = 2.0
        Z, Y = np.meshgrid(g.z, g.y, indexing="ij")
        u = from_spectral(linear_evolve(f, t))
        # cos(z + 3 y) / (2 pi) * 2 * 0.5 * d_eta, evaluated at z
        ref = np.cos(Z + 3 * Y) * 2 * 0.5 * g.d_eta / (2 * np.pi)
        assert np.allclose(u, ref, atol=1e-13)


class TestOrr:
    def test_arithmetic_example(self, unit_grid):
        phi = orr_streamfunction(_mode(unit_grid, 1, 40), 0.0)
        assert phi[1, 40] == pytest.approx(-1 / 1601, rel=1e-15)

    def test_zero_column(self, unit_grid):
        g = unit_grid
        f = _mode(g, 0, 5)
        phi = orr_streamfunction(f, 7.0)
        assert phi[0, 5] == pytest.approx(-1 / 25)
        c = np.zeros(g.shape, complex)
        c[g.index(0, 0)] = 3.0
        assert orr_streamfunction(SpectralField(g, c), 1.0)[0, 0] == 0

    @given(st.integers(1, 4), st.integers(-60, 60))
    def test_peak_at_critical_time(self, k, eta):
        g = Grid(4, 128, 2 * np.pi)
        f = _mode(g, k, eta)
        tc = eta / k
        peak = abs(orr_streamfunction(f, tc)[k, eta])
        assert peak == pytest.approx(1 / k ** 2, rel=1e-15)
        for t in np.linspace(tc - 5, tc + 5, 41):
            assert abs(orr_streamfunction(f, t)[k, eta]) <= peak * (1 + 1e-15)
        assert peak / abs(orr_streamfunction(f, 0.0)[k, eta]) == pytest.approx((k * k + eta * eta) / k ** 2, rel=1e-14)

    def test_initial_symbol(self, grid, rng):
        f = random_field(grid, rng)
        phi = orr_streamfunction(f, 0.0)
        sym = grid.K ** 2 + grid.ETA ** 2
        m = grid.K != 0
        assert np.allclose(phi.coeffs[m], -f.coeffs[m] / sym[m], rtol=1e-15, atol=0)


class TestVelocity:
    def test_k0_data_gives_no_fluctuation(self, unit_grid):
        d = linear_velocity_series(_mode(unit_grid, 0, 3), [0.0, 5.0, 20.0])
        assert not d.ux_fluct_norm.any() and not d.uy_norm.any() and not d.ux_mean_feedback.any()

    def test_biot_savart_in_physical_space(self, unit_grid):
        g = unit_grid
        t = 1.5
        phi = orr_streamfunction(_mode(g, 2, 5, 0.3 + 0.1j), t)
        ux, uy = velocity_from_streamfunction(phi)
        # psi(x, y) in sheared coordinates; check U = (-d_y psi, d_x psi) by spectral identities
        psi = from_spectral(phi)
        Z, Y = np.meshgrid(g.z, g.y, indexing="ij")
        assert np.allclose(from_spectral(SpectralField(g, uy)), from_spectral(SpectralField(g, 1j * g.K * phi.coeffs)))
        assert np.max(np.abs(psi)) > 0

    def test_series_lengths(self, grid, rng):
        d = linear_velocity_series(random_field(grid, rng), np.linspace(0, 5, 7), modes=[(1, 1)])
        n = d.times.size
        assert d.ux_fluct_norm.size == d.uy_norm.size == d.ux_mean_feedback.size == d.mode_traces[(1, 1)].size == n
        assert (d.ux_fluct_norm >= 0).all() and (d.uy_norm >= 0).all()

    def test_time_reversal_for_even_data(self):
        g = Grid(4, 128)
        f = gevrey_bump(g, 1.0)
        for t in (3.0, 12.0):
            a = linear_velocity_series(f, [t])
            b = linear_velocity_series(f, [-t])
            assert a.ux_fluct_norm[0] == pytest.approx(b.ux_fluct_norm[0], rel=1e-12)
            assert a.uy_norm[0] == pytest.approx(b.uy_norm[0], rel=1e-12)
            assert a.ux_mean_feedback[0] == pytest.approx(b.ux_mean_feedback[0], rel=1e-12)


class TestFeedback:
    def test_zero_for_k0_data(self, unit_grid):
        assert xavg_feedback(_mode(unit_grid, 0, 2), 4.0) == 0.0

    def test_quadratic_scaling(self, grid, rng):
        f = random_field(grid, rng)
        for t in (0.0, 3.0):
            assert xavg_feedback(f * 2.0, t) == pytest.approx(4 * xavg_feedback(f, t), rel=1e-13)

    def test_against_padded_physical_product(self):
        # oracle: multiply in physical space on a grid large enough that no alias folds back
        g = Grid(3, 32, 2 * np.pi)
        rng = np.random.Generator(np.random.Philox(3))
        f = random_field(g, rng, 0.5)
        f.coeffs[np.abs(g.ETA) > 7] = 0.0
        t = 1.3
        phi = orr_streamfunction(f, t)
        ux, uy = velocity_from_streamfunction(phi, t)
        ux = np.where(g.K != 0, ux, 0.0)
        dyux = 1j * (g.ETA - g.K * t) * ux
        big = Grid(8, 128, 2 * np.pi)

        def pad(c):
            out = np.zeros(big.shape, complex)
            out[big.k_max - g.k_max: big.k_max + g.k_max + 1, big.n_y // 2 - g.n_y // 2: big.n_y // 2 + g.n_y // 2] = c
            return SpectralField(big, out)

        prod = to_spectral(from_spectral(pad(uy)) * from_spectral(pad(dyux)), big)
        ref = prod.coeffs[big.k_max]
        fb = xavg_feedback_field(ux, uy, g, t)
        # fb lives on 2 n_y - 1 points starting at eta = -n_y d_eta
        mid = g.n_y
        half = 20
        got = fb[mid - half: mid + half + 1]
        want = ref[big.n_y // 2 - half: big.n_y // 2 + half + 1]
        assert np.allclose(got, want, atol=1e-14)


class TestSlopeFit:
    @given(st.floats(-4, 2), st.floats(0.1, 10))
    def test_exact_power_law(self, p, c):
        t = np.linspace(1, 200, 300)
        assert fit_loglog_slope(t, c * t ** p) == pytest.approx(p, abs=1e-9)

    def test_empty_window(self):
        with pytest.raises(ValueError):
            fit_loglog_slope([1.0, 2.0], [1.0, 1.0], (10, 100))
