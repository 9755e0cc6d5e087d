import numpy as np
import pytest
from hypothesis import given, strategies as st

from orrlab import littlewood_paley as LP
from orrlab.initial import random_field
from orrlab.spectral import SpectralField, inner, product


class TestProfiles:
    def test_psi_support(self):
        x = np.linspace(-2, 2, 4001)
        p = LP.psi(x)
        assert np.all(p[np.abs(x) <= 0.5] == 1)
        assert np.all(p[np.abs(x) >= 0.75] == 0)
        assert np.all((p >= 0) & (p <= 1))

    def test_psi_monotone_on_transition(self):
        x = np.linspace(0.5, 0.75, 1001)
        assert np.all(np.diff(LP.psi(x)) <= 0)

    def test_rho_support(self):
        x = np.linspace(0, 4, 8001)
        r = LP.rho(x)
        assert np.all(r[(x < 0.5) | (x > 1.5)] == 0)
        assert np.all(r[(x >= 0.75) & (x <= 1.0)] == 1)
        assert np.all(r >= 0)

    @given(st.floats(0.01, 100))
    def test_partition_of_unity(self, x):
        total = LP.psi(x) + sum(LP.rho(x / 2.0 ** j) for j in range(0, 12))
        assert total == pytest.approx(1.0, abs=1e-14)


class TestShells:
    def test_reconstruction(self, grid, rng):
        f = random_field(grid, rng, dealiased=False)
        acc = np.zeros_like(f.coeffs)
        for M in LP.shells(f):
            acc += LP.lp_project(f, M).coeffs
        assert np.max(np.abs(acc - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))

    def test_low_pass_telescopes(self, grid, rng):
        f = random_field(grid, rng)
        levels = LP.shells(f)
        for M in levels[1:]:
            direct = sum(LP.lp_project(f, L).coeffs for L in levels if L < M)
            assert np.allclose(LP.lp_low(f, M).coeffs, direct, atol=1e-14)

    def test_far_shells_orthogonal(self, unit_grid, rng):
        f = random_field(unit_grid, rng, dealiased=False)
        levels = LP.shells(f)
        for M in levels:
            for N in levels:
                if not 1 / 3 <= M / N <= 3:
                    assert inner(LP.lp_project(f, M), LP.lp_project(f, N)) == 0


class TestParaproduct:
    def test_parts_sum_to_product(self, grid, rng):
        f = random_field(grid, rng)
        g = random_field(grid, rng)
        parts = LP.paraproduct(f, g)
        total = parts[0].coeffs + parts[1].coeffs + parts[2].coeffs
        ref = product(f, g).coeffs
        assert np.max(np.abs(total - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_single_shell_high_factor(self, unit_grid, rng):
        # g lives where rho(|.|/16) = 1, so only its N=16 shell is nonzero
        c = np.zeros(unit_grid.shape, complex)
        c[unit_grid.index(1, 12)] = 0.7 + 0.2j
        c[unit_grid.index(-1, -12)] = 0.7 - 0.2j
        g = SpectralField(unit_grid, c)
        for M in LP.shells(g):
            if M != 16:
                assert not np.any(LP.lp_project(g, M).coeffs)
        f = random_field(unit_grid, rng)
        t_fg, _, _ = LP.paraproduct(f, g)
        ref = product(LP.lp_low(f, 2), g)
        assert np.allclose(t_fg.coeffs, ref.coeffs, atol=1e-14)
