import numpy as np
import pytest

from orrlab.errors import ConfigError
from orrlab.initial import check_support, custom_modes, gevrey_bump, random_field, support_width, two_mode_echo
from orrlab.spectral import Grid, from_spectral


class TestInitialData:
    def test_gevrey_bump_peak_and_mean(self):
        g = Grid(4, 256)
        f = gevrey_bump(g, 0.01)
        u = from_spectral(f)
        assert np.max(np.abs(u)) == pytest.approx(0.01, rel=1e-6)
        assert f[0, 0] == 0 and f.hermitian_defect() < 1e-15

    def test_support_rule(self):
        g = Grid(4, 256)
        check_support(gevrey_bump(g, 0.01))
        wide = gevrey_bump(g, 0.01, width=0.3)  # envelope exp(-0.045 y^2) spans the window
        assert support_width(wide) > g.L_y / 4
        with pytest.raises(ConfigError, match="support"):
            check_support(wide)

    def test_echo_seed_needs_grid_eta(self, unit_grid):
        f = two_mode_echo(unit_grid, 0.01, 20.0)
        assert abs(f[1, 20]) > 0 and abs(f[1, 0]) > 0
        with pytest.raises(ConfigError):
            two_mode_echo(unit_grid, 0.01, 20.5)

    def test_custom_modes(self, unit_grid):
        f = custom_modes(unit_grid, [(2, 3.0, 1.0, -0.5)])
        assert f[2, 3] == 1 - 0.5j and f[-2, -3] == 1 + 0.5j
        with pytest.raises(ConfigError):
            custom_modes(unit_grid, [(0, 0.0, 1.0, 0.0)])

    def test_random_field_reproducible(self, grid):
        a = random_field(grid, np.random.Generator(np.random.Philox(5)))
        b = random_field(grid, np.random.Generator(np.random.Philox(5)))
        assert np.array_equal(a.coeffs, b.coeffs)
        assert a.hermitian_defect() == 0
