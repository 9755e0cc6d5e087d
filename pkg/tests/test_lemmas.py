import math

import mpmath
import numpy as np
import pytest

from orrlab import lemmas as L
from orrlab.errors import ConfigError
from orrlab.weights import MultiplierSpec

SMALL = L.SampleSpec(n=300, field_k_max=3, field_n_y=64)


class TestHarness:
    @pytest.mark.parametrize("lemma_id", L.LEMMA_IDS)
    def test_every_check_passes(self, lemma_id):
        rep = L.lemma_harness(lemma_id, SMALL, seed=3)
        assert rep.passed, rep.summary()
        assert rep.violations == 0
        assert not rep.vacuous

    def test_unknown_id(self):
        with pytest.raises(ConfigError, match="unknown lemma id"):
            L.lemma_harness("nope")

    def test_deterministic(self):
        a = L.lemma_harness("Jswap", SMALL, seed=11)
        b = L.lemma_harness("Jswap", SMALL, seed=11)
        c = L.lemma_harness("Jswap", SMALL, seed=12)
        assert a.C_emp == b.C_emp and a.n_admissible == b.n_admissible
        assert a.C_emp != c.C_emp

    def test_vacuous_report(self):
        rep = L._report("x", np.full(10, np.nan), np.ones(10, bool), 5)
        assert rep.vacuous and not rep.passed and rep.n_admissible == 0
        assert "vacuous" in rep.summary()

    def test_stability_rule(self):
        ratios = np.r_[np.full(5, 0.5), np.full(5, 3.0)]
        rep = L._report("x", ratios, np.ones(10, bool), 5)
        # half sample floored at 1, full sample 3 > 2 x 1
        assert rep.C_emp == 3.0 and rep.C_emp_half == 0.5 and not rep.stable

    def test_two_sided_constant(self):
        rep = L._report("x", np.array([0.25, 2.0, 0.5, 1.0]), np.ones(4, bool), 2, two_sided=True)
        assert rep.C_emp == 4.0
        assert rep.details["bracket"] == (0.25, 2.0)

    def test_sample_spec_validation(self):
        with pytest.raises(ConfigError):
            L.SampleSpec(n=0)
        with pytest.raises(ConfigError):
            L.SampleSpec(eta_min=10, eta_max=5)


class TestBasicRatio:
    @pytest.mark.parametrize("N", [10, 50, 200])
    def test_against_exact_factorials(self, N):
        spec = MultiplierSpec()
        eta = N * N
        with mpmath.workdps(40):
            r = (mpmath.mpf(eta) ** N / mpmath.factorial(N) ** 2) ** spec.c
            r *= mpmath.mpf(eta) ** (spec.mu / 8) * mpmath.exp(-spec.mu * mpmath.sqrt(eta) / 2)
        assert L.basic_ratio(float(eta), spec) == pytest.approx(float(r), rel=1e-9)

    def test_limit(self):
        spec = MultiplierSpec()
        limit = (2 * math.pi) ** (-spec.c)
        # Stirling: r = limit (1 + 1/(12 N))^(-2c) + ...
        assert L.basic_ratio(4.0e4, spec) == pytest.approx(limit * (1 + 1 / 2400) ** (-2 * spec.c), rel=1e-5)
        rep = L.lemma_harness("basic")
        assert rep.passed
        assert rep.details["limit"] == pytest.approx(limit)
