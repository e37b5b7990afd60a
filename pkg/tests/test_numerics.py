import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdrkit.errors import DomainError, EvaluationError
from sdrkit.numerics import (
    BESSEL_J_SWITCH_X,
    ScalarFn,
    bessel_j,
    bessel_j_series,
    bessel_k,
    check_complete_monotone,
    gamma_fn,
)


def _series_oracle(alpha, x, terms=40):
    """Independent 40-term summation of the J_alpha power series in 40 digits."""
    with mpmath.workdps(40):
        a, h = mpmath.mpf(alpha), mpmath.mpf(x) / 2
        s = mpmath.fsum(
            (-1) ** m / (mpmath.factorial(m) * mpmath.gamma(m + a + 1)) * h ** (2 * m + a)
            for m in range(terms)
        )
        return float(s)


class TestGamma:
    @pytest.mark.parametrize("a, expected", [(1, 1.0), (5, 24.0), (0.5, math.sqrt(math.pi))])
    def test_values(self, a, expected):
        assert gamma_fn(a) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("a", [0.5, 1.3, 4.7])
    def test_recurrence(self, a):
        assert gamma_fn(a + 1) == pytest.approx(a * gamma_fn(a), rel=1e-10)

    @pytest.mark.parametrize("a", [0, -1, -0.5])
    def test_domain(self, a):
        with pytest.raises(DomainError):
            gamma_fn(a)


class TestBesselJ:
    def test_at_zero(self):
        assert bessel_j(0, 0) == 1.0
        assert bessel_j(1.5, 0) == 0.0

    def test_half_order_closed_form(self):
        x = math.pi / 2
        assert bessel_j(0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sin(x), abs=1e-12)
        assert bessel_j(0.5, x) == pytest.approx(0.6366197, abs=1e-7)
        assert _series_oracle(0.5, x, terms=20) == pytest.approx(0.6366197, abs=1e-7)

    def test_first_zero_of_j0(self):
        lo, hi = 2.0, 3.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if bessel_j_series(0, lo) * bessel_j_series(0, mid) <= 0:
                hi = mid
            else:
                lo = mid
        assert 0.5 * (lo + hi) == pytest.approx(2.404826, abs=1e-6)
        assert abs(bessel_j(0, 2.404826)) < 1e-6

    def test_against_independent_summation(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            alpha = rng.uniform(-0.5, 6.0)
            x = rng.uniform(0.01, 20.0)
            assert bessel_j(alpha, x) == pytest.approx(_series_oracle(alpha, x), abs=1e-8)

    def test_order_minus_one(self):
        # J_{-1} = -J_1
        assert bessel_j(-1, 1.7) == pytest.approx(-bessel_j(1, 1.7), abs=1e-14)

    @pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 3.5])
    def test_large_argument_branch_matches_series(self, alpha):
        for x in np.linspace(BESSEL_J_SWITCH_X, BESSEL_J_SWITCH_X + 10, 11):
            assert bessel_j(alpha, x + 1e-9) == pytest.approx(bessel_j_series(alpha, x + 1e-9), abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            bessel_j(0, -1.0)
        with pytest.raises(DomainError):
            bessel_j(-0.5, 0.0)


class TestBesselK:
    @pytest.mark.parametrize("x", [1.0, 2.0])
    def test_half_order_closed_form(self, x):
        expected = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
        assert bessel_k(0.5, x) == pytest.approx(expected, rel=1e-10)

    def test_reference_value(self):
        assert bessel_k(0.5, 1.0) == pytest.approx(0.4610685, abs=1e-7)

    @pytest.mark.parametrize("x", [0.1, 1.0, 5.0])
    def test_normalized_identity(self, x):
        assert bessel_k(0.5, x) * math.sqrt(2 * x / math.pi) * math.exp(x) == pytest.approx(1.0, abs=1e-8)

    @given(nu=st.floats(0.05, 10), x=st.floats(1e-6, 50))
    @settings(max_examples=60, deadline=None)
    def test_positive(self, nu, x):
        assert bessel_k(nu, x) > 0

    def test_domain(self):
        with pytest.raises(DomainError):
            bessel_k(0.5, 0.0)


class TestCompleteMonotone:
    grid = np.linspace(0.1, 10, 50)

    def test_exponential_passes(self):
        rep = check_complete_monotone(lambda t: math.exp(-t), self.grid, max_order=6)
        assert rep.passed and rep.violations == [] and rep.max_order_checked == 6

    def test_rational_passes(self):
        assert check_complete_monotone(lambda t: 1 / (1 + t), self.grid, max_order=6).passed

    def test_sine_fails_at_order_zero(self):
        rep = check_complete_monotone(math.sin, self.grid, max_order=2)
        assert not rep.passed
        assert any(r == 0 and math.sin(x) < 0 for r, x, _ in rep.violations)

    def test_cosine_fails(self):
        assert not check_complete_monotone(math.cos, self.grid, max_order=6).passed

    def test_nonfinite_value_reports_point(self):
        with pytest.raises(EvaluationError) as info:
            check_complete_monotone(lambda t: math.inf if t > 5 else 1.0, self.grid)
        assert info.value.point > 5

    def test_grid_outside_domain(self):
        with pytest.raises(DomainError):
            check_complete_monotone(ScalarFn(math.exp, lower=1.0), [0.5])

    def test_rejects_order_zero(self):
        with pytest.raises(DomainError):
            check_complete_monotone(math.exp, self.grid, max_order=0)
