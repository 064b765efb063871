"""Scalar special functions: gamma, Macdonald K, the contact-rate kernel.

Golden values were computed with mpmath / scipy quadrature and frozen; the
tolerances reflect the implementations' verified accuracy, not wishful
rounding.
"""

import math
import warnings

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deltagas import specfun
from deltagas.specfun import (
    ContactRateTable,
    DomainError,
    QuadratureSpec,
    ToleranceError,
    UnderflowWarning,
    adaptive_quad,
    gamma_fn,
    log_gamma,
    k_hat,
    macdonald_k,
    s_beta,
    s_beta_time_integral,
)

QUAD = QuadratureSpec()


class TestGamma:
    def test_golden_values(self):
        npt.assert_allclose(gamma_fn(0.5), math.sqrt(math.pi), rtol=1e-13)
        npt.assert_allclose(gamma_fn(1.0), 1.0, rtol=1e-13)
        npt.assert_allclose(gamma_fn(5.0), 24.0, rtol=1e-13)
        npt.assert_allclose(gamma_fn(0.25), 3.6256099082219083, rtol=1e-13)

    def test_log_gamma_against_stdlib(self):
        # math.lgamma is an independent implementation
        for u in np.geomspace(1e-6, 170.0, 200):
            npt.assert_allclose(log_gamma(u), math.lgamma(u), rtol=1e-12,
                                atol=1e-13)

    @given(st.floats(min_value=1e-4, max_value=84.0))
    @settings(max_examples=200, deadline=None)
    def test_recurrence(self, u):
        npt.assert_allclose(gamma_fn(u + 1.0), u * gamma_fn(u), rtol=1e-12)

    def test_domain_and_overflow(self):
        with pytest.raises(DomainError):
            gamma_fn(0.0)
        with pytest.raises(DomainError):
            log_gamma(-3.0)
        with pytest.raises(OverflowError):
            gamma_fn(171.0)
        assert math.isfinite(gamma_fn(170.0))

    def test_array_shape(self):
        out = log_gamma(np.array([0.3, 1.0, 7.5]))
        assert out.shape == (3,)


class TestMacdonald:
    def test_golden_at_one(self):
        # mpmath besselk
        npt.assert_allclose(macdonald_k(0, 1.0), 0.42102443824070834,
                            rtol=1e-13)
        npt.assert_allclose(macdonald_k(1, 1.0), 0.60190723019723458,
                            rtol=1e-13)

    def test_against_mpmath_grid(self):
        mp = pytest.importorskip("mpmath")
        xs = np.geomspace(1e-4, 600.0, 60)
        for nu in (0, 1):
            ref = np.array([float(mp.besselk(nu, mp.mpf(float(x))) )
                            for x in xs])
            npt.assert_allclose(macdonald_k(nu, xs), ref, rtol=5e-13)

    def test_branch_seam(self):
        lo = macdonald_k(0, 2.0 - 1e-12)
        hi = macdonald_k(0, 2.0 + 1e-12)
        assert abs(lo / hi - 1.0) < 1e-10

    def test_k_hat(self):
        x = 3.7
        npt.assert_allclose(k_hat(1, x), x * macdonald_k(1, x), rtol=1e-14)
        npt.assert_allclose(k_hat(0, x), macdonald_k(0, x), rtol=1e-14)
        # K1_hat stays bounded toward the origin (x K1 -> 1)
        npt.assert_allclose(k_hat(1, 1e-8), 1.0, rtol=1e-8)

    @given(st.floats(min_value=1e-3, max_value=400.0),
           st.floats(min_value=1.001, max_value=1.5))
    @settings(max_examples=100, deadline=None)
    def test_strictly_decreasing(self, x, factor):
        assert macdonald_k(0, x * factor) < macdonald_k(0, x)

    def test_underflow_warning(self):
        with pytest.warns(UnderflowWarning):
            val = macdonald_k(0, 701.0)
        assert val >= 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            macdonald_k(0, 0.0)
        with pytest.raises(DomainError):
            macdonald_k(2, 1.0)
        with pytest.raises(DomainError):
            macdonald_k(0, np.inf)


class TestAdaptiveQuad:
    def test_polynomial(self):
        val = adaptive_quad(lambda x: x * x, 0.0, 1.0, QUAD)
        npt.assert_allclose(val, 1.0 / 3.0, rtol=1e-12)

    def test_exponential(self):
        val = adaptive_quad(np.exp, -1.0, 2.0, QUAD)
        npt.assert_allclose(val, math.e ** 2 - math.e ** -1, rtol=1e-12)

    def test_narrow_spike_with_seed(self):
        # without the seed hint this spike hides from the coarse pass
        f = lambda x: np.exp(-((x - 0.3125) / 1e-3) ** 2)
        val = adaptive_quad(f, 0.0, 1.0, QUAD, seeds=(0.3125,))
        npt.assert_allclose(val, 1e-3 * math.sqrt(math.pi), rtol=1e-9)

    def test_budget_exhaustion(self):
        tight = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14,
                               max_subdivisions=2)
        with pytest.raises(ToleranceError):
            adaptive_quad(lambda x: np.abs(np.sin(50.0 / (x + 0.01))),
                          0.0, 1.0, tight)


class TestContactRate:
    def test_laplace_transform(self):
        # int_0^inf exp(-lam t) s_beta(t) dt = 4 pi / log(lam / beta)
        for lam in (2.0, 4.0, 10.0):
            head = s_beta_time_integral(1.0, 1e-9, QUAD)
            tail = adaptive_quad(
                lambda ts: np.array([
                    math.exp(-lam * x) * s_beta(1.0, x, QUAD)
                    for x in np.atleast_1d(ts)
                ]),
                1e-9, 60.0 / lam,
                QuadratureSpec(abs_tol=1e-8, rel_tol=1e-8),
                seeds=(0.01 / lam, 0.1 / lam, 1.0 / lam),
            )
            target = 4.0 * math.pi / math.log(lam)
            assert abs((head + tail) / target - 1.0) < 1e-4

    def test_time_integral_golden(self):
        # 4 pi * int_0^inf du / Gamma(u + 1) at beta * T = 1
        npt.assert_allclose(s_beta_time_integral(1.0, 1.0, QUAD),
                            28.482112633990415, rtol=1e-9)

    def test_time_integral_scaling(self):
        a = s_beta_time_integral(4.0, 0.5, QUAD)
        b = s_beta_time_integral(1.0, 2.0, QUAD)
        npt.assert_allclose(a, b, rtol=1e-9)

    @given(st.floats(min_value=0.05, max_value=8.0),
           st.floats(min_value=0.05, max_value=8.0))
    @settings(max_examples=30, deadline=None)
    def test_scaling_identity(self, beta, tau):
        # tau * s_beta(tau) is a function of y = beta * tau alone
        y = beta * tau
        lhs = tau * s_beta(beta, tau, QUAD)
        rhs = y * s_beta(1.0, y, QUAD)
        npt.assert_allclose(lhs, rhs, rtol=1e-8)

    def test_tau_floor_clamp(self):
        assert s_beta(1.0, 1e-15, QUAD) == s_beta(1.0, specfun.TAU_FLOOR,
                                                  QUAD)

    def test_domain(self):
        with pytest.raises(DomainError):
            s_beta(-1.0, 0.5, QUAD)
        with pytest.raises(DomainError):
            s_beta_time_integral(1.0, -0.5, QUAD)


class TestContactRateTable:
    def test_matches_direct_rate(self):
        # s_beta clamps tau at TAU_FLOOR, so compare against it only above
        # the clamp; the deep range is checked against the raw integral
        table = ContactRateTable(4.0)
        for y in np.geomspace(1e-10, 3.9, 40):
            direct = y * s_beta(1.0, y, QUAD)
            from_table = table.rate_from_log(math.log(y))
            npt.assert_allclose(from_table, direct, rtol=5e-9)
        for log_y in (-36.0, -34.0, -30.0):
            raw = specfun._rate_u_integral(log_y, 0.0, QUAD)
            npt.assert_allclose(table.rate_from_log(log_y), raw, rtol=5e-9)

    def test_watson_seam_continuity(self):
        table = ContactRateTable(2.0)
        eps = 1e-9
        above = table.log_rate_from_log(table.log_lo + eps)
        below = table.log_rate_from_log(table.log_lo - eps)
        assert abs(above - below) < 1e-8

    def test_deep_tail_finite(self):
        table = ContactRateTable(2.0)
        # far below float64 underflow in y itself
        val = table.log_rate_from_log(-5000.0)
        assert math.isfinite(val)
        assert val < table.log_rate_from_log(-100.0)

    def test_out_of_range(self):
        table = ContactRateTable(2.0)
        with pytest.raises(DomainError):
            table.rate_from_log(math.log(2.0) + 1e-3)
