"""Special-function tests against independent oracles.

The Bessel oracle is the integral representation K_n(r) = ∫ exp(-r cosh t)
cosh(nt) dt evaluated with scipy's adaptive quadrature (mpmath covers the
deep-underflow range where the integrand cannot be represented); the
Lambert oracle is plain bisection on w e^w = x.  The shipped implementation
is never used to check itself.
"""

import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from skyrm import _accel
from skyrm.specfun import (
    EULER_GAMMA,
    Branch,
    bessel_k,
    euler_gamma,
    lambert_w,
    mu_integral,
)


def bessel_k_quadrature(order, r):
    """Oracle: quadrature of the integral representation."""
    val, _ = integrate.quad(
        lambda t: math.exp(-r * math.cosh(t)) * math.cosh(order * t),
        0.0,
        40.0,
        epsabs=1e-300,
        epsrel=1e-13,
        limit=400,
    )
    return val


def lambert_w_bisect(branch, x):
    """Oracle: bisection on w e^w - x over the requested branch interval."""
    f = lambda w: w * math.exp(w) - x
    if branch is Branch.MINUS_ONE:
        lo, hi = -800.0, -1.0  # f(lo) > 0 > f(hi) is not guaranteed; W is monotone here
    else:
        lo, hi = -1.0, 800.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if branch is Branch.MINUS_ONE:
            # w e^w decreases in w on (-inf, -1]
            if f(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        else:
            if f(mid) < 0.0:
                lo = mid
            else:
                hi = mid
    return 0.5 * (lo + hi)


class TestBesselK:
    def test_frozen_reference_values(self):
        # Values frozen from the quadrature oracle (and confirmed by mpmath).
        assert_allclose(bessel_k(0, 1.0), 0.4210244382407083, rtol=1e-13)
        assert_allclose(bessel_k(1, 1.0), 0.6019072301972346, rtol=1e-13)

    def test_quadrature_oracle_moderate_range(self):
        for r in np.logspace(-8, np.log10(30.0), 40):
            for order in (0, 1, 2):
                assert_allclose(
                    bessel_k(order, r),
                    bessel_k_quadrature(order, r),
                    rtol=1e-12,
                    err_msg=f"order={order}, r={r}",
                )

    def test_mpmath_oracle_large_range(self):
        mpmath.mp.dps = 40
        for r in np.logspace(np.log10(30.0), np.log10(700.0), 25):
            for order in (0, 1, 2):
                ref = float(mpmath.besselk(order, mpmath.mpf(float(r))))
                assert_allclose(bessel_k(order, r), ref, rtol=1e-12)

    def test_underflow_returns_zero(self):
        assert bessel_k(0, 800.0) == 0.0
        assert bessel_k(1, 800.0) == 0.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            bessel_k(0, 0.0)
        with pytest.raises(ValueError):
            bessel_k(1, -1.0)
        with pytest.raises(ValueError):
            bessel_k(3, 1.0)
        with pytest.raises(ValueError):
            bessel_k(0, np.array([1.0, np.nan]))

    def test_array_matches_scalar(self):
        r = np.logspace(-6, 2, 57).reshape(3, 19)
        arr = bessel_k(1, r)
        assert arr.shape == r.shape
        flat = [bessel_k(1, float(x)) for x in r.ravel()]
        assert_allclose(arr.ravel(), flat, rtol=1e-15)

    def test_backends_agree(self):
        r = np.logspace(-8, 2.8, 500)
        try:
            _accel.force_backend("numpy")
            a = bessel_k(1, r)
            if not _accel.HAS_NUMBA:
                pytest.skip("numba unavailable")
            _accel.force_backend("numba")
            b = bessel_k(1, r)
        finally:
            _accel.force_backend(None)
        assert_allclose(a, b, rtol=2e-15)

    def test_small_r_log_asymptotics(self):
        # K0(r) = |log r| + log 2 - gamma + O(r^2 |log r|)
        for r in (1e-6, 1e-4, 1e-3):
            lead = -math.log(r) + math.log(2.0) - EULER_GAMMA
            assert abs(bessel_k(0, r) - lead) < 10 * r**2 * abs(math.log(r))
            # K1(r) = 1/r + O(r |log r|)
            assert abs(bessel_k(1, r) - 1.0 / r) < 10 * r * abs(math.log(r))

    def test_large_r_exponential_asymptotics(self):
        for r in (20.0, 50.0, 200.0):
            lead = math.sqrt(math.pi / (2 * r)) * math.exp(-r)
            for order in (0, 1):
                assert abs(bessel_k(order, r) / lead - 1.0) < 1.0 / r

    def test_k1_monotone_envelope(self):
        # r K1(r) decreases: K1(r) < r0 K1(r0) / r for r > r0
        r = np.logspace(-3, 2, 200)
        v = r * bessel_k(1, r)
        assert np.all(np.diff(v) < 0)

    def test_k2_recurrence(self):
        r = np.logspace(-4, 2, 100)
        assert_allclose(bessel_k(2, r), bessel_k(0, r) + 2 * bessel_k(1, r) / r, rtol=1e-14)

    def test_k1_satisfies_modified_bessel_ode(self):
        # r^2 K1'' + r K1' - (r^2 + 1) K1 = 0, derivatives by central differences
        for r in (0.5, 1.0, 3.0, 10.0):
            h = 1e-5 * r
            km, k0_, kp = bessel_k(1, r - h), bessel_k(1, r), bessel_k(1, r + h)
            d1 = (kp - km) / (2 * h)
            d2 = (kp - 2 * k0_ + km) / h**2
            resid = r**2 * d2 + r * d1 - (r**2 + 1) * k0_
            assert abs(resid) < 1e-5 * (r**2 + 1) * k0_

    def test_tail_integral_antiderivative(self):
        # int_a^inf s K1(s)^2 ds = (a^2/2)(K0 K2 - K1^2)(a)
        for a in (0.5, 1.0, 2.0, 5.0):
            quad_val, _ = integrate.quad(
                lambda s: s * bessel_k_quadrature(1, s) ** 2, a, 60.0, epsabs=1e-13, limit=300
            )
            closed = 0.5 * a**2 * (bessel_k(0, a) * bessel_k(2, a) - bessel_k(1, a) ** 2)
            assert_allclose(closed, quad_val, rtol=1e-9)


class TestLambertW:
    def test_frozen_value(self):
        assert_allclose(lambert_w(Branch.MINUS_ONE, -0.1), -3.577152063957297, rtol=1e-13)

    def test_branch_point(self):
        assert lambert_w(Branch.MINUS_ONE, -1.0 / math.e) == -1.0
        assert lambert_w(Branch.PRINCIPAL, -1.0 / math.e) == -1.0

    def test_residuals_minus_one_branch(self):
        for x in -np.logspace(np.log10(1.0 / math.e - 1e-12), -300, 80):
            w = lambert_w(Branch.MINUS_ONE, float(x))
            assert w <= -1.0
            assert abs(w * math.exp(w) - x) <= 1e-13 * max(abs(x), 1e-300)

    def test_residuals_principal_branch(self):
        xs = np.concatenate([-np.linspace(1e-4, 1.0 / math.e - 1e-9, 20), np.logspace(-3, 3, 20)])
        for x in xs:
            w = lambert_w(Branch.PRINCIPAL, float(x))
            assert w >= -1.0
            assert abs(w * math.exp(w) - x) <= 1e-13 * max(abs(x), 1.0)

    def test_bisection_oracle(self):
        for x in (-0.35, -0.2, -0.05, -1e-3):
            assert_allclose(
                lambert_w(Branch.MINUS_ONE, x), lambert_w_bisect(Branch.MINUS_ONE, x), rtol=1e-11
            )
            assert_allclose(
                lambert_w(Branch.PRINCIPAL, x), lambert_w_bisect(Branch.PRINCIPAL, x), rtol=1e-11
            )

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(7)
        for w in -1.0 - 5.0 * rng.random(50):  # w <= -1 maps to MINUS_ONE
            x = w * math.exp(w)
            assert_allclose(lambert_w(Branch.MINUS_ONE, x), w, rtol=1e-12)
        for w in -1.0 + 4.0 * rng.random(50):  # w >= -1 maps to PRINCIPAL
            x = w * math.exp(w)
            assert_allclose(lambert_w(Branch.PRINCIPAL, x), w, rtol=1e-12, atol=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            lambert_w(Branch.PRINCIPAL, -0.4)
        with pytest.raises(ValueError):
            lambert_w(Branch.MINUS_ONE, 0.1)
        with pytest.raises(ValueError):
            lambert_w(Branch.MINUS_ONE, -0.5)

    def test_int_branch_aliases(self):
        assert lambert_w(0, 1.0) == lambert_w(Branch.PRINCIPAL, 1.0)
        assert lambert_w(-1, -0.1) == lambert_w(Branch.MINUS_ONE, -0.1)


class TestEulerGamma:
    def test_value(self):
        assert euler_gamma() == 0.5772156649015329
        assert euler_gamma() == np.euler_gamma


class TestMuIntegral:
    @staticmethod
    def simpson_oracle(mu):
        # Fixed-grid Simpson on (0, 60], fine enough for ~1e-8 absolute.
        r = np.linspace(1e-9, 60.0, 400001)
        from scipy.special import k1  # independent of the shipped Bessel

        f = mu * r**3 / (1.0 + mu * r**2) * k1(r) ** 2
        return integrate.simpson(f, x=r)

    @pytest.mark.parametrize("mu", [1.0, 100.0, 1e4])
    def test_simpson_oracle(self, mu):
        assert_allclose(mu_integral(mu), self.simpson_oracle(mu), atol=1e-7, rtol=0)

    def test_large_mu_lower_bound(self):
        # exceeds (1/2) log(4 mu / e^{2 gamma + 1}) by a vanishing correction
        for mu in (1e4, 1e6):
            bound = 0.5 * math.log(4 * mu / math.exp(2 * EULER_GAMMA + 1))
            diff = mu_integral(mu) - bound
            assert 0.0 < diff < math.log(mu) ** 2 / mu

    def test_domain(self):
        with pytest.raises(ValueError):
            mu_integral(0.0)
