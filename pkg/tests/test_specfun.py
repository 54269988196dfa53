import math

import mpmath
import numpy as np
import pytest

from symmorse.errors import ConvergenceError, DomainError
from symmorse.specfun import (
    Accuracy,
    kummer_m,
    kummer_m_dz,
    kummer_m_grid,
    origin_series,
    origin_series_grid,
    whittaker_m,
    whittaker_m_and_dz,
    whittaker_m_dz,
    whittaker_w,
    whittaker_w_dz,
)

REL = Accuracy().rel_tol


def _series_oracle(a, b, z, dps=60):
    """Plain term-by-term summation in high precision."""
    with mpmath.workdps(dps):
        a, b, z = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(z)
        total, term, n = mpmath.mpf(1), mpmath.mpf(1), 0
        while abs(term) > mpmath.mpf(10) ** (-dps):
            term *= (a + n) * z / ((b + n) * (n + 1))
            total += term
            n += 1
        return total


def rel_err(got, want):
    return abs(float((mpmath.mpf(got) - want) / want))


class TestAccuracy:
    def test_defaults(self):
        acc = Accuracy()
        assert (acc.rel_tol, acc.max_terms, acc.working_precision) == (1e-14, 10000, 34)

    @pytest.mark.parametrize(
        "kw", [{"rel_tol": 0}, {"rel_tol": 1.5}, {"max_terms": 5}, {"working_precision": 10}]
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            Accuracy(**kw)


class TestKummer:
    def test_zero_argument(self):
        assert kummer_m(0.3, 1.7, 0) == 1

    def test_exponential(self):
        assert rel_err(kummer_m(1, 1, 2), mpmath.e**2) < 1e-14

    def test_half_three_halves_against_series(self):
        want = _series_oracle(0.5, 1.5, -1)
        assert rel_err(kummer_m(0.5, 1.5, -1), want) < 1e-14
        # M(1/2, 3/2, -x^2) = sqrt(pi) erf(x) / (2x)
        assert abs(float(want) - math.sqrt(math.pi) * math.erf(1.0) / 2.0) < 1e-15

    def test_derivative_identity(self):
        a, b, z = 0.7, 2.3, 4.1
        with mpmath.workdps(40):
            fd = mpmath.diff(lambda s: mpmath.hyp1f1(a, b, s), z)
        assert rel_err(kummer_m_dz(a, b, z), fd) < 1e-13

    def test_terminating_series_allows_negative_b(self):
        # a = -2 terminates before b = -5 is reached
        val = kummer_m(-2, -5, 1.5)
        want = 1 + (-2) * 1.5 / (-5) + (-2) * (-1) * 1.5**2 / ((-5) * (-4) * 2)
        assert abs(float(val) - want) < 1e-14

    def test_forbidden_b(self):
        with pytest.raises(DomainError):
            kummer_m(0.5, -2, 1.0)

    def test_series_cap(self):
        with pytest.raises(ConvergenceError):
            kummer_m(0.5, 1.5, 200.0, Accuracy(max_terms=20))

    @pytest.mark.parametrize("z", np.linspace(-20, 20, 17))
    @pytest.mark.parametrize("a,b", [(0.3, 1.7), (-1.6, 3.71), (2.5, 0.4)])
    def test_kummer_transformation(self, a, b, z):
        lhs = mpmath.mpf(kummer_m(a, b, z))
        rhs = mpmath.exp(z) * mpmath.mpf(kummer_m(b - a, b, -z))
        assert abs(float(lhs - rhs)) <= 10 * REL * max(abs(float(lhs)), 1e-300) + 1e-300

    def test_grid_matches_scalar(self):
        z = np.linspace(0.0, 25.0, 41)
        vals, _ = kummer_m_grid(-0.8, 3.7, z)
        want = np.array([float(kummer_m(-0.8, 3.7, zi)) for zi in z])
        assert np.allclose(vals, want, rtol=1e-12, atol=0)


class TestWhittakerM:
    def test_sinh_identity(self):
        assert abs(float(whittaker_m(0, 0.5, 2)) - 2 * math.sinh(1)) < 1e-15

    def test_figure_parameters_against_mpmath(self):
        with mpmath.workdps(50):
            want = mpmath.whitm(3.24, 1.355765, 9.786)
        assert rel_err(whittaker_m(3.24, 1.355765, 9.786), want) < 1e-14

    def test_small_z_law(self):
        k, m, z = 1.8, 1.355765, 1e-8
        ratio = float(whittaker_m(k, m, z)) / z ** (m + 0.5)
        assert abs(ratio - 1) < 1e-7

    def test_forbidden_index(self):
        with pytest.raises(DomainError):
            whittaker_m(1.0, -1.0, 2.0)

    def test_and_dz_pair(self):
        m, dm = whittaker_m_and_dz(1.8, 1.3, 5.5)
        assert m == whittaker_m(1.8, 1.3, 5.5)
        assert dm == whittaker_m_dz(1.8, 1.3, 5.5)

    @pytest.mark.parametrize("mu", [0.37, 1.355765, 2.71])
    def test_wronskian(self, mu):
        kappa = 1.8
        for z in np.linspace(0.1, 30.0, 25):
            with mpmath.workdps(40):
                w = (
                    mpmath.mpf(whittaker_m(kappa, mu, z)) * mpmath.mpf(whittaker_m_dz(kappa, -mu, z))
                    - mpmath.mpf(whittaker_m_dz(kappa, mu, z)) * mpmath.mpf(whittaker_m(kappa, -mu, z))
                )
            assert abs(float(w) + 2 * mu) <= 10 * REL * 2 * mu


def _ode_residual(f, df, kappa, mu, z, step=1e-4):
    """w'' from central differences of the analytic w', compared with the ODE."""
    with mpmath.workdps(40):
        d2 = (mpmath.mpf(df(kappa, mu, z + step)) - mpmath.mpf(df(kappa, mu, z - step))) / (2 * step)
        w = mpmath.mpf(f(kappa, mu, z))
        res = d2 + (-0.25 + kappa / z + (0.25 - mu * mu) / z**2) * w
        # truncation of the difference quotient: step^2/6 * w''''
        return float(abs(res)), float(max(abs(w), 1))


@pytest.mark.parametrize("z", [0.5, 2.0, 7.3, 15.0])
@pytest.mark.parametrize(
    "f,df", [(whittaker_m, whittaker_m_dz), (whittaker_w, whittaker_w_dz)], ids=["M", "W"]
)
def test_ode_residual(f, df, z):
    res, scale = _ode_residual(f, df, 1.8, 1.268113, z)
    assert res <= 1e-10 * scale * max(1.0, 100 / z**2)


class TestWhittakerW:
    def test_exponential_identity(self):
        assert abs(float(whittaker_w(0, 0.5, 2)) - math.exp(-1)) < 1e-15

    def test_large_z_law(self):
        # first correction is (mu^2 - (kappa - 1/2)^2) / z, about -3e-4 here
        k, m, z = 1.8, 1.29, 80.0
        lead = float(whittaker_w(k, m, z)) * math.exp(z / 2) * z ** (-k)
        assert abs(lead - 1) < 1e-3

    def test_large_z_value(self):
        with mpmath.workdps(50):
            want = mpmath.whitw(1.8, 1.268113, 80.0)
        assert rel_err(whittaker_w(1.8, 1.268113, 80.0), want) < 1e-13

    def test_against_mpmath(self):
        with mpmath.workdps(50):
            want = mpmath.whitw(3.24, 1.268113, 9.786)
        assert rel_err(whittaker_w(3.24, 1.268113, 9.786), want) < 1e-14

    def test_integer_two_mu_fallback(self):
        with mpmath.workdps(50):
            want = mpmath.whitw(0.7, 1.0, 3.0)
        assert rel_err(whittaker_w(0.7, 1.0, 3.0), want) < 1e-12


class TestOriginSeries:
    # psi'' = (A u + B u^2 + k2) psi with u = exp(-alpha x); double-well numbers
    A, B, ALPHA, U0, K2 = -6.48, 3.24, 1.0, math.e, 1.3**2

    def _reference(self, x, psi0, dpsi0):
        f = lambda t, y: [y[1], (self.A * self.U0 * mpmath.exp(-t) + self.B * (self.U0 * mpmath.exp(-t)) ** 2 + self.K2) * y[0]]
        with mpmath.workdps(30):
            sol = mpmath.odefun(f, 0, [psi0, dpsi0])
            return [float(v) for v in sol(x)]

    @pytest.mark.parametrize("psi0,dpsi0", [(1, 0), (0, 1)])
    def test_against_ode_solution(self, psi0, dpsi0):
        coef = origin_series(self.A, self.B, self.ALPHA, self.U0, self.K2, psi0, dpsi0)
        xs = np.array([0.0, 0.3, 0.9, 1.5])
        vals, abs_vals, d = origin_series_grid(coef, np.expm1(-xs), True, self.ALPHA)
        for x, v, dv in zip(xs, vals, d):
            ref, dref = self._reference(x, psi0, dpsi0)
            assert v == pytest.approx(ref, rel=1e-12, abs=1e-14)
            assert dv == pytest.approx(dref, rel=1e-12, abs=1e-14)
        assert np.all(abs_vals >= np.abs(vals))

    def test_origin_values(self):
        coef = origin_series(self.A, self.B, self.ALPHA, self.U0, self.K2, 0.0, 1.0)
        v, _, d = origin_series_grid(coef, np.zeros(1), True, self.ALPHA)
        assert v[0] == 0.0 and d[0] == pytest.approx(1.0, rel=1e-15)

    def test_reach_validation(self):
        with pytest.raises(ValueError):
            origin_series(self.A, self.B, self.ALPHA, self.U0, self.K2, 1, 0, v_reach=1.0)
