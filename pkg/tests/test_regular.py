import mpmath
import numpy as np
import pytest

from symmorse.errors import GuardError, PreconditionError
from symmorse.oracle import integrate_outward
from symmorse.potentials import MorseParams, v_single_well, v_sym
from symmorse.regular import (
    EnergyTrial,
    Parity,
    SolverConfig,
    build_regular,
    evaluate,
    node_count,
    tail_functional,
    to_whittaker_coordinate,
)

K_EVEN = 1.355765
K_ODD = 1.268113


def wave(p, k, parity, **kw):
    return build_regular(p, EnergyTrial.from_k(k, p), parity, **kw)


class TestTypes:
    def test_trial(self, dw_params):
        t = EnergyTrial.from_k(1.5, dw_params)
        assert t.energy == -2.25 and t.mu == 1.5 and t.kappa == pytest.approx(1.8)
        with pytest.raises(PreconditionError):
            EnergyTrial.from_k(0.0, dw_params)

    def test_parity(self):
        assert Parity.parse("even") is Parity.EVEN
        assert Parity.parse(Parity.ODD) is Parity.ODD
        assert Parity.EVEN.reflection == 1 and Parity.ODD.reflection == -1
        with pytest.raises(ValueError):
            Parity.parse("both")


class TestCoordinate:
    def test_values(self, dw_params):
        assert to_whittaker_coordinate(1.0, dw_params) == pytest.approx(3.6)
        # 3.6 e = 9.785814...
        assert to_whittaker_coordinate(0.0, dw_params) == pytest.approx(3.6 * np.e, rel=1e-15)
        assert to_whittaker_coordinate(0.0, dw_params) == pytest.approx(9.785814, abs=1e-6)

    def test_decreasing(self, dw_params):
        ts = [to_whittaker_coordinate(x, dw_params) for x in np.linspace(0, 30, 31)]
        assert all(b < a for a, b in zip(ts, ts[1:]))
        assert ts[-1] < 1e-11

    def test_guard(self):
        p = MorseParams.symmetric(1.0, 1.8, 5.0)
        with pytest.raises(GuardError):
            to_whittaker_coordinate(0.0, p)
        with pytest.raises(GuardError):
            wave(p, 1.3, Parity.EVEN)
        assert wave(p, 1.3, Parity.EVEN, config=SolverConfig(t_max=600)).c_grow != 0
        with pytest.raises(PreconditionError):
            to_whittaker_coordinate(-0.5, p, 600)


class TestNormalisation:
    @pytest.mark.parametrize("k", [0.3, 0.9, 1.268113, 1.7])
    def test_odd(self, dw_params, k):
        psi, dpsi = wave(dw_params, k, Parity.ODD).eval(0.0)
        assert abs(psi) <= 1e-13 and abs(dpsi - 1) <= 1e-12

    @pytest.mark.parametrize("k", [0.3, 0.9, 1.355765, 1.7])
    def test_even(self, dw_params, k):
        psi, dpsi = wave(dw_params, k, Parity.EVEN).eval(0.0)
        assert abs(psi - 1) <= 1e-13 and abs(dpsi) <= 1e-12

    def test_fig4_origin(self, dw_params):
        assert evaluate(wave(dw_params, K_EVEN, Parity.EVEN), 0.0)[0] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("parity", [Parity.EVEN, Parity.ODD])
def test_parity_reflection(dw_params, parity):
    w = wave(dw_params, 1.3, parity)
    s = parity.reflection
    for x in np.random.default_rng(7).uniform(0, 10, 100):
        (pr, dr), (pl, dl) = w.eval(x), w.eval(-x)
        assert pl == s * pr and dl == -s * dr
    xs = np.linspace(0.05, 10, 200)
    psi, dpsi = w.profile(np.concatenate([-xs[::-1], xs]))
    left, right = psi[:200][::-1], psi[200:]
    assert np.array_equal(left, s * right)
    assert np.array_equal(dpsi[:200][::-1], -s * dpsi[200:])


def test_render_limit(dw_params):
    w = wave(dw_params, 1.3, Parity.EVEN)
    with pytest.raises(PreconditionError):
        w.eval(12.5)
    with pytest.raises(PreconditionError):
        w.profile(np.array([0.0, 13.0]))


@pytest.mark.parametrize(
    "k,parity,flipped",
    [(K_EVEN, Parity.EVEN, False), (K_ODD, Parity.ODD, False), (1.1, Parity.EVEN, True)],
)
def test_ode_residual(dw_params, k, parity, flipped):
    """-psi'' + (V - E) psi from central differences of the analytic psi'."""
    w = wave(dw_params, k, parity, flipped=flipped)
    V = v_single_well if flipped else v_sym
    h = 1e-5
    worst, scale = 0.0, 0.0
    for x in np.linspace(0.1, 5.0, 50):
        with mpmath.workdps(40):
            d2 = (w.eval_mp(x + h)[1] - w.eval_mp(x - h)[1]) / (2 * h)
            psi = w.eval_mp(x)[0]
            res = -d2 + (V(x, dw_params) + k * k) * psi
        worst = max(worst, abs(float(res)))
        scale = max(scale, abs(float(psi)))
    assert worst <= 1e-8 * scale


def test_profile_matches_mp(dw_params):
    for flipped in (False, True):
        w = wave(dw_params, 1.2, Parity.ODD, flipped=flipped)
        x = np.linspace(-8, 8, 41)
        psi, dpsi = w.profile(x)
        for xi, p_, d_ in zip(x, psi, dpsi):
            pm, dm = w.eval(xi)
            assert p_ == pytest.approx(pm, rel=1e-9, abs=1e-12)
            assert d_ == pytest.approx(dm, rel=1e-9, abs=1e-12)


class TestFigureBehaviour:
    def test_ground_trial_bounded(self, dw_params):
        w = wave(dw_params, K_EVEN, Parity.EVEN)
        x = np.linspace(0, 7, 701)
        psi, _ = w.profile(x)
        assert np.all(psi > 0)
        assert psi.max() < 2.5
        assert 0 < w.eval(6.0)[0] < 0.02
        tail = psi[(x >= 4) & (x <= 6)]
        assert np.all(np.diff(tail) < 0)

    def test_coarse_fan_diverges(self, dw_params):
        lo = wave(dw_params, 1.354, Parity.EVEN).eval(8.0)[0]
        hi = wave(dw_params, 1.358, Parity.EVEN).eval(8.0)[0]
        assert lo * hi < 0

    def test_tail_sign_matches_coefficient(self, dw_params):
        for k in (1.354, 1.358):
            w = wave(dw_params, k, Parity.EVEN)
            assert np.sign(w.eval(11.0)[0]) == np.sign(float(w.c_grow))


class TestTailFunctional:
    def test_even_flip(self, dw_params):
        a = tail_functional(dw_params, EnergyTrial.from_k(1.354, dw_params), "even")
        b = tail_functional(dw_params, EnergyTrial.from_k(1.358, dw_params), "even")
        assert a * b < 0

    def test_odd_flip(self, dw_params):
        a = tail_functional(dw_params, EnergyTrial.from_k(1.268110, dw_params), "odd")
        b = tail_functional(dw_params, EnergyTrial.from_k(1.268116, dw_params), "odd")
        assert a * b < 0

    def test_continuity_in_bracket(self, dw_params):
        ks = np.linspace(1.35576, 1.35577, 41)
        L = np.array([float(tail_functional(dw_params, EnergyTrial.from_k(k, dw_params), "even"))
                      for k in ks])
        # departure from linear interpolation between neighbours
        jump = np.abs(L[1:-1] - 0.5 * (L[:-2] + L[2:]))
        assert jump.max() < 1e-6 * np.abs(L).max()


class TestNodeCount:
    def test_ground_and_first_odd(self, dw_params):
        assert node_count(dw_params, EnergyTrial.from_k(K_EVEN, dw_params), "even") == 0
        assert node_count(dw_params, EnergyTrial.from_k(K_ODD, dw_params), "odd") == 0

    def test_below_range(self, dw_params):
        w = wave(dw_params, 2.5, Parity.EVEN)
        assert w.node_count() == 0
        above = wave(dw_params, 1.358, Parity.EVEN)
        assert np.sign(float(w.c_grow)) == np.sign(float(above.c_grow))

    def test_between_levels(self, dw_params):
        # even levels sit at k = 1.35576 and k = 0.40106
        assert wave(dw_params, 1.358, Parity.EVEN).sturm_index()[1] == 0
        assert wave(dw_params, 0.8, Parity.EVEN).sturm_index()[1] == 1
        assert wave(dw_params, 0.3, Parity.EVEN).sturm_index()[1] == 2

    def test_explicit_range(self, dw_params):
        w = wave(dw_params, 1.354, Parity.EVEN)
        assert w.node_count(x_max=11.0) == 1
        with pytest.raises(PreconditionError):
            w.node_count(x_max=1.0)

    def test_odd_origin_zero_not_counted(self):
        # deep single well: rounding noise at the imposed zero must not become a node
        p = MorseParams.symmetric(1.0, 1.8, 2.0)
        for k in np.linspace(10.47851919879, 10.4785191988, 5):
            w = wave(p, k, Parity.ODD, flipped=True)
            assert w.nodes() == []

    def test_nodes_are_zeros(self, dw_params):
        w = wave(dw_params, 0.3, Parity.EVEN)
        for z in w.nodes():
            assert abs(w.eval(z)[0]) < 1e-8


def test_oracle_profile_agreement(dw_params):
    x, psi = integrate_outward(dw_params, -K_EVEN**2, "even")
    sel = np.arange(0, np.searchsorted(x, 6.0) + 1, 250)
    ref, _ = wave(dw_params, K_EVEN, Parity.EVEN).profile(x[sel])
    assert np.max(np.abs(psi[sel] - ref) / np.abs(ref)) < 1e-7
