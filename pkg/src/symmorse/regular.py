"""Regular (origin-normalised) solutions of the symmetrised Morse problem.

On x > 0 the substitution t = (2 gamma2/alpha) exp(-alpha (x - d)),
psi = t^(-1/2) w(t) turns -psi'' + (V - E) psi = 0 into Whittaker's equation
with kappa = gamma1^2/(alpha gamma2) and mu = k/alpha, E = -k^2.  The regular
solution is written as

    psi(x) = c_decay * t^(-1/2) M_{kappa,mu}(t) + c_grow * t^(-1/2) M_{kappa,-mu}(t)

with the coefficients fixed by the parity condition at the origin.  The first
basis member decays like exp(-k x), the second grows like exp(+k x), so
c_grow is the tail functional: it vanishes exactly at the eigenvalues and its
sign is the sign of psi at +infinity.

For the flipped single well the Whittaker argument is imaginary; the same
two solutions are then summed from their real Frobenius series in
u = exp(-alpha (x - d)).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridTooCoarse, GuardError, PreconditionError, SingularSystem
from .potentials import HalfLineModel, MorseParams
from .specfun import (
    DEFAULT_ACCURACY,
    Accuracy,
    frobenius_grid,
    kummer_m_grid,
    morse_frobenius,
    mp_context,
    origin_series,
    origin_series_grid,
    whittaker_m_and_dz,
)

__all__ = [
    "Parity",
    "EnergyTrial",
    "SolverConfig",
    "RegularWave",
    "to_whittaker_coordinate",
    "build_regular",
    "evaluate",
    "tail_functional",
    "node_count",
]

_LN10 = math.log(10.0)
_NUDGE_WINDOW = 1e-12
_NUDGE = 1e-13
_WRONSKIAN_TOL = 1e-6
# the origin Taylor series is used for |v| = |u/u0 - 1| <= ORIGIN_REACH
ORIGIN_REACH = 0.8


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def reflection(self) -> int:
        """Sign s in psi(-x) = s psi(x)."""
        return 1 if self is Parity.EVEN else -1

    def origin_values(self) -> tuple[int, int]:
        """(psi(0), psi'(0)) normalisation."""
        return (1, 0) if self is Parity.EVEN else (0, 1)

    @classmethod
    def parse(cls, value) -> "Parity":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class EnergyTrial:
    """Trial energy E = -k^2 with its Whittaker indices."""

    k: object
    kappa: float
    mu: object

    def __post_init__(self):
        if not self.k > 0:
            raise PreconditionError(f"k must be positive, got {self.k}")

    @classmethod
    def from_k(cls, k, p: MorseParams) -> "EnergyTrial":
        return cls(k=k, kappa=p.kappa, mu=k / p.alpha)

    @property
    def energy(self):
        return -self.k * self.k


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings shared by the regular-solution and bracketing code.

    ``t_max`` bounds the series argument at the origin; ``n_grid`` is the
    node-count grid size; ``x_render_max`` defaults to 12/alpha.
    """

    acc: Accuracy = DEFAULT_ACCURACY
    t_max: float = 200.0
    n_grid: int = 2000
    x_render_max: float | None = None

    def __post_init__(self):
        if self.n_grid < 200:
            raise ValueError(f"n_grid must be >= 200, got {self.n_grid}")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")

    def render_limit(self, p: MorseParams) -> float:
        return self.x_render_max if self.x_render_max is not None else 12.0 / p.alpha


DEFAULT_CONFIG = SolverConfig()


def to_whittaker_coordinate(x: float, p: MorseParams, t_max: float = 200.0) -> float:
    """t(x) = (2 gamma2/alpha) exp(-alpha (x - d)) for x >= 0.

    Raises GuardError when t(0) exceeds ``t_max``.
    """
    if x < 0:
        raise PreconditionError(f"x must be >= 0, got {x}")
    if p.t0 > t_max:
        raise GuardError(
            f"t0 = {p.t0:.6g} exceeds t_max = {t_max:g}; raise t_max (precision grows with it)"
        )
    return 2.0 * p.gamma2 / p.alpha * math.exp(-p.alpha * (x - p.shift))


def _nudge(k, alpha):
    """Move k off points where 2 mu is an integer (basis degenerates there)."""
    two_mu = 2 * k / alpha
    if abs(two_mu - round(float(two_mu))) < _NUDGE_WINDOW:
        return k * (1 + _NUDGE), True
    return k, False


@dataclass(frozen=True)
class _Basis:
    """The decaying/growing pair at fixed energy, evaluable in mp or on float grids."""

    model: HalfLineModel
    k: object  # mpf
    dps: int

    @property
    def alpha(self):
        return self.model.alpha

    @property
    def whittaker(self) -> bool:
        return self.model.B > 0

    @cached_property
    def acc(self) -> Accuracy:
        return Accuracy(working_precision=self.dps)

    def mp_eval(self, x):
        """(r, r', g, g') at x >= 0, in mp at the basis precision."""
        ctx = mp_context()
        with ctx.workdps(self.dps):
            x = ctx.mpf(x)
            alpha = ctx.mpf(self.alpha)
            mu = ctx.mpf(self.k) / alpha
            u = ctx.exp(-alpha * (x - ctx.mpf(self.model.params.shift)))
            if self.whittaker:
                t = 2 * ctx.sqrt(ctx.mpf(self.model.B)) / alpha * u
                kappa = -ctx.mpf(self.model.A) / (2 * alpha * ctx.sqrt(ctx.mpf(self.model.B)))
                out = []
                for m in (mu, -mu):
                    w, dw = whittaker_m_and_dz(kappa, m, t, self.acc)
                    sq = ctx.sqrt(t)
                    out.append(w / sq)
                    out.append(-alpha * (sq * dw - w / (2 * sq)))
                return tuple(out)
            A, B = ctx.mpf(self.model.A), ctx.mpf(self.model.B)
            r, dr = morse_frobenius(A, B, alpha, mu, u, self.acc)
            g, dg = morse_frobenius(A, B, alpha, -mu, u, self.acc)
            return r, dr, g, dg

    def grid_eval(self, x: np.ndarray):
        """Float (r, |r| bound, g, |g| bound) on an array of x >= 0."""
        x = np.asarray(x, dtype=float)
        mu = float(self.k) / self.alpha
        u = self.model.u_of(x)
        if self.whittaker:
            sb = math.sqrt(self.model.B)
            t = 2.0 * sb / self.alpha * u
            kappa = -self.model.A / (2.0 * self.alpha * sb)
            out = []
            for m in (mu, -mu):
                vals, abs_sum = kummer_m_grid(m - kappa + 0.5, 1.0 + 2.0 * m, t)
                pre = np.exp(-t / 2.0) * t**m
                out.extend([pre * vals, pre * abs_sum])
            return tuple(out)
        r, r_abs = frobenius_grid(self.model.A, self.model.B, self.alpha, mu, u)
        g, g_abs = frobenius_grid(self.model.A, self.model.B, self.alpha, -mu, u)
        return r, r_abs, g, g_abs

    def grid_eval_dx(self, x: np.ndarray):
        """Float (r, r', g, g', |r| bound, |g| bound) on an array of x >= 0."""
        x = np.asarray(x, dtype=float)
        mu = float(self.k) / self.alpha
        u = self.model.u_of(x)
        if not self.whittaker:
            A, B = self.model.A, self.model.B
            r, r_abs, dr = frobenius_grid(A, B, self.alpha, mu, u, derivative=True)
            g, g_abs, dg = frobenius_grid(A, B, self.alpha, -mu, u, derivative=True)
            return r, dr, g, dg, r_abs, g_abs
        sb = math.sqrt(self.model.B)
        t = 2.0 * sb / self.alpha * u
        kappa = -self.model.A / (2.0 * self.alpha * sb)
        out = []
        for m in (mu, -mu):
            a, b = m - kappa + 0.5, 1.0 + 2.0 * m
            vals, abs_sum = kummer_m_grid(a, b, t)
            dvals, dabs = kummer_m_grid(a + 1.0, b + 1.0, t)
            pre = np.exp(-t / 2.0) * t**m
            f = pre * vals
            # d/dx = -alpha t d/dt
            df = -self.alpha * t * ((-0.5 + m / t) * f + pre * (a / b) * dvals)
            out.append((f, df, pre * (abs_sum + abs(a / b) * t * dabs)))
        (r, dr, r_abs), (g, dg, g_abs) = out
        return r, dr, g, dg, r_abs, g_abs


@dataclass(frozen=True)
class RegularWave:
    """Regular solution at one trial energy; immutable once built."""

    params: MorseParams
    trial: EnergyTrial
    parity: Parity
    c_decay: object
    c_grow: object
    flipped: bool = False
    config: SolverConfig = DEFAULT_CONFIG
    nudged: bool = False
    _basis: _Basis = field(default=None, repr=False, compare=False)
    c_grow_error: object = field(default=None, repr=False, compare=False)

    @property
    def tail_sign_reliable(self) -> bool:
        """True when |c_grow| clearly exceeds its rounding estimate."""
        return self.c_grow_error is None or abs(self.c_grow) > 100 * self.c_grow_error

    @property
    def model(self) -> HalfLineModel:
        return HalfLineModel(self.params, self.flipped)

    @property
    def energy(self) -> float:
        return float(self.trial.energy)

    def _check_x(self, x):
        limit = self.config.render_limit(self.params)
        if abs(x) > limit:
            raise PreconditionError(f"|x| = {abs(x)} exceeds x_render_max = {limit}")

    def eval_mp(self, x):
        """(psi, dpsi/dx) at x in extended precision."""
        self._check_x(x)
        ctx = mp_context()
        s = self.parity.reflection
        with ctx.workdps(self._basis.dps):
            r, dr, g, dg = self._basis.mp_eval(abs(x))
            psi = self.c_decay * r + self.c_grow * g
            dpsi = self.c_decay * dr + self.c_grow * dg
            if x < 0:
                return s * psi, -s * dpsi
            return +psi, +dpsi

    def eval(self, x) -> tuple[float, float]:
        """(psi, dpsi/dx) at x as floats; x < 0 by parity reflection."""
        psi, dpsi = self.eval_mp(x)
        return float(psi), float(dpsi)

    __call__ = eval

    @cached_property
    def _origin_coefficients(self) -> tuple[list, np.ndarray]:
        """Taylor coefficients about the origin (mp, float), see specfun.origin_series."""
        m = self.model
        psi0, dpsi0 = self.parity.origin_values()
        coef = origin_series(
            m.A, m.B, m.alpha, m.u0, self.trial.k**2, psi0, dpsi0, ORIGIN_REACH, self._basis.acc
        )
        return coef, np.array([float(c) for c in coef])

    @property
    def _x_reach(self) -> float:
        return -math.log1p(-ORIGIN_REACH) / self.params.alpha

    def _origin_mp(self, x):
        """(psi, dpsi/dx, sum of |terms|) from the origin series in mp."""
        ctx = mp_context()
        coef, _ = self._origin_coefficients
        with ctx.workdps(self._basis.dps + 10):
            alpha = ctx.mpf(self.params.alpha)
            v = ctx.expm1(-alpha * ctx.mpf(x))
            total, dtotal, abs_sum = ctx.zero, ctx.zero, ctx.zero
            for j in range(len(coef) - 1, -1, -1):
                total = total * v + coef[j]
                abs_sum = abs_sum * abs(v) + abs(coef[j])
                if j:
                    dtotal = dtotal * v + j * coef[j]
            return total, -alpha * (1 + v) * dtotal, abs_sum

    def _point_mp(self, x) -> tuple[float, float]:
        """(psi, dpsi/dx) at x >= 0 as floats via the better-conditioned mp route."""
        if x <= self._x_reach:
            psi, dpsi, abs_sum = self._origin_mp(x)
            ctx = mp_context()
            if abs(psi) > abs_sum * ctx.mpf(10) ** (3 - self._basis.dps):
                return float(psi), float(dpsi)
        psi, dpsi = self.eval_mp(x)
        return float(psi), float(dpsi)

    def _values(self, ax: np.ndarray, derivative: bool):
        """Origin-normalised (psi, dpsi/dx or None) on an array of x >= 0.

        The origin series covers x <= ln(5)/alpha and the basis combination
        the rest; points not clearly above their rounding bound are redone
        in mp, so the signs are reliable.
        """
        psi = np.empty_like(ax)
        dpsi = np.empty_like(ax) if derivative else None
        err = np.empty_like(ax)
        near = ax <= self._x_reach
        if np.any(near):
            _, coef = self._origin_coefficients
            v = np.expm1(-self.params.alpha * ax[near])
            out = origin_series_grid(coef, v, derivative, self.params.alpha)
            psi[near] = out[0]
            err[near] = 4e-16 * coef.size * out[1]
            if derivative:
                dpsi[near] = out[2]
        far = ~near
        if np.any(far):
            cd, cg = float(self.c_decay), float(self.c_grow)
            with np.errstate(invalid="ignore", over="ignore"):
                if derivative:
                    r, dr, g, dg, r_abs, g_abs = self._basis.grid_eval_dx(ax[far])
                    dpsi[far] = cd * dr + cg * dg
                else:
                    r, r_abs, g, g_abs = self._basis.grid_eval(ax[far])
                psi[far] = cd * r + cg * g
                err[far] = 1e-14 * (abs(cd) * r_abs + abs(cg) * g_abs)
        with np.errstate(invalid="ignore"):
            bad = ~(np.abs(psi) > 1e3 * err) | ~np.isfinite(psi)
            if derivative:
                bad |= ~np.isfinite(dpsi)
        for i in np.flatnonzero(bad):
            pv, dv = self._point_mp(ax[i])
            psi[i] = pv
            if derivative:
                dpsi[i] = dv
        return psi, dpsi

    def psi_grid(self, x) -> np.ndarray:
        """psi on an array of x >= 0 (float, with an mp fallback near zeros)."""
        return self._values(np.asarray(x, dtype=float), False)[0]

    def profile(self, x) -> tuple[np.ndarray, np.ndarray]:
        """(psi, dpsi/dx) on an array of x (either sign), origin-normalised."""
        x = np.asarray(x, dtype=float)
        limit = self.config.render_limit(self.params)
        if np.any(np.abs(x) > limit):
            raise PreconditionError(f"profile requested beyond x_render_max = {limit}")
        psi, dpsi = self._values(np.abs(x), True)
        s = self.parity.reflection
        neg = x < 0
        psi[neg] *= s
        dpsi[neg] *= -s
        return psi, dpsi

    def window(self) -> tuple[float, float] | None:
        """Classically allowed part [x_in, x_out] of the right half-line."""
        return self.model.allowed_window(self.energy)

    def nodes(self, x_max: float | None = None, n_grid: int | None = None) -> list[float]:
        """Locations of interior zeros of psi on the right half-line.

        With ``x_max=None`` the scan covers only the classically allowed
        window; otherwise it covers (0, x_max], which requires V(x_max) > E.
        """
        n_grid = n_grid or self.config.n_grid
        if x_max is None:
            win = self.window()
            if win is None:
                return []
            lo, hi = win
        else:
            if not float(self.model.potential(x_max)) > self.energy:
                raise PreconditionError(
                    f"V(x_max={x_max}) must exceed E={self.energy} (forbidden region)"
                )
            lo, hi = 0.0, float(x_max)
        # the odd origin zero is imposed; psi ~ x just to its right
        start = 1.0 if lo == 0.0 and self.parity is Parity.ODD else None
        return _scan_nodes(
            self.psi_grid, lo, hi, n_grid, self.model.v_min(), self.energy, start_sign=start
        )

    def node_count(self, x_max: float | None = None, n_grid: int | None = None) -> int:
        return len(self.nodes(x_max, n_grid))

    def sturm_index(self, n_grid: int | None = None) -> tuple[int, int]:
        """(bulk node count m, number of zeros N on the whole half-line).

        Outside the allowed window psi can vanish at most once more, and does
        so exactly when its sign there differs from the sign of c_grow.
        """
        m = self.node_count(None, n_grid)
        if self.c_grow == 0:
            return m, m
        tail_sign = 1 if self.c_grow > 0 else -1
        return m, m + (0 if tail_sign == (-1) ** m else 1)


def _scan_nodes(psi_fn, lo: float, hi: float, n_grid: int, v_min: float, energy: float,
                start_sign: float | None = None):
    """Sign changes of psi_fn on (lo, hi], each localised to 1e-10 * max(1, hi).

    Zeros of a solution are at least pi / sqrt(E - V_min) apart, so a grid
    finer than that sees each zero in its own cell.  ``start_sign`` replaces
    the sign at lo, for a zero there that is imposed rather than computed.
    """
    if hi <= lo:
        return []
    h = (hi - lo) / n_grid
    kmax2 = energy - v_min
    if kmax2 > 0 and h >= math.pi / math.sqrt(kmax2):
        raise GridTooCoarse(
            f"grid step {h:.3g} cannot separate zeros spaced >= {math.pi / math.sqrt(kmax2):.3g}"
        )
    xs = np.linspace(lo, hi, n_grid + 1)
    vals = psi_fn(xs)
    signs = np.sign(vals)
    if start_sign is not None:
        signs[0] = start_sign
    width_tol = 1e-10 * max(1.0, abs(hi))
    found = []
    i = 0
    while i < n_grid:
        s0, s1 = signs[i], signs[i + 1]
        if s1 == 0 and i + 1 < n_grid:
            found.append(float(xs[i + 1]))
            i += 2
            continue
        if s0 != 0 and s1 != 0 and s0 != s1:
            found.append(_localise(psi_fn, xs[i], xs[i + 1], s0, width_tol))
        i += 1
    return found


def _localise(psi_fn, a: float, b: float, sa: float, width_tol: float, split: int = 32):
    """Shrink a sign-change cell [a, b] to width_tol by repeated subdivision."""
    while b - a > width_tol:
        xs = np.linspace(a, b, split + 1)
        sg = np.sign(psi_fn(xs[1:-1]))
        if np.any(sg == 0):
            return float(xs[1 + int(np.flatnonzero(sg == 0)[0])])
        flips = np.flatnonzero(sg != sa)
        if flips.size == 0:
            a = xs[-2]
        else:
            j = int(flips[0])
            a, b = xs[j], xs[j + 1]
        if not a < b:
            break
    return float(0.5 * (a + b))


def build_regular(
    p: MorseParams,
    trial: EnergyTrial,
    parity,
    config: SolverConfig | None = None,
    *,
    flipped: bool = False,
    extra_digits: int = 0,
) -> RegularWave:
    """Fix (c_decay, c_grow) from the origin conditions and return the wave.

    Even: psi(0) = 1, psi'(0) = 0.  Odd: psi(0) = 0, psi'(0) = 1.
    """
    config = config or DEFAULT_CONFIG
    parity = Parity.parse(parity)
    model = HalfLineModel(p, flipped)
    s0 = model.scale0
    if s0 > config.t_max:
        raise GuardError(
            f"series argument at the origin {s0:.6g} exceeds t_max = {config.t_max:g}"
        )
    k, nudged = _nudge(trial.k, p.alpha)
    if nudged:
        trial = EnergyTrial.from_k(k, p)
    dps = config.acc.working_precision + int(math.ceil(s0 / _LN10)) + 5 + extra_digits
    basis = _Basis(model=model, k=k, dps=dps)
    ctx = mp_context()
    with ctx.workdps(dps):
        r0, dr0, g0, dg0 = basis.mp_eval(0)
        w_exact = 2 * ctx.mpf(k)
        w_num = r0 * dg0 - dr0 * g0
        if not abs(w_num / w_exact - 1) < _WRONSKIAN_TOL:
            raise SingularSystem(
                f"basis Wronskian at the origin is {ctx.nstr(w_num, 8)}, expected "
                f"{ctx.nstr(w_exact, 8)}; working precision exhausted"
            )
        f0, df0 = parity.origin_values()
        c_decay = (f0 * dg0 - df0 * g0) / w_exact
        c_grow = (r0 * df0 - dr0 * f0) / w_exact
        # the Wronskian residual measures the digits actually carried by the basis
        rel = max(abs(w_num / w_exact - 1), ctx.mpf(10) ** (5 - dps))
        c_grow_error = rel * (abs(r0 * df0) + abs(dr0 * f0)) / w_exact
    return RegularWave(
        params=p,
        trial=trial,
        parity=parity,
        c_decay=c_decay,
        c_grow=c_grow,
        flipped=flipped,
        config=config,
        nudged=nudged,
        _basis=basis,
        c_grow_error=c_grow_error,
    )


def evaluate(wave: RegularWave, x) -> tuple[float, float]:
    """(psi, dpsi/dx) of ``wave`` at x."""
    return wave.eval(x)


def tail_functional(p, trial, parity, config=None, *, flipped=False):
    """Coefficient of the exp(+k x) member: zero exactly at eigenvalues."""
    return build_regular(p, trial, parity, config, flipped=flipped).c_grow


def node_count(p, trial, parity, x_max=None, n_grid=None, config=None, *, flipped=False) -> int:
    """Interior zeros of the regular solution on (0, x_max].

    ``x_max=None`` restricts the count to the classically allowed window,
    which is the classification used for bracketing.
    """
    wave = build_regular(p, trial, parity, config, flipped=flipped)
    return wave.node_count(x_max, n_grid)
