"""Confluent hypergeometric and Whittaker functions for real arguments.

All scalar routines sum their defining power series in extended precision
(mpmath, one private context per thread) and return ``mpf`` values.  The
working precision is raised automatically when the summation loses digits
to cancellation, so the returned value meets ``Accuracy.rel_tol``.

Two vectorised float routines (:func:`kummer_m_grid`, :func:`frobenius_grid`)
serve the wavefunction grids; they return an absolute-sum companion so the
caller can tell when a float result is not trustworthy.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from mpmath.ctx_mp import MPContext

from .errors import ConvergenceError, DomainError, NotImplementedFallback

__all__ = [
    "Accuracy",
    "DEFAULT_ACCURACY",
    "mp_context",
    "kummer_m",
    "kummer_m_dz",
    "whittaker_m",
    "whittaker_m_dz",
    "whittaker_m_and_dz",
    "whittaker_w",
    "whittaker_w_dz",
    "morse_frobenius",
    "kummer_m_grid",
    "frobenius_grid",
    "origin_series",
    "origin_series_grid",
]

_MAX_DPS = 20000
_RETRIES = 8


@dataclass(frozen=True)
class Accuracy:
    """Accuracy knobs for the special-function routines.

    ``working_precision`` is the starting number of decimal digits; it is
    raised internally when cancellation would otherwise eat into ``rel_tol``.
    """

    rel_tol: float = 1e-14
    max_terms: int = 10000
    working_precision: int = 34

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_terms < 10:
            raise ValueError(f"max_terms must be >= 10, got {self.max_terms}")
        if self.working_precision < 16:
            raise ValueError(
                f"working_precision must be >= 16 digits, got {self.working_precision}"
            )

    @property
    def target_digits(self) -> int:
        return int(math.ceil(-math.log10(self.rel_tol)))


DEFAULT_ACCURACY = Accuracy()

_local = threading.local()


def mp_context() -> MPContext:
    """Return this thread's private mpmath context."""
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = MPContext()
        _local.ctx = ctx
    return ctx


def _lost_digits(ctx, biggest, total) -> float:
    if biggest == 0:
        return 0.0
    if total == 0:
        return math.inf
    return float(ctx.log10(abs(biggest) / abs(total)))


def _check_b(ctx, a, b):
    if ctx.isint(b) and b <= 0:
        if ctx.isint(a) and b <= a <= 0:
            return
        raise DomainError(f"b={b} is a non-positive integer and the series does not terminate first")


def _kummer_series(ctx, a, b, z, max_terms):
    """Sum M(a, b, z) at the context's current precision.

    Returns ``(sum, largest |term|)``.  Truncation uses a rigorous tail bound:
    once n exceeds max(|a|, |b|) + 1 the term ratios are bounded by a
    decreasing sequence rho_n, and the tail is at most |t_n| rho_n / (1 - rho_n).
    """
    eps = ctx.eps
    total = ctx.one
    term = ctx.one
    biggest = ctx.one
    abs_a, abs_b, abs_z = abs(a), abs(b), abs(z)
    safe_from = max(abs_a, abs_b) + 1
    for n in range(1, max_terms + 1):
        term = term * (a + (n - 1)) * z / ((b + (n - 1)) * n)
        if term == 0:
            return total, biggest
        total += term
        mag = abs(term)
        if mag > biggest:
            biggest = mag
        if n >= safe_from:
            rho = abs_z * (abs_a + n) / ((n - abs_b) * (n + 1))
            if rho < 1:
                tail = mag * rho / (1 - rho)
                if tail <= eps * abs(total):
                    return total, biggest
    raise ConvergenceError(f"M({a}, {b}, {z}) did not converge in {max_terms} terms")


def kummer_m(a, b, z, acc: Accuracy = DEFAULT_ACCURACY):
    """Kummer's function M(a, b, z) = sum_n (a)_n z^n / ((b)_n n!).

    Raises DomainError when b is a non-positive integer reached before the
    series terminates, ConvergenceError when ``acc.max_terms`` is exhausted.
    """
    ctx = mp_context()
    dps = acc.working_precision
    for _ in range(_RETRIES):
        with ctx.workdps(dps):
            A, B, Z = ctx.mpf(a), ctx.mpf(b), ctx.mpf(z)
            _check_b(ctx, A, B)
            if Z == 0:
                return ctx.one
            total, biggest = _kummer_series(ctx, A, B, Z, acc.max_terms)
            lost = _lost_digits(ctx, biggest, total)
            if dps - lost >= acc.target_digits + 2:
                return +total
        if math.isfinite(lost):
            dps = int(math.ceil(lost)) + acc.target_digits + 10
        else:
            dps *= 2
        if dps > _MAX_DPS:
            break
    if total == 0:
        return ctx.zero
    raise ConvergenceError(f"M({a}, {b}, {z}): cancellation exceeds the precision cap")


def kummer_m_dz(a, b, z, acc: Accuracy = DEFAULT_ACCURACY):
    """dM/dz = (a/b) M(a+1, b+1, z)."""
    ctx = mp_context()
    with ctx.workdps(acc.working_precision):
        A, B = ctx.mpf(a), ctx.mpf(b)
        _check_b(ctx, A, B)
        if A == 0:
            return ctx.zero
        return A / B * kummer_m(A + 1, B + 1, z, acc)


def _whittaker_prefactor(ctx, mu, Z):
    return ctx.exp(-Z / 2) * Z ** (mu + ctx.mpf(0.5))


def _check_mu(ctx, mu):
    b = 1 + 2 * mu
    if ctx.isint(b) and b <= 0:
        raise DomainError(f"1 + 2*mu = {b} is a non-positive integer")


def whittaker_m(kappa, mu, z, acc: Accuracy = DEFAULT_ACCURACY):
    """M_{kappa,mu}(z) = exp(-z/2) z^(mu+1/2) M(mu - kappa + 1/2, 1 + 2 mu, z), z > 0."""
    ctx = mp_context()
    with ctx.workdps(acc.working_precision):
        K, MU, Z = ctx.mpf(kappa), ctx.mpf(mu), ctx.mpf(z)
        if Z <= 0:
            raise DomainError(f"whittaker_m needs z > 0, got {z}")
        _check_mu(ctx, MU)
        m = kummer_m(MU - K + ctx.mpf(0.5), 1 + 2 * MU, Z, acc)
        return _whittaker_prefactor(ctx, MU, Z) * m


def whittaker_m_and_dz(kappa, mu, z, acc: Accuracy = DEFAULT_ACCURACY):
    """(M_{kappa,mu}(z), d/dz M_{kappa,mu}(z)) sharing the Kummer evaluation."""
    ctx = mp_context()
    with ctx.workdps(acc.working_precision):
        K, MU, Z = ctx.mpf(kappa), ctx.mpf(mu), ctx.mpf(z)
        if Z <= 0:
            raise DomainError(f"whittaker_m_dz needs z > 0, got {z}")
        _check_mu(ctx, MU)
        a, b = MU - K + ctx.mpf(0.5), 1 + 2 * MU
        m = kummer_m(a, b, Z, acc)
        dm = kummer_m_dz(a, b, Z, acc)
        pre = _whittaker_prefactor(ctx, MU, Z)
        return pre * m, pre * ((-ctx.mpf(0.5) + (MU + ctx.mpf(0.5)) / Z) * m + dm)


def whittaker_m_dz(kappa, mu, z, acc: Accuracy = DEFAULT_ACCURACY):
    """z-derivative of M_{kappa,mu}(z) from the product rule on its Kummer form."""
    return whittaker_m_and_dz(kappa, mu, z, acc)[1]


def _connection_coefficients(ctx, K, MU):
    """W_{k,m} = A M_{k,m} + B M_{k,-m} for non-integral 2m."""
    half = ctx.mpf(0.5)
    A = ctx.gamma(-2 * MU) * ctx.rgamma(half - MU - K)
    B = ctx.gamma(2 * MU) * ctx.rgamma(half + MU - K)
    return A, B


def _near_integer(ctx, x, tol=1e-8) -> bool:
    return abs(x - ctx.nint(x)) < tol


def _whittaker_w_integral(ctx, K, MU, Z, derivative=False):
    """W via its Laplace-type integral, valid for mu - kappa + 1/2 > 0."""
    half = ctx.mpf(0.5)
    p = MU - K + half
    if p <= 0:
        raise NotImplementedFallback(
            f"integral fallback for W needs mu - kappa + 1/2 > 0 (got {p}); perturb mu instead"
        )
    q = MU + K - half

    def weight(t):
        return t ** (p - 1) * (1 + t) ** q

    I0 = ctx.quad(lambda t: ctx.exp(-Z * t) * weight(t), [0, 1, ctx.inf])
    pre = Z ** (MU + half) * ctx.exp(-Z / 2) * ctx.rgamma(p)
    if not derivative:
        return pre * I0
    I1 = ctx.quad(lambda t: -t * ctx.exp(-Z * t) * weight(t), [0, 1, ctx.inf])
    return pre * ((MU + half) / Z - half) * I0 + pre * I1


def _whittaker_w_impl(kappa, mu, z, acc, derivative):
    ctx = mp_context()
    dps = acc.working_precision
    m_fn = whittaker_m_dz if derivative else whittaker_m
    for _ in range(_RETRIES):
        with ctx.workdps(dps):
            K, MU, Z = ctx.mpf(kappa), ctx.mpf(mu), ctx.mpf(z)
            if Z <= 0:
                raise DomainError(f"whittaker_w needs z > 0, got {z}")
            if _near_integer(ctx, 2 * MU):
                return +_whittaker_w_integral(ctx, K, MU, Z, derivative)
            sub = Accuracy(acc.rel_tol, acc.max_terms, dps)
            A, B = _connection_coefficients(ctx, K, MU)
            t1 = A * m_fn(K, MU, Z, sub) if A != 0 else ctx.zero
            t2 = B * m_fn(K, -MU, Z, sub) if B != 0 else ctx.zero
            total = t1 + t2
            lost = _lost_digits(ctx, max(abs(t1), abs(t2)), total)
            if dps - lost >= acc.target_digits + 2:
                return +total
        if math.isfinite(lost):
            dps = int(math.ceil(lost)) + acc.target_digits + 10
        else:
            dps *= 2
        if dps > _MAX_DPS:
            break
    raise ConvergenceError(f"W_({kappa},{mu})({z}): cancellation exceeds the precision cap")


def whittaker_w(kappa, mu, z, acc: Accuracy = DEFAULT_ACCURACY):
    """W_{kappa,mu}(z), the solution recessive as z -> +inf.

    Uses the two-M connection formula; when 2*mu is (within 1e-8 of) an
    integer the integral representation is used instead, which requires
    mu - kappa + 1/2 > 0 and otherwise raises NotImplementedFallback.
    """
    return _whittaker_w_impl(kappa, mu, z, acc, derivative=False)


def whittaker_w_dz(kappa, mu, z, acc: Accuracy = DEFAULT_ACCURACY):
    """z-derivative of W_{kappa,mu}(z), same evaluation routes as whittaker_w."""
    return _whittaker_w_impl(kappa, mu, z, acc, derivative=True)


def _frobenius_series(ctx, A, B, alpha, s, u, max_terms):
    """Sum u^s sum_n c_n u^n and its x-derivative for psi'' = (A u + B u^2 + s^2 alpha^2) psi.

    Here u = exp(-alpha (x - x0)); c_0 = 1 and
    c_n = (A c_{n-1} + B c_{n-2}) / (alpha^2 n (n + 2 s)).
    """
    eps = ctx.eps
    a2 = alpha * alpha
    Au, Bu2 = A * u, B * u * u
    prev2, prev1 = ctx.zero, ctx.one  # c_{n-2} u^{n-2}, c_{n-1} u^{n-1}
    total = ctx.one
    dtotal = s  # sum (n + s) c_n u^n
    biggest = ctx.one
    bound_num = abs(Au) + abs(Bu2)
    for n in range(1, max_terms + 1):
        den = a2 * n * (n + 2 * s)
        if den == 0:
            raise DomainError("2*s is a negative integer; Frobenius series undefined")
        term = (Au * prev1 + Bu2 * prev2) / den
        total += term
        dtotal += (n + s) * term
        mag = abs(term)
        if mag > biggest:
            biggest = mag
        prev2, prev1 = prev1, term
        if n > 2 * abs(s) + 1:
            q = bound_num / (a2 * (n + 1) * (n + 1 - 2 * abs(s)))
            if q < ctx.mpf(0.5):
                tail = 2 * max(mag, abs(prev2)) * q / (1 - q)
                dscale = max(abs(total), abs(dtotal))
                if tail <= eps * abs(total) and tail * (n + 1 + abs(s)) <= eps * dscale:
                    pw = u ** s
                    return pw * total, -alpha * pw * dtotal, biggest, total
    raise ConvergenceError(f"Frobenius series did not converge in {max_terms} terms")


def morse_frobenius(A, B, alpha, s, u, acc: Accuracy = DEFAULT_ACCURACY):
    """Frobenius solution of psi'' = (A u + B u^2 + alpha^2 s^2) psi with u = exp(-alpha (x - x0)).

    Returns ``(psi, dpsi/dx)`` for the solution behaving as u^s as u -> 0.
    This is the real-arithmetic form of t^(-1/2) M_{kappa,s}(t), valid for
    either sign of B (for B < 0 the Whittaker argument would be imaginary).
    """
    ctx = mp_context()
    dps = acc.working_precision
    for _ in range(_RETRIES):
        with ctx.workdps(dps):
            args = [ctx.mpf(v) for v in (A, B, alpha, s, u)]
            if args[4] <= 0:
                raise DomainError(f"u must be positive, got {u}")
            psi, dpsi, biggest, total = _frobenius_series(ctx, *args, acc.max_terms)
            lost = _lost_digits(ctx, biggest, total)
            if dps - lost >= acc.target_digits + 2:
                return +psi, +dpsi
        if math.isfinite(lost):
            dps = int(math.ceil(lost)) + acc.target_digits + 10
        else:
            dps *= 2
        if dps > _MAX_DPS:
            break
    raise ConvergenceError("Frobenius series: cancellation exceeds the precision cap")


def _grid_terms(zmax: float) -> int:
    return int(3.0 * zmax + 60)


def kummer_m_grid(a: float, b: float, z: np.ndarray, max_terms: int = 100000):
    """Vectorised float M(a, b, z) over an array of z >= 0.

    Returns ``(values, abs_sum)``; ``abs_sum`` is the sum of |terms| and bounds
    the rounding error at roughly ``1e-15 * abs_sum``.
    """
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    abs_sum = np.ones_like(z)
    term = np.ones_like(z)
    zmax = float(np.max(np.abs(z))) if z.size else 0.0
    n_cap = min(max_terms, _grid_terms(zmax))
    for n in range(1, n_cap + 1):
        den = (b + n - 1) * n
        if den == 0:
            raise DomainError(f"b={b} hits a non-positive integer")
        term = term * ((a + n - 1) / den) * z
        total += term
        abs_sum += np.abs(term)
        if n > abs(a) + abs(b) + 2 * zmax and np.all(np.abs(term) <= 1e-17 * abs_sum):
            break
    return total, abs_sum


def frobenius_grid(A: float, B: float, alpha: float, s: float, u: np.ndarray, derivative: bool = False):
    """Vectorised float Frobenius sum u^s sum c_n u^n (see morse_frobenius).

    Returns ``(values, abs_values)`` with abs_values the same sum over |terms|;
    with ``derivative=True`` the x-derivative is appended.
    """
    u = np.asarray(u, dtype=float)
    a2 = alpha * alpha
    Au, Bu2 = A * u, B * u * u
    prev2 = np.zeros_like(u)
    prev1 = np.ones_like(u)
    total = np.ones_like(u)
    dtotal = np.full_like(u, s)
    abs_sum = np.ones_like(u)
    scale = float(np.max(np.abs(Au) + np.abs(Bu2))) if u.size else 0.0
    n_cap = int(4.0 * math.sqrt(scale) / alpha + 4 * abs(s) + 80)
    for n in range(1, n_cap + 1):
        term = (Au * prev1 + Bu2 * prev2) / (a2 * n * (n + 2 * s))
        total += term
        dtotal += (n + s) * term
        abs_sum += np.abs(term)
        prev2, prev1 = prev1, term
        if n > 2 * abs(s) + 2 and np.all(
            (np.abs(term) + np.abs(prev2)) <= 1e-17 * abs_sum
        ):
            break
    pw = u ** s
    if derivative:
        return pw * total, pw * abs_sum, -alpha * pw * dtotal
    return pw * total, pw * abs_sum


def origin_series(A, B, alpha, u0, k2, psi0, dpsi0, v_reach: float = 0.8,
                  acc: Accuracy = DEFAULT_ACCURACY, max_terms: int = 20000):
    """Taylor coefficients of psi in v = u/u0 - 1 about a regular point u0.

    psi solves psi'' = (A u + B u^2 + k2) psi with u = exp(-alpha (x - x0)),
    and psi(u0) = psi0, dpsi/dx(u0) = dpsi0.  The series converges for
    |v| < 1 (u = 0 is the nearest singular point); enough terms are kept
    for |v| <= v_reach.  Coefficients are returned as mpf at the working
    precision of ``acc``.
    """
    if not 0 < v_reach < 1:
        raise ValueError("v_reach must lie in (0, 1)")
    ctx = mp_context()
    with ctx.workdps(acc.working_precision + 10):
        A, B, alpha, u0, k2 = (ctx.mpf(q) for q in (A, B, alpha, u0, k2))
        a2 = alpha * alpha
        a1, b1 = A * u0, B * u0 * u0
        c0, c1, c2 = (a1 + b1 + k2) / a2, (a1 + 2 * b1) / a2, b1 / a2
        coef = [ctx.mpf(psi0), -ctx.mpf(dpsi0) / alpha]
        reach = ctx.mpf(v_reach)
        total = abs(coef[0]) + abs(coef[1]) * reach
        eps = ctx.mpf(10) ** (-acc.working_precision)
        small = 0
        for n in range(max_terms):
            prev2 = coef[n - 2] if n >= 2 else 0
            prev1 = coef[n - 1] if n >= 1 else 0
            # (1+v)^2 psi_vv + (1+v) psi_v = (c0 + c1 v + c2 v^2) psi, order by order
            nxt = (c0 * coef[n] + c1 * prev1 + c2 * prev2
                   - (n + 1) * (2 * n + 1) * coef[n + 1] - n * n * coef[n]) / ((n + 2) * (n + 1))
            coef.append(nxt)
            mag = abs(nxt) * reach ** (n + 2)
            total += mag
            small = small + 1 if mag <= eps * total else 0
            if small >= 3:
                return [+c for c in coef]
    raise ConvergenceError(f"origin series did not settle in {max_terms} terms")


def origin_series_grid(coef, v: np.ndarray, derivative: bool = False, alpha: float = 1.0):
    """Float sum of an origin series on an array of v.

    Returns ``(values, abs_values)`` and, with ``derivative=True``, the
    x-derivative -alpha (1 + v) dpsi/dv as a third item.  Rounding error
    is below about len(coef) * 1e-16 * abs_values.
    """
    c = np.array([float(q) for q in coef])
    v = np.asarray(v, dtype=float)
    total = np.zeros_like(v)
    abs_sum = np.zeros_like(v)
    dtotal = np.zeros_like(v)
    av = np.abs(v)
    for j in range(c.size - 1, -1, -1):
        total = total * v + c[j]
        abs_sum = abs_sum * av + abs(c[j])
        if derivative and j > 0:
            dtotal = dtotal * v + j * c[j]
    if derivative:
        return total, abs_sum, -alpha * (1.0 + v) * dtotal
    return total, abs_sum
