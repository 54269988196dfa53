"""Finite-difference shooting oracle (Numerov) for cross-checking eigenvalues.

Independent of the special-function route: it integrates psi'' = (V - E) psi
on a fixed uniform grid and locates levels by Sturm counting of the zeros of
the shot solution, with a Dirichlet wall at the far end.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .errors import NoSuchLevel, PreconditionError
from .potentials import HalfLineModel, MorseParams, morse_minimum, v_morse
from .regular import Parity

log = logging.getLogger(__name__)

__all__ = [
    "ShootingConfig",
    "OracleAccuracyWarning",
    "integrate_outward",
    "eigenvalue",
    "full_line_eigenvalue",
    "dirichlet_eigenvalue",
]

_RESCALE_AT = 1e150


class OracleAccuracyWarning(UserWarning):
    """Halving the Numerov step moved an eigenvalue by more than 10 * match_tol."""


@dataclass(frozen=True)
class ShootingConfig:
    """Grid and tolerance for the Numerov oracle.

    ``x_max=None`` resolves to 15/alpha + d for the parameters in use.
    """

    x_max: float | None = None
    h_step: float = 1e-4
    match_tol: float = 1e-10
    richardson: bool = True

    def __post_init__(self):
        if not self.h_step > 0:
            raise ValueError("h_step must be positive")
        if not self.match_tol > 0:
            raise ValueError("match_tol must be positive")

    def resolve_x_max(self, p: MorseParams) -> float:
        x_max = self.x_max if self.x_max is not None else 15.0 / p.alpha + p.shift
        if not x_max > p.shift + 5.0 / p.alpha:
            raise ValueError(f"x_max = {x_max} must exceed d + 5/alpha")
        return x_max


@njit(cache=True)
def _numerov(f, h, psi0, psi1):
    """Numerov recursion for psi'' = f psi in summed (increment) form.

    With y = (1 - h^2 f / 12) psi the scheme is y_{i+1} - 2 y_i + y_{i-1} =
    h^2 f_i psi_i; carrying the first difference with compensated sums keeps
    round-off growth linear in the number of steps.  Returns (psi, number of
    sign changes after index 0, number of overflow rescale events).
    Rescaling keeps the tail finite and never changes signs.
    """
    n = f.shape[0]
    psi = np.empty(n)
    psi[0] = psi0
    psi[1] = psi1
    w = h * h / 12.0
    hh = h * h
    y = (1.0 - w * f[1]) * psi1
    d = y - (1.0 - w * f[0]) * psi0
    cd = 0.0  # Kahan compensation for d
    cy = 0.0  # Kahan compensation for y
    changes = 0
    rescales = 0
    if psi0 != 0.0 and psi1 != 0.0 and (psi0 > 0.0) != (psi1 > 0.0):
        changes += 1
    for i in range(1, n - 1):
        inc = hh * f[i] * psi[i] - cd
        t = d + inc
        cd = (t - d) - inc
        d = t
        inc = d - cy
        t = y + inc
        cy = (t - y) - inc
        y = t
        psi[i + 1] = y / (1.0 - w * f[i + 1])
        a = psi[i]
        b = psi[i + 1]
        if a == 0.0:
            if psi[i - 1] != 0.0 and b != 0.0 and (psi[i - 1] > 0.0) != (b > 0.0):
                changes += 1
        elif b != 0.0 and (a > 0.0) != (b > 0.0):
            changes += 1
        if abs(b) > _RESCALE_AT:
            for j in range(i + 2):
                psi[j] = psi[j] / _RESCALE_AT
            y /= _RESCALE_AT
            d /= _RESCALE_AT
            cy /= _RESCALE_AT
            cd /= _RESCALE_AT
            rescales += 1
    return psi, changes, rescales


def _taylor_start(f, h, parity: Parity):
    """psi(h) from the Taylor series at 0+ using one-sided derivatives of f.

    The symmetrised potential has a cusp at the origin, so a ghost point
    would not be exact; the expansion to h^4 uses only x >= 0 data.
    """
    f0 = f[0]
    df = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    d2f = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h)
    if parity is Parity.EVEN:
        # psi''=f0, psi'''=f0', psi''''=f0''+f0^2
        return 1.0 + h * h * f0 / 2.0 + h**3 * df / 6.0 + h**4 * (d2f + f0 * f0) / 24.0
    # psi=0, psi'=1: psi'''=f0, psi''''=2 f0'
    return h + h**3 * f0 / 6.0 + h**4 * df / 12.0


def _half_line_potential(p: MorseParams, flipped: bool) -> Callable:
    return HalfLineModel(p, flipped).potential


def integrate_outward(
    p: MorseParams,
    E: float,
    parity,
    cfg: ShootingConfig | None = None,
    *,
    potential: Callable | None = None,
    flipped: bool = False,
):
    """Numerov profile on [0, x_max] from the parity condition at the origin.

    Returns ``(x, psi)``.  ``potential`` overrides the symmetrised Morse
    potential (it must be even and is sampled for x >= 0 only).  Long tails
    are renormalised on the fly; the profile is then only meaningful up to
    a positive factor per rescale event, and the events are logged.
    """
    cfg = cfg or ShootingConfig()
    parity = Parity.parse(parity)
    x, psi, _, rescales = _shoot_half(p, E, parity, cfg, potential, flipped)
    if rescales:
        log.debug("integrate_outward: %d overflow rescale(s) at E=%r", rescales, E)
    return x, psi


def _grid(x_lo: float, x_hi: float, h: float) -> np.ndarray:
    n = int(math.ceil((x_hi - x_lo) / h))
    return x_lo + h * np.arange(n + 1)


def _shoot_half(p, E, parity, cfg, potential, flipped):
    V = potential or _half_line_potential(p, flipped)
    x = _grid(0.0, cfg.resolve_x_max(p), cfg.h_step)
    f = np.asarray(V(x), dtype=float) - E
    psi0 = 1.0 if parity is Parity.EVEN else 0.0
    psi1 = _taylor_start(f, cfg.h_step, parity)
    psi, changes, rescales = _numerov(f, cfg.h_step, psi0, psi1)
    return x, psi, changes, rescales


def _bisect_count(count: Callable[[float], int], n: int, e_lo: float, e_hi: float, tol: float):
    """Smallest E where count(E) exceeds n, located by bisection on [e_lo, e_hi]."""
    if count(e_hi) <= n:
        raise NoSuchLevel(f"level {n} not found below E={e_hi}")
    if count(e_lo) > n:
        raise PreconditionError(f"more than {n} levels lie below E={e_lo}")
    while e_hi - e_lo > tol:
        mid = 0.5 * (e_lo + e_hi)
        if count(mid) > n:
            e_hi = mid
        else:
            e_lo = mid
    return 0.5 * (e_lo + e_hi)


def _with_richardson(solve: Callable[[ShootingConfig], float], cfg: ShootingConfig) -> float:
    e = solve(cfg)
    if cfg.richardson:
        fine = ShootingConfig(cfg.x_max, cfg.h_step / 2.0, cfg.match_tol, richardson=False)
        delta = abs(solve(fine) - e)
        if delta >= 10.0 * cfg.match_tol:
            warnings.warn(
                f"halving h_step moved the eigenvalue by {delta:.3g} "
                f"(> 10 * match_tol = {10 * cfg.match_tol:.3g})",
                OracleAccuracyWarning,
                stacklevel=3,
            )
    return e


def eigenvalue(
    p: MorseParams,
    n: int,
    parity,
    cfg: ShootingConfig | None = None,
    *,
    potential: Callable | None = None,
    flipped: bool = False,
) -> float:
    """Level n of one parity sector, by bisection on the zero count of the shot profile."""
    cfg = cfg or ShootingConfig()
    parity = Parity.parse(parity)
    V = potential or _half_line_potential(p, flipped)
    x_probe = np.linspace(0.0, cfg.resolve_x_max(p), 20001)
    e_lo = float(np.min(V(x_probe))) - 1e-9
    e_hi = min(0.0, float(V(cfg.resolve_x_max(p))))

    def solve(c: ShootingConfig) -> float:
        def count(E):
            _, psi, changes, _ = _shoot_half(p, E, parity, c, potential, flipped)
            return changes + (1 if psi[-1] == 0.0 else 0)

        return _bisect_count(count, n, e_lo, e_hi, c.match_tol)

    return _with_richardson(solve, cfg)


def dirichlet_eigenvalue(
    V: Callable,
    n: int,
    x_left: float,
    x_right: float,
    cfg: ShootingConfig,
    e_range: tuple[float, float],
) -> float:
    """Level n of -psi'' + V psi = E psi with psi(x_left) = psi(x_right) = 0.

    The left wall is moved inward to where h^2 (V - E) reaches 1 if V is
    steeper than that; beyond that point the Numerov coefficients change
    sign and the solution there is below double-precision significance.
    """
    e_lo, e_hi = e_range

    def solve(c: ShootingConfig) -> float:
        h = c.h_step
        x = _grid(x_left, x_right, h)
        v = np.asarray(V(x), dtype=float)
        start = 0
        steep = np.flatnonzero(h * h * (v - e_hi) > 1.0)
        if steep.size and steep[0] == 0:
            gaps = np.flatnonzero(np.diff(steep) != 1)
            last = steep[gaps[0]] if gaps.size else steep[-1]
            start = int(last) + 1
        x, v = x[start:], v[start:]

        def count(E):
            psi, changes, _ = _numerov(v - E, h, 0.0, h)
            return changes + (1 if psi[-1] == 0.0 else 0)

        return _bisect_count(count, n, e_lo, e_hi, c.match_tol)

    return _with_richardson(solve, cfg)


def full_line_eigenvalue(
    p: MorseParams,
    n: int,
    cfg: ShootingConfig | None = None,
    *,
    center: float = 0.0,
    x_left: float | None = None,
) -> float:
    """Level n of the asymmetric Morse potential V_morse(x - center) on the full line.

    Dirichlet walls at -x_max and +x_max (shifted by ``center``); ``x_left``
    overrides the left wall.
    """
    cfg = cfg or ShootingConfig()
    x_max = cfg.x_max if cfg.x_max is not None else 15.0 / p.alpha + p.shift
    lo = (-x_max if x_left is None else x_left) + center
    hi = x_max + center
    _, v_min = morse_minimum(p)
    levels_exist = p.kappa > 0.5
    if not levels_exist:
        raise NoSuchLevel(f"full-line Morse with kappa={p.kappa:.4g} has no bound states")
    return dirichlet_eigenvalue(
        lambda x: v_morse(x - center, p), n, lo, hi, cfg, (v_min - 1e-9, 0.0)
    )
