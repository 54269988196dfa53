"""Morse potential, its left-right symmetrisation and the flipped single well.

Units: hbar = 2m = 1, so the kinetic term is -d^2/dx^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MorseParams",
    "v_morse",
    "v_sym",
    "v_single_well",
    "exact_full_line_morse_spectrum",
    "morse_minimum",
    "HalfLineModel",
]


@dataclass(frozen=True)
class MorseParams:
    """Parameters of V(x) = -2 gamma1^2 exp(-alpha x) + gamma2^2 exp(-2 alpha x).

    ``shift`` is the symmetrisation shift d; negative values give the
    barrier-free variant.
    """

    alpha: float
    gamma1: float
    gamma2: float
    shift: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.gamma2 > 0:
            raise ValueError(f"gamma2 must be positive, got {self.gamma2}")
        for name in ("alpha", "gamma1", "gamma2", "shift"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def symmetric(cls, alpha: float, gamma: float, d: float = 0.0) -> "MorseParams":
        return cls(alpha=alpha, gamma1=gamma, gamma2=gamma, shift=d)

    @property
    def kappa(self) -> float:
        """Whittaker index gamma1^2 / (alpha gamma2)."""
        return self.gamma1**2 / (self.alpha * self.gamma2)

    @property
    def t0(self) -> float:
        """Whittaker coordinate at the origin of the symmetrised problem."""
        return 2.0 * self.gamma2 / self.alpha * math.exp(self.alpha * self.shift)


def v_morse(x, p: MorseParams):
    """Morse potential at x (scalar or array).

    Very negative x overflows to +inf; test with ``np.isinf`` if that matters.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        e1 = np.exp(-p.alpha * np.asarray(x, dtype=float))
        v = -2.0 * p.gamma1**2 * e1 + p.gamma2**2 * e1 * e1
        v = np.where(np.isinf(e1), np.inf, v)
    return float(v) if np.ndim(v) == 0 else v


def v_sym(x, p: MorseParams):
    """Even extension V(x) = V_morse(|x| - d)."""
    return v_morse(np.abs(np.asarray(x, dtype=float)) - p.shift, p)


def v_single_well(x, p: MorseParams):
    """Upside-down symmetrised Morse potential, -v_sym."""
    return -v_sym(x, p)


def morse_minimum(p: MorseParams) -> tuple[float, float]:
    """Location and value of the Morse minimum: (ln(gamma2^2/gamma1^2)/alpha, -gamma1^4/gamma2^2)."""
    if p.gamma1 == 0:
        return math.inf, 0.0
    x_star = math.log(p.gamma2**2 / p.gamma1**2) / p.alpha
    return x_star, -(p.gamma1**4) / p.gamma2**2


def exact_full_line_morse_spectrum(p: MorseParams) -> list[float]:
    """Closed-form levels E_n = -(gamma1^2/gamma2 - alpha (n + 1/2))^2 of the full-line problem.

    Returns an empty list when gamma1^2 / (alpha gamma2) <= 1/2.
    """
    kappa = p.kappa
    if kappa <= 0.5:
        return []
    n_max = math.ceil(kappa - 0.5) - 1
    return [-((p.gamma1**2 / p.gamma2) - p.alpha * (n + 0.5)) ** 2 for n in range(n_max + 1)]


@dataclass(frozen=True)
class HalfLineModel:
    """Right half (x >= 0) of a symmetric exponential potential.

    V(x) = A u + B u^2 with u = exp(-alpha (x - d)).  The symmetrised Morse
    potential has A = -2 gamma1^2, B = gamma2^2; the flipped single well has
    the opposite signs.
    """

    params: MorseParams
    flipped: bool = False

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def A(self) -> float:
        a = -2.0 * self.params.gamma1**2
        return -a if self.flipped else a

    @property
    def B(self) -> float:
        b = self.params.gamma2**2
        return -b if self.flipped else b

    @property
    def u0(self) -> float:
        return math.exp(self.params.alpha * self.params.shift)

    @property
    def scale0(self) -> float:
        """2 sqrt|B| u0 / alpha: the series argument at the origin (t0 for the Morse case)."""
        return 2.0 * math.sqrt(abs(self.B)) * self.u0 / self.alpha

    def potential(self, x):
        v = v_sym(x, self.params)
        return -v if self.flipped else v

    def u_of(self, x):
        return np.exp(-self.alpha * (np.asarray(x, dtype=float) - self.params.shift))

    def x_of_u(self, u: float) -> float:
        return self.params.shift - math.log(u) / self.alpha

    def v_min(self) -> float:
        """Minimum of V over x >= 0 (infimum 0 if the potential is positive)."""
        v0 = float(self.potential(0.0))
        if self.flipped:
            return min(v0, 0.0)
        x_star, v_star = morse_minimum(self.params)
        if x_star + self.params.shift >= 0.0:
            return v_star
        return v0

    def allowed_window(self, E: float) -> tuple[float, float] | None:
        """Interval [x_in, x_out] of x >= 0 where V(x) <= E, or None if empty.

        Beyond x_out the region is classically forbidden out to infinity; on
        [0, x_in) it is forbidden too (the central barrier), when x_in > 0.
        """
        A, B = self.A, self.B
        disc = A * A + 4.0 * B * E
        if disc < 0:
            return None
        root = math.sqrt(disc)
        if B > 0:
            u_lo = (-A - root) / (2.0 * B)
            u_hi = (-A + root) / (2.0 * B)
            if u_hi <= 0:
                return None
            u_lo = max(u_lo, 0.0)
            x_out = math.inf if u_lo == 0.0 else self.x_of_u(u_lo)
            x_in = self.x_of_u(u_hi)
        else:
            u_star = (A + root) / (2.0 * abs(B))
            if u_star <= 0:
                return None
            x_out = self.x_of_u(u_star)
            x_in = 0.0
        if x_out <= 0.0:
            return None
        return max(x_in, 0.0), x_out
