"""Piecewise-analytic potentials: segment bases, matching and a secular function.

The real line is cut at a_1 < ... < a_K.  On every segment the Schrödinger
equation is solved exactly by a pair of basis functions; psi and psi' are
continuous at each cut.  Starting from the solution that decays at -infinity
the coefficients are carried across the cuts, and the coefficient of the
component growing at +infinity is the secular function: it vanishes exactly
at the bound states and its sign is the sign of psi at +infinity.

Chain files are JSON::

    {"segments": [
        {"type": "constant", "params": {"V0": 0.0},  "a_left": null, "a_right": -1.0},
        {"type": "constant", "params": {"V0": -4.0}, "a_left": -1.0, "a_right": 1.0},
        {"type": "constant", "params": {"V0": 0.0},  "a_left": 1.0,  "a_right": null}
    ]}

``null`` (or "-inf"/"inf") marks the infinite ends.  Morse segments take
params {alpha, gamma1, gamma2, sigma, x0} with
V(x) = -2 gamma1^2 exp(-alpha y) + gamma2^2 exp(-2 alpha y), y = sigma (x - x0),
so sigma = +1 puts the repulsive wall on the left and sigma = -1 on the right.
A top-level list of segments is accepted as well.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bracketer import DEGENERATE_GAP, EnergyBracket, Probe, drive
from .errors import ChainError, NoSuchLevel, SingularTransfer
from .potentials import MorseParams
from .regular import _scan_nodes
from .specfun import DEFAULT_ACCURACY, Accuracy, kummer_m_grid, mp_context, whittaker_m_and_dz

__all__ = [
    "ConstantPiece",
    "MorsePiece",
    "Segment",
    "SegmentChain",
    "Transfer",
    "match_boundary",
    "secular",
    "bracket_secular",
    "load_chain",
    "chain_from_dict",
    "chain_builder",
    "square_well_chain",
    "sym_morse_chain",
    "full_line_morse_chain",
]

_LN10 = math.log(10.0)
_NUDGE_WINDOW = 1e-12
_NUDGE = 1e-13


def _sign(x) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class ConstantPiece:
    """V(x) = V0.  Below V0 the basis is exp(+q(x-ref)), exp(-q(x-ref))."""

    V0: float
    scale: float = 1.0

    kind = "constant"

    def potential(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.V0)

    def asymptote(self, side: int) -> float:
        return self.V0

    def v_min(self, lo: float, hi: float) -> float:
        return self.V0

    def allowed(self, E: float, lo: float, hi: float):
        return (lo, hi) if self.V0 <= E else None

    def _kind(self, E):
        d = self.V0 - E
        if d > 0:
            return "exp", math.sqrt(d)
        if d < 0:
            return "trig", math.sqrt(-d)
        return "lin", 0.0

    def mp_values(self, x, E, ref):
        """(phi1, phi1', phi2, phi2') at x in mp."""
        ctx = mp_context()
        kind, q = self._kind(E)
        s = ctx.mpf(self.scale)
        y = ctx.mpf(x) - ctx.mpf(ref)
        q = ctx.mpf(q)
        if kind == "exp":
            ep, em = ctx.exp(q * y), ctx.exp(-q * y)
            vals = (ep, q * ep, em, -q * em)
        elif kind == "trig":
            c, sn = ctx.cos(q * y), ctx.sin(q * y)
            vals = (c, -q * sn, sn, q * c)
        else:
            vals = (ctx.one, ctx.zero, y, ctx.one)
        return tuple(s * v for v in vals)

    def grid_values(self, x, E, ref):
        """(phi1, |phi1|, phi2, |phi2|) on a float grid."""
        kind, q = self._kind(E)
        y = np.asarray(x, dtype=float) - ref
        if kind == "exp":
            a, b = np.exp(q * y), np.exp(-q * y)
        elif kind == "trig":
            a, b = np.cos(q * y), np.sin(q * y)
        else:
            a, b = np.ones_like(y), y
        a, b = self.scale * a, self.scale * b
        return a, np.abs(a), b, np.abs(b)

    def left_decaying(self, E):
        if self._kind(E)[0] != "exp":
            raise ChainError(f"E={E} is not below the left asymptote {self.V0}")
        return (1, 0)

    def right_growth(self, c, E):
        if self._kind(E)[0] != "exp":
            raise ChainError(f"E={E} is not below the right asymptote {self.V0}")
        return c[0] * self.scale

    def degenerate(self, E) -> bool:
        return False


@dataclass(frozen=True)
class MorsePiece:
    """Morse segment in the local coordinate y = sigma (x - x0).

    Basis: phi1 = t^(-1/2) M_{kappa,mu}(t) (decays as y -> +inf),
    phi2 = t^(-1/2) M_{kappa,-mu}(t) (grows), t = (2 gamma2/alpha) exp(-alpha y),
    mu = sqrt(-E)/alpha.  Needs E < 0.
    """

    alpha: float
    gamma1: float
    gamma2: float
    sigma: int = 1
    x0: float = 0.0
    scale: float = 1.0

    kind = "morse"

    def __post_init__(self):
        if self.sigma not in (1, -1):
            raise ChainError(f"sigma must be +1 or -1, got {self.sigma}")
        MorseParams(self.alpha, self.gamma1, self.gamma2)

    @property
    def kappa(self) -> float:
        return self.gamma1**2 / (self.alpha * self.gamma2)

    def _y(self, x):
        return self.sigma * (np.asarray(x, dtype=float) - self.x0)

    def potential(self, x):
        with np.errstate(over="ignore", invalid="ignore"):
            e1 = np.exp(-self.alpha * self._y(x))
            v = -2.0 * self.gamma1**2 * e1 + self.gamma2**2 * e1 * e1
            return np.where(np.isinf(e1), np.inf, v)

    def asymptote(self, side: int) -> float:
        """Limit of V as x -> side * infinity."""
        return 0.0 if side == self.sigma else math.inf

    def v_min(self, lo: float, hi: float) -> float:
        cands = [float(self.potential(x)) for x in (lo, hi) if math.isfinite(x)]
        y_star = math.log(self.gamma2**2 / self.gamma1**2) / self.alpha
        x_star = self.x0 + self.sigma * y_star
        if lo <= x_star <= hi:
            cands.append(-self.gamma1**4 / self.gamma2**2)
        if (self.sigma == 1 and hi == math.inf) or (self.sigma == -1 and lo == -math.inf):
            cands.append(0.0)
        return min(cands)

    def allowed(self, E: float, lo: float, hi: float):
        g1s, g2s = self.gamma1**2, self.gamma2**2
        disc = g1s * g1s + g2s * E
        if disc < 0:
            return None
        root = math.sqrt(disc)
        u_hi = (g1s + root) / g2s
        u_lo = (g1s - root) / g2s
        y_lo = -math.log(u_hi) / self.alpha
        y_hi = math.inf if u_lo <= 0 else -math.log(u_lo) / self.alpha
        xs = sorted(self.x0 + self.sigma * y for y in (y_lo, y_hi))
        a, b = max(xs[0], lo), min(xs[1], hi)
        if a > b:
            return None
        return a, b

    def _mu(self, E):
        if not E < 0:
            raise ChainError(f"Morse segment needs E < 0, got E={E}")
        ctx = mp_context()
        mu = ctx.sqrt(-ctx.mpf(E)) / ctx.mpf(self.alpha)
        two_mu = 2 * mu
        if abs(two_mu - ctx.nint(two_mu)) < _NUDGE_WINDOW:
            mu = mu * (1 + ctx.mpf(_NUDGE))
        return mu

    def degenerate(self, E) -> bool:
        if not E < 0:
            return False
        two_mu = 2.0 * math.sqrt(-E) / self.alpha
        return abs(two_mu - round(two_mu)) < DEGENERATE_GAP

    def mp_values(self, x, E, ref=None, acc: Accuracy = DEFAULT_ACCURACY):
        ctx = mp_context()
        y = self.sigma * (ctx.mpf(x) - ctx.mpf(self.x0))
        alpha = ctx.mpf(self.alpha)
        t = 2 * ctx.mpf(self.gamma2) / alpha * ctx.exp(-alpha * y)
        dps = acc.working_precision + int(math.ceil(float(t) / _LN10)) + 10
        with ctx.workdps(dps):
            mu = self._mu(E)
            sub = Accuracy(acc.rel_tol, acc.max_terms, dps)
            out = []
            sq = ctx.sqrt(t)
            for m in (mu, -mu):
                w, dw = whittaker_m_and_dz(self.kappa, m, t, sub)
                dy = -alpha * (sq * dw - w / (2 * sq))
                out.extend([w / sq, self.sigma * dy])
        s = ctx.mpf(self.scale)
        return tuple(s * v for v in out)

    def grid_values(self, x, E, ref=None):
        mu = float(self._mu(E))
        t = 2.0 * self.gamma2 / self.alpha * np.exp(-self.alpha * self._y(x))
        out = []
        for m in (mu, -mu):
            vals, abs_sum = kummer_m_grid(m - self.kappa + 0.5, 1.0 + 2.0 * m, t)
            pre = np.exp(-t / 2.0) * t**m
            out.extend([self.scale * pre * vals, self.scale * pre * abs_sum])
        return tuple(out)

    def _gamma_ratios(self, E):
        ctx = mp_context()
        mu = self._mu(E)
        kappa = ctx.mpf(self.kappa)
        half = ctx.mpf(0.5)
        return ctx, mu, kappa, half

    def left_decaying(self, E):
        ctx, mu, kappa, half = self._gamma_ratios(E)
        if self.sigma == -1:
            return (1, 0)
        # W_{kappa,mu}, recessive as t -> infinity (x -> -infinity)
        return (
            ctx.gamma(-2 * mu) * ctx.rgamma(half - mu - kappa) / self.scale,
            ctx.gamma(2 * mu) * ctx.rgamma(half + mu - kappa) / self.scale,
        )

    def right_growth(self, c, E):
        if self.sigma == 1:
            return c[1] * self.scale
        # coefficient of exp(t/2) t^(-kappa) as t -> infinity (x -> +infinity)
        ctx, mu, kappa, half = self._gamma_ratios(E)
        return self.scale * (
            c[0] * ctx.gamma(1 + 2 * mu) * ctx.rgamma(half + mu - kappa)
            + c[1] * ctx.gamma(1 - 2 * mu) * ctx.rgamma(half - mu - kappa)
        )


_PIECES = {"constant": ConstantPiece, "morse": MorsePiece}


@dataclass(frozen=True)
class Segment:
    """One piece of the chain on [a_left, a_right]; c1, c2 are filled by solving."""

    a_left: float
    a_right: float
    piece: object
    c1: object = None
    c2: object = None

    @property
    def ref(self) -> float:
        """Expansion point of the constant-potential basis (a finite end)."""
        return self.a_left if math.isfinite(self.a_left) else (
            self.a_right if math.isfinite(self.a_right) else 0.0
        )

    def values(self, x, E):
        return self.piece.mp_values(x, E, self.ref)

    def grid(self, x, E):
        return self.piece.grid_values(x, E, self.ref)


class Transfer:
    """2x2 relation c_right = T c_left, entries in mp."""

    def __init__(self, m):
        self.m = tuple(tuple(row) for row in m)

    def apply(self, c):
        (a, b), (d, e) = self.m
        return (a * c[0] + b * c[1], d * c[0] + e * c[1])

    def __matmul__(self, other: "Transfer") -> "Transfer":
        (a, b), (c, d) = self.m
        (e, f), (g, h) = other.m
        return Transfer(((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h)))

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.m])


def match_boundary(left: Segment, right: Segment, a: float, E: float) -> Transfer:
    """Transfer matrix from continuity of psi and psi' at x = a."""
    ctx = mp_context()
    l1, dl1, l2, dl2 = left.values(a, E)
    r1, dr1, r2, dr2 = right.values(a, E)
    det = r1 * dr2 - r2 * dr1
    scale = (abs(r1) + abs(r2)) * (abs(dr1) + abs(dr2))
    if det == 0 or abs(det) < ctx.mpf(10) ** (8 - ctx.dps) * scale:
        raise SingularTransfer(f"right basis Wronskian vanishes at a={a} (E={E})")
    # inverse of [[r1, r2], [dr1, dr2]] times [[l1, l2], [dl1, dl2]]
    m11 = (dr2 * l1 - r2 * dl1) / det
    m12 = (dr2 * l2 - r2 * dl2) / det
    m21 = (-dr1 * l1 + r1 * dl1) / det
    m22 = (-dr1 * l2 + r1 * dl2) / det
    return Transfer(((m11, m12), (m21, m22)))


@dataclass(frozen=True)
class SegmentChain:
    """Ordered segments covering the real line at trial energy E."""

    segments: tuple
    E: float
    n_grid: int = 2000
    _solved: bool = field(default=False, repr=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ChainError("a chain needs at least one segment")
        if segs[0].a_left != -math.inf or segs[-1].a_right != math.inf:
            raise ChainError("the first segment must start at -inf and the last end at +inf")
        for s in segs:
            if not s.a_left < s.a_right:
                raise ChainError(f"segment bounds not ordered: {s.a_left} >= {s.a_right}")
        for s, t in zip(segs, segs[1:]):
            if s.a_right != t.a_left:
                raise ChainError(f"segments do not share a boundary: {s.a_right} vs {t.a_left}")
            if not math.isfinite(s.a_right):
                raise ChainError("interior boundaries must be finite")
        if not self.E < self.threshold:
            raise ChainError(
                f"E={self.E} must lie below both asymptotes (threshold {self.threshold})"
            )

    @property
    def boundaries(self) -> list[float]:
        return [s.a_right for s in self.segments[:-1]]

    @property
    def threshold(self) -> float:
        return min(
            self.segments[0].piece.asymptote(-1), self.segments[-1].piece.asymptote(+1)
        )

    def v_min(self) -> float:
        return min(s.piece.v_min(s.a_left, s.a_right) for s in self.segments)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for s in self.segments:
            sel = (x >= s.a_left) & (x <= s.a_right)
            out[sel] = s.piece.potential(x[sel])
        return out

    def degenerate(self) -> bool:
        return any(s.piece.degenerate(self.E) for s in self.segments)

    def solve(self) -> "SegmentChain":
        """Chain with every segment's (c1, c2) filled from the left-decaying start."""
        if self._solved:
            return self
        ctx = mp_context()
        with ctx.workdps(DEFAULT_ACCURACY.working_precision + 10):
            c = self.segments[0].piece.left_decaying(self.E)
            out = [replace(self.segments[0], c1=c[0], c2=c[1])]
            for left, right in zip(self.segments, self.segments[1:]):
                c = match_boundary(left, right, left.a_right, self.E).apply(c)
                out.append(replace(right, c1=c[0], c2=c[1]))
        return replace(self, segments=tuple(out), _solved=True)

    def secular(self):
        chain = self.solve()
        last = chain.segments[-1]
        return last.piece.right_growth((last.c1, last.c2), self.E)

    def window(self):
        """[first, last] classically allowed point, or None."""
        pts = [s.piece.allowed(self.E, s.a_left, s.a_right) for s in self.segments]
        pts = [p for p in pts if p is not None]
        if not pts:
            return None
        lo, hi = min(p[0] for p in pts), max(p[1] for p in pts)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ChainError("allowed region is unbounded; E is not below the threshold")
        return lo, hi

    def psi(self, x) -> np.ndarray:
        """psi on a float grid, up to a positive factor; near-zero values redone in mp."""
        chain = self.solve()
        x = np.asarray(x, dtype=float)
        scale = max(max(abs(s.c1), abs(s.c2)) for s in chain.segments)
        out = np.empty_like(x)
        err = np.empty_like(x)
        for s in chain.segments:
            sel = (x >= s.a_left) & (x <= s.a_right)
            if not np.any(sel):
                continue
            c1, c2 = float(s.c1 / scale), float(s.c2 / scale)
            p1, a1, p2, a2 = s.grid(x[sel], self.E)
            with np.errstate(invalid="ignore", over="ignore"):
                out[sel] = c1 * p1 + c2 * p2
                err[sel] = 1e-14 * (abs(c1) * a1 + abs(c2) * a2)
        bad = ~(np.abs(out) > 1e3 * err) | ~np.isfinite(out)
        for i in np.flatnonzero(bad):
            out[i] = float(chain._psi_mp(x[i]) / scale)
        return out

    def _psi_mp(self, x):
        for s in self.segments:
            if s.a_left <= x <= s.a_right:
                v1, _, v2, _ = s.values(x, self.E)
                return s.c1 * v1 + s.c2 * v2
        raise ChainError(f"x={x} is outside the chain")

    def nodes(self) -> list[float]:
        win = self.window()
        if win is None:
            return []
        return _scan_nodes(self.psi, win[0], win[1], self.n_grid, self.v_min(), self.E)


def secular(chain: SegmentChain):
    """Coefficient of the component growing at +infinity (zero at bound states)."""
    return chain.secular()


def bracket_secular(
    chain_builder: Callable[[float], SegmentChain],
    n: int,
    tol: float,
    *,
    k_seed_lo: float | None = None,
    k_seed_hi: float | None = None,
) -> EnergyBracket:
    """Certified bracket for the n-th bound state of a chain.

    k is measured from the threshold: E = threshold - k^2.  Node counts are
    taken on a composite grid across the segments.
    """
    probe_chain = _reference_chain(chain_builder)
    thr = probe_chain.threshold
    v_min = probe_chain.v_min()
    if not v_min < thr:
        raise NoSuchLevel("potential never dips below its asymptotes", found=0)
    k_top = math.sqrt(thr - v_min)

    def fn(k):
        chain = chain_builder(thr - float(k) ** 2)
        return Probe(k=k, nodes=len(chain.nodes()), sign=_sign(chain.secular()))

    def safe(k):
        return not chain_builder(thr - float(k) ** 2).degenerate()

    seeds = None
    if k_seed_lo is not None and k_seed_hi is not None:
        seeds = (k_seed_lo, k_seed_hi)
    return drive(fn, n, k_top, tol, seeds=seeds, parity=None, threshold=thr, safe=safe)


def _reference_chain(chain_builder) -> SegmentChain:
    """The chain at some admissible energy, used to read thresholds and minima."""
    # construction only validates the layout, so a very low energy is always admissible
    return chain_builder(-1e300)


def _bound(value) -> float:
    if value is None:
        return math.nan
    if isinstance(value, str):
        return float(value.replace("infinity", "inf"))
    return float(value)


def chain_from_dict(data) -> Callable[[float], SegmentChain]:
    """Chain builder from a parsed chain description (see module docstring)."""
    items = data["segments"] if isinstance(data, dict) else data
    n_grid = data.get("n_grid", 2000) if isinstance(data, dict) else 2000
    segs = []
    last = len(items) - 1
    for i, item in enumerate(items):
        kind = item.get("type")
        if kind not in _PIECES:
            raise ChainError(f"unknown segment type {kind!r}; expected one of {sorted(_PIECES)}")
        try:
            piece = _PIECES[kind](**item.get("params", {}))
        except TypeError as exc:
            raise ChainError(f"bad params for {kind} segment {i}: {exc}") from exc
        a_left, a_right = _bound(item.get("a_left")), _bound(item.get("a_right"))
        if math.isnan(a_left):
            a_left = -math.inf if i == 0 else math.nan
        if math.isnan(a_right):
            a_right = math.inf if i == last else math.nan
        if math.isnan(a_left) or math.isnan(a_right):
            raise ChainError(f"segment {i} has a missing interior boundary")
        segs.append(Segment(a_left, a_right, piece))
    segs = tuple(segs)

    def build(E: float) -> SegmentChain:
        return SegmentChain(segs, E, n_grid=n_grid)

    build(-1e300)
    return build


def load_chain(path) -> Callable[[float], SegmentChain]:
    """Read a chain description file and return its builder E -> SegmentChain."""
    with open(Path(path), encoding="utf-8") as fh:
        return chain_from_dict(json.load(fh))


def chain_builder(segments: Sequence[Segment], n_grid: int = 2000):
    segs = tuple(segments)

    def build(E: float) -> SegmentChain:
        return SegmentChain(segs, E, n_grid=n_grid)

    return build


def square_well_chain(V0: float, a: float, n_grid: int = 2000):
    """V = -V0 on |x| < a, 0 outside."""
    return chain_builder(
        [
            Segment(-math.inf, -a, ConstantPiece(0.0)),
            Segment(-a, a, ConstantPiece(-V0)),
            Segment(a, math.inf, ConstantPiece(0.0)),
        ],
        n_grid,
    )


def sym_morse_chain(p: MorseParams, n_grid: int = 2000):
    """V_morse(|x| - d) as two mirrored Morse segments matched at the origin."""
    return chain_builder(
        [
            Segment(-math.inf, 0.0, MorsePiece(p.alpha, p.gamma1, p.gamma2, -1, -p.shift)),
            Segment(0.0, math.inf, MorsePiece(p.alpha, p.gamma1, p.gamma2, 1, p.shift)),
        ],
        n_grid,
    )


def full_line_morse_chain(p: MorseParams, center: float = 0.0, n_grid: int = 2000):
    """The ordinary Morse potential V_morse(x - center) as a single segment."""
    return chain_builder(
        [Segment(-math.inf, math.inf, MorsePiece(p.alpha, p.gamma1, p.gamma2, 1, center))],
        n_grid,
    )
