"""Certified energy brackets by node counting and tail-sign bisection.

A trial k is classified by the pair (bulk node count m, sign of L).  The
number of zeros of the regular solution on the whole half-line is then

    N = m + [sign(L) != (-1)^m]

because outside the classically allowed window the solution can cross zero
at most once more, and does so exactly when its tail sign disagrees with
the sign it leaves the window with.  By the oscillation theorem N equals the
number of sector levels below E = -k^2, so bisection on N brackets level n.

The same driver serves the piecewise matcher, with k measured from the
lower of the two asymptotic potential values.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

from .errors import NoSuchLevel, PrecisionFloor, PreconditionError
from .potentials import HalfLineModel, MorseParams
from .regular import DEFAULT_CONFIG, EnergyTrial, Parity, SolverConfig, build_regular
from .specfun import mp_context

log = logging.getLogger(__name__)

__all__ = [
    "EnergyBracket",
    "Probe",
    "GapEstimate",
    "SpectrumEntry",
    "classify",
    "bracket_level",
    "refine_bracket",
    "spectrum",
    "degeneracy_gap",
]

SCAN_RATIO = 0.98
TOP_MARGIN = 1e-9
FLOOR_FRACTION = 1e-6
MAX_SCAN_STEPS = 200
MIN_K_TOL = 1e-12
EXACT_HIT_SHRINK = 1e-13
# Whittaker bases lose ~log10(1/delta) float digits at distance delta from
# integral 2 mu; probes are steered at least this far away.
DEGENERATE_GAP = 1e-5
WHITTAKER_FLOOR_MU = 1e-4
_STEER = (0.0, 0.125, -0.125, 0.25, -0.25, 0.375, -0.375)


@dataclass(frozen=True)
class Probe:
    """Classification of one trial k."""

    k: object
    nodes: int
    sign: int
    value: object = None

    @property
    def zeros(self) -> int:
        """Zeros on the whole half-line, i.e. sector levels below this energy."""
        if self.sign == 0:
            return self.nodes
        return self.nodes + (0 if self.sign == (-1) ** self.nodes else 1)


@dataclass(frozen=True)
class EnergyBracket:
    """k_lo < k_n < k_hi, with E = threshold - k^2.

    ``node_evidence`` and ``sign_evidence`` are given as (at k_lo, at k_hi).
    """

    level: int
    parity: Parity | None
    k_lo: object
    k_hi: object
    node_evidence: tuple[int, int]
    sign_evidence: tuple[int, int]
    evaluations: int
    threshold: float = 0.0

    def __post_init__(self):
        if not self.k_lo < self.k_hi:
            raise ValueError(f"empty bracket: k_lo={self.k_lo} >= k_hi={self.k_hi}")

    @property
    def e_lo(self):
        return self.threshold - self.k_hi * self.k_hi

    @property
    def e_hi(self):
        return self.threshold - self.k_lo * self.k_lo

    @property
    def k_mid(self):
        return (self.k_lo + self.k_hi) / 2

    @property
    def e_mid(self):
        return (self.e_lo + self.e_hi) / 2

    @property
    def width(self):
        return self.k_hi - self.k_lo

    @property
    def e_width(self):
        return self.e_hi - self.e_lo

    def contains_k(self, k) -> bool:
        return self.k_lo < k < self.k_hi

    def contains_energy(self, e) -> bool:
        return self.e_lo < e < self.e_hi


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def whittaker_safe(alpha: float) -> Callable[[object], bool]:
    """Predicate: 2k/alpha is not within DEGENERATE_GAP of an integer."""

    def safe(k) -> bool:
        two_mu = 2.0 * float(k) / alpha
        return abs(two_mu - round(two_mu)) >= DEGENERATE_GAP

    return safe


def _always_safe(k) -> bool:
    return True


def _outward(k, safe, direction: int):
    """Nearest safe k obtained by moving k in ``direction`` (+1 up, -1 down)."""
    step = 0
    while not safe(k) and step < 100:
        k = k * (1.0 + direction * DEGENERATE_GAP)
        step += 1
    return k


def _midpoint(lo, hi, safe):
    w = hi - lo
    for f in _STEER:
        k = (lo + hi) / 2 + f * w
        if lo < k < hi and safe(k):
            return k
    return (lo + hi) / 2


def _k_top(model: HalfLineModel) -> float:
    v_min = model.v_min()
    if not v_min < 0:
        raise NoSuchLevel("potential has no negative part; no bound states", found=0)
    return math.sqrt(-v_min)


def _reliable_wave(p, k, parity, config, flipped, extra_digits=0, retries=6):
    """Regular wave whose tail sign is resolved, raising precision as needed."""
    for _ in range(retries):
        wave = build_regular(
            p, EnergyTrial.from_k(k, p), parity, config, flipped=flipped, extra_digits=extra_digits
        )
        if wave.tail_sign_reliable:
            return wave
        extra_digits += 20
    log.warning("tail sign at k=%s unresolved after %d precision increases", k, retries)
    return wave


def _probe(p, k, parity, config, flipped, extra_digits=0) -> Probe:
    wave = _reliable_wave(p, k, parity, config, flipped, extra_digits)
    # the wave may carry a nudged k; the evidence belongs to that k
    return Probe(k=wave.trial.k, nodes=wave.node_count(), sign=_sign(wave.c_grow), value=wave.c_grow)


def classify(p: MorseParams, k, parity, config: SolverConfig | None = None, *, flipped=False):
    """(bulk node count, sign of L) at E = -k^2.

    Raises PreconditionError unless min V < E < 0.
    """
    parity = Parity.parse(parity)
    model = HalfLineModel(p, flipped)
    e = -float(k) ** 2
    if not (k > 0 and e > model.v_min()):
        raise PreconditionError(
            f"E = -k^2 = {e:.10g} must lie in (min V, 0) = ({model.v_min():.10g}, 0)"
        )
    pr = _probe(p, k, parity, config or DEFAULT_CONFIG, flipped)
    return pr.nodes, pr.sign


class _Counter:
    def __init__(self, fn: Callable[[object], Probe]):
        self.fn = fn
        self.calls = 0

    def __call__(self, k) -> Probe:
        self.calls += 1
        return self.fn(k)


def _check_tol(k_tol):
    if not k_tol > 0:
        raise ValueError(f"k_tol must be positive, got {k_tol}")
    if k_tol < MIN_K_TOL:
        raise PrecisionFloor(
            f"k_tol = {k_tol:g} is below the double-precision certification floor {MIN_K_TOL:g}"
        )


def _scan(probe: _Counter, n: int, k_top: float, safe, k_floor) -> tuple[Probe, Probe]:
    """(lo, hi) probes with zeros(lo) > n >= zeros(hi), scanning k downward.

    Levels shallower than threshold - k_floor^2 are not searched for.
    """
    floor = probe(_outward(k_floor, safe, -1))
    if floor.zeros <= n:
        raise NoSuchLevel(
            f"level {n} not found: only {floor.zeros} level(s) in this sector", found=floor.zeros
        )
    hi = probe(_outward(k_top * (1.0 - TOP_MARGIN), safe, -1))
    if hi.zeros > n:
        raise PreconditionError("levels found at the bottom of the well; check the potential")
    k = hi.k
    for _ in range(MAX_SCAN_STEPS):
        k *= SCAN_RATIO
        if k <= floor.k:
            return floor, hi
        cur = probe(_outward(k, safe, -1))
        if cur.zeros > n:
            return cur, hi
        hi = cur
    return floor, hi


def _done(lo: Probe, hi: Probe, n: int, k_tol) -> bool:
    return (
        hi.k - lo.k <= k_tol
        and lo.nodes == n
        and hi.nodes == n
        and lo.zeros == n + 1
        and hi.zeros == n
    )


def drive(
    fn: Callable[[object], Probe],
    n: int,
    k_top: float,
    k_tol: float,
    *,
    seeds: tuple[float, float] | None = None,
    parity: Parity | None = None,
    threshold: float = 0.0,
    safe: Callable[[object], bool] = _always_safe,
    k_floor: float | None = None,
) -> EnergyBracket:
    """Bracket the k of level n for any classifier ``fn``.

    ``fn(k)`` must return a Probe whose ``zeros`` is the number of levels
    below threshold - k^2.  Probe points for which ``safe`` is false are
    moved to nearby points (inside the current bracket) when possible.
    """
    if n < 0:
        raise ValueError(f"level index must be >= 0, got {n}")
    _check_tol(k_tol)
    probe = _Counter(fn)
    lo = hi = None
    if seeds is not None:
        s_lo, s_hi = sorted(seeds)
        s_lo, s_hi = _outward(s_lo, safe, -1), _outward(s_hi, safe, +1)
        if 0 < s_lo < s_hi:
            a, b = probe(s_lo), probe(s_hi)
            if a.zeros > n >= b.zeros:
                lo, hi = a, b
            else:
                log.info("seeds (%g, %g) do not straddle level %d; scanning", s_lo, s_hi, n)
    if lo is None:
        if k_floor is None:
            k_floor = k_top * FLOOR_FRACTION
        lo, hi = _scan(probe, n, k_top, safe, k_floor)
    while not _done(lo, hi, n, k_tol):
        mid = _midpoint(lo.k, hi.k, safe)
        if not lo.k < mid < hi.k:
            raise PrecisionFloor(
                f"bisection exhausted double precision at k = {mid!r} before the "
                f"evidence settled (nodes {lo.nodes}/{hi.nodes})"
            )
        cur = probe(mid)
        if cur.sign == 0:
            return EnergyBracket(
                level=n,
                parity=parity,
                k_lo=mid * (1 - EXACT_HIT_SHRINK),
                k_hi=mid * (1 + EXACT_HIT_SHRINK),
                node_evidence=(cur.nodes, cur.nodes),
                sign_evidence=(0, 0),
                evaluations=probe.calls,
                threshold=threshold,
            )
        if cur.zeros > n:
            lo = cur
        else:
            hi = cur
    return EnergyBracket(
        level=n,
        parity=parity,
        k_lo=lo.k,
        k_hi=hi.k,
        node_evidence=(lo.nodes, hi.nodes),
        sign_evidence=(lo.sign, hi.sign),
        evaluations=probe.calls,
        threshold=threshold,
    )


def bracket_level(
    p: MorseParams,
    n: int,
    parity,
    k_tol: float = 1e-8,
    k_seed_lo: float | None = None,
    k_seed_hi: float | None = None,
    config: SolverConfig | None = None,
    *,
    flipped: bool = False,
) -> EnergyBracket:
    """Certified bracket of width <= k_tol around level n of one parity sector.

    Raises NoSuchLevel if the sector has fewer than n + 1 levels and
    PrecisionFloor if k_tol < 1e-12.
    """
    parity = Parity.parse(parity)
    config = config or DEFAULT_CONFIG
    k_top = _k_top(HalfLineModel(p, flipped))
    seeds = None
    if k_seed_lo is not None and k_seed_hi is not None:
        seeds = (k_seed_lo, k_seed_hi)

    def fn(k):
        return _probe(p, k, parity, config, flipped)

    # near k = 0 both basis members merge (2 mu -> 0), so the floor sits at mu = 1e-4
    k_floor = max(k_top * FLOOR_FRACTION, WHITTAKER_FLOOR_MU * p.alpha)
    return drive(
        fn, n, k_top, k_tol, seeds=seeds, parity=parity,
        safe=whittaker_safe(p.alpha), k_floor=k_floor,
    )


def refine_bracket(
    p: MorseParams,
    bracket: EnergyBracket,
    k_tol,
    config: SolverConfig | None = None,
    *,
    flipped: bool = False,
    max_evaluations: int = 200,
) -> EnergyBracket:
    """Shrink a certified bracket below double precision.

    Inside a certified bracket only the sign of L matters, so the endpoints
    are updated by Illinois-modified regula falsi in extended precision;
    the working precision follows the relative width being resolved.
    Returns mpf endpoints; node evidence is inherited from ``bracket``.
    """
    config = config or DEFAULT_CONFIG
    parity = bracket.parity
    ctx = mp_context()
    with ctx.workdps(30):
        if ctx.mpf(bracket.width) <= k_tol:
            return bracket

    def digits_for(width, k):
        return max(0, int(math.ceil(-float(ctx.log10(width / k))))) + 10

    def evaluate(k, width):
        extra = digits_for(width, k)
        with ctx.workdps(config.acc.working_precision + extra + 20):
            pr = _probe_sign(p, k, parity, config, flipped, extra)
        return pr

    dps = config.acc.working_precision + digits_for(k_tol, bracket.k_hi) + 20
    evals = bracket.evaluations
    with ctx.workdps(dps):
        a, b = ctx.mpf(bracket.k_lo), ctx.mpf(bracket.k_hi)
        fa = evaluate(a, b - a)
        fb = evaluate(b, b - a)
        evals += 2
        if _sign(fa) == _sign(fb) or fa == 0 or fb == 0:
            raise PreconditionError("bracket endpoints do not carry opposite tail signs")
        sa, sb = _sign(fa), _sign(fb)
        side = 0
        while b - a > k_tol:
            if evals - bracket.evaluations >= max_evaluations:
                raise PrecisionFloor(
                    f"refinement stalled at width {ctx.nstr(b - a, 5)} after {max_evaluations} steps"
                )
            w = b - a
            c = (a * fb - b * fa) / (fb - fa)
            if not a < c < b:
                c = (a + b) / 2
            fc = evaluate(c, w)
            evals += 1
            if fc == 0:
                a, b = c * (1 - ctx.mpf(k_tol) / 4 / c), c * (1 + ctx.mpf(k_tol) / 4 / c)
                break
            if _sign(fc) == sb:
                b, fb = c, fc
                if side == 1:
                    fa /= 2
                side = 1
            else:
                a, fa = c, fc
                if side == -1:
                    fb /= 2
                side = -1
        return replace(
            bracket,
            k_lo=+a,
            k_hi=+b,
            sign_evidence=(sa, sb),
            evaluations=evals,
        )


def _probe_sign(p, k, parity, config, flipped, extra_digits):
    return _reliable_wave(p, k, parity, config, flipped, extra_digits).c_grow


@dataclass(frozen=True)
class SpectrumEntry:
    """One requested level; ``bracket`` is None when the level does not exist."""

    index: int
    parity: Parity
    bracket: EnergyBracket | None
    missing: NoSuchLevel | None = field(default=None, compare=False)

    @property
    def found(self) -> bool:
        return self.bracket is not None


def _disjoint(lower: EnergyBracket, upper: EnergyBracket) -> bool:
    return lower.e_hi < upper.e_lo


def spectrum(
    p: MorseParams,
    n_max: int,
    k_tol: float = 1e-8,
    config: SolverConfig | None = None,
    *,
    flipped: bool = False,
    parities=(Parity.EVEN, Parity.ODD),
) -> list[SpectrumEntry]:
    """Global levels 0..n_max of the symmetric problem, merged from both sectors.

    Level j has parity (-1)^j and is level j // 2 of its sector.  Missing
    levels are returned with ``bracket=None``.  Neighbouring brackets that
    overlap in energy (near-degenerate pairs) are refined until disjoint.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    config = config or DEFAULT_CONFIG
    parities = tuple(Parity.parse(q) for q in parities)
    exhausted: dict[Parity, NoSuchLevel] = {}
    entries: list[SpectrumEntry] = []
    for j in range(n_max + 1):
        parity = Parity.EVEN if j % 2 == 0 else Parity.ODD
        if parity not in parities:
            continue
        if parity in exhausted:
            entries.append(SpectrumEntry(j, parity, None, exhausted[parity]))
            continue
        try:
            br = bracket_level(p, j // 2, parity, k_tol, config=config, flipped=flipped)
            entries.append(SpectrumEntry(j, parity, br))
        except NoSuchLevel as exc:
            exhausted[parity] = exc
            entries.append(SpectrumEntry(j, parity, None, exc))
    _separate(p, entries, k_tol, config, flipped)
    return entries


def _separate(p, entries, k_tol, config, flipped, max_rounds=12):
    found = [e for e in entries if e.found]
    for i in range(len(found) - 1):
        lower, upper = found[i], found[i + 1]
        tol = k_tol
        rounds = 0
        while not _disjoint(lower.bracket, upper.bracket):
            if rounds >= max_rounds:
                raise PrecisionFloor(
                    f"levels {lower.index} and {upper.index} could not be separated"
                )
            tol = min(tol, min(lower.bracket.width, upper.bracket.width)) / 1e4
            lower = replace(lower, bracket=refine_bracket(p, lower.bracket, tol, config, flipped=flipped))
            upper = replace(upper, bracket=refine_bracket(p, upper.bracket, tol, config, flipped=flipped))
            rounds += 1
        found[i], found[i + 1] = lower, upper
        for e in (lower, upper):
            entries[[x.index for x in entries].index(e.index)] = e


@dataclass(frozen=True)
class GapEstimate:
    """|E_odd - E_even| from bracket midpoints, with its bracket-width bound."""

    gap: object
    uncertainty: object
    even: EnergyBracket
    odd: EnergyBracket

    def __float__(self) -> float:
        return float(self.gap)


def degeneracy_gap(
    p: MorseParams,
    pair_index: int,
    k_tol: float = 1e-8,
    config: SolverConfig | None = None,
    *,
    rel_uncertainty: float = 1e-3,
    max_rounds: int = 40,
) -> GapEstimate:
    """Energy splitting of the pair_index-th even/odd doublet.

    The double-precision brackets are refined in extended precision until
    the summed E-widths fall below ``rel_uncertainty`` times the gap, so
    tunnelling splittings far below 1e-16 are resolved.
    """
    config = config or DEFAULT_CONFIG
    even = bracket_level(p, pair_index, Parity.EVEN, k_tol, config=config)
    odd = bracket_level(
        p, pair_index, Parity.ODD, k_tol,
        even.k_lo - 10 * k_tol, even.k_hi + 10 * k_tol, config=config,
    )
    ctx = mp_context()
    tol = k_tol
    for _ in range(max_rounds):
        with ctx.workdps(60 + 2 * int(max(0.0, -math.log10(float(tol))))):
            gap = abs(ctx.mpf(odd.e_mid) - ctx.mpf(even.e_mid))
            unc = abs(ctx.mpf(odd.e_width)) + abs(ctx.mpf(even.e_width))
            if gap > 0 and unc <= rel_uncertainty * gap:
                return GapEstimate(+gap, +unc, even, odd)
            if gap > 0 and unc < gap:
                target = ctx.mpf(rel_uncertainty) * gap / (8 * ctx.mpf(even.k_mid))
            else:
                # gap not yet resolved: double the number of digits sought
                target = ctx.mpf(tol) ** 2
            tol = min(ctx.mpf(tol), target)
        even = refine_bracket(p, even, tol, config)
        odd = refine_bracket(p, odd, tol, config)
    raise PrecisionFloor(f"gap of pair {pair_index} not resolved after {max_rounds} refinements")
