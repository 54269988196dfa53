"""Command-line interface: spectra, wavefunction profiles and cross-checks.

Units are hbar = 2m = 1 throughout (kinetic term -d^2/dx^2); all inputs
are dimensionless.

    symmorse spectrum --potential sym-morse --d 1 --alpha 1 --gamma 1.8 --levels 2 --ktol 1e-6
    symmorse wavefunction --d 1 --alpha 1 --gamma 1.8 --k 1.355765 --perturb 5e-6
    symmorse compare --potential morse --alpha 1 --gamma 1

Exit codes: 0 success, 1 usage error, 2 a requested level does not exist,
3 a comparison failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bracketer import EnergyBracket, SpectrumEntry, bracket_level, spectrum
from .errors import NoSuchLevel, SymMorseError
from .oracle import ShootingConfig, dirichlet_eigenvalue, eigenvalue, full_line_eigenvalue
from .piecewise import bracket_secular, full_line_morse_chain, load_chain
from .potentials import MorseParams, exact_full_line_morse_spectrum
from .regular import EnergyTrial, Parity, SolverConfig, build_regular

log = logging.getLogger("symmorse")

EXIT_OK, EXIT_USAGE, EXIT_NO_LEVEL, EXIT_FAIL = 0, 1, 2, 3
POTENTIALS = ("morse", "sym-morse", "single-well", "chain-file")
SPECTRUM_COLUMNS = (
    "index", "parity", "k_lo", "k_hi", "E_lo", "E_hi", "nodes", "evaluations", "closed_form_E",
)
COMPARE_COLUMNS = (
    "index", "parity", "E_lo", "E_hi", "E_mid", "E_oracle", "delta_oracle",
    "closed_form_E", "delta_closed", "status",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Validated command options."""

    command: str
    potential: str
    params: MorseParams | None = None
    chain: str | None = None
    levels: int = 1
    parity: str = "both"
    ktol: float = 1e-8
    k: list = field(default_factory=list)
    level: int | None = None
    perturb: float | None = None
    xmax: float | None = None
    grid: int | None = None
    fmt: str = "csv"
    out: str | None = None
    oracle_h: float = 1e-4
    tol: float = 1e-8

    def describe(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params) if self.params is not None else None
        return d


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def _write_csv(rows, columns, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])


def _emit(cfg: RunConfig, rows, columns):
    if cfg.fmt == "json":
        doc = {
            "config": cfg.describe(),
            "results": rows,
            "provenance": {
                "version": __version__,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            },
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        _write_csv(rows, columns, buf)
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("potential (units hbar = 2m = 1)")
    g.add_argument("--potential", choices=POTENTIALS, default="sym-morse")
    g.add_argument("--d", type=float, default=0.0, help="symmetrisation shift d")
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--gamma", type=float, help="sets gamma1 = gamma2")
    g.add_argument("--gamma1", type=float)
    g.add_argument("--gamma2", type=float)
    g.add_argument("--chain", metavar="PATH", help="JSON chain description (chain-file)")
    o = common.add_argument_group("output")
    o.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    o.add_argument("--out", metavar="PATH")
    o.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(
        prog="symmorse",
        description="Certified bound states of the symmetrised Morse potential "
        "and piecewise-analytic chains (units hbar = 2m = 1).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("spectrum", parents=[common], help="bracketed energy levels")
    sp.add_argument("--levels", type=int, default=1, help="number of levels")
    sp.add_argument("--parity", choices=("even", "odd", "both"), default="both")
    sp.add_argument("--ktol", type=float, default=1e-8, help="bracket width in k")

    wp = sub.add_parser("wavefunction", parents=[common], help="psi(x) samples for plotting")
    wp.add_argument("--k", type=float, nargs="+", default=[], help="trial k value(s), E = -k^2")
    wp.add_argument("--level", type=int, help="use the bracket midpoint of this sector level")
    wp.add_argument("--parity", choices=("even", "odd"), default="even")
    wp.add_argument("--perturb", type=float, help="also emit k - h and k + h")
    wp.add_argument("--xmax", type=float, default=8.0, help="half-width of the plot range")
    wp.add_argument("--grid", type=int, default=801, help="number of x samples")
    wp.add_argument("--ktol", type=float, default=1e-8)

    cp = sub.add_parser("compare", parents=[common], help="brackets vs Numerov vs closed form")
    cp.add_argument("--levels", type=int, default=1)
    cp.add_argument("--parity", choices=("even", "odd", "both"), default="both")
    cp.add_argument("--ktol", type=float, default=1e-8)
    cp.add_argument("--xmax", type=float, help="oracle domain cutoff")
    cp.add_argument("--oracle-h", type=float, default=1e-4, help="Numerov step")
    cp.add_argument("--tol", type=float, default=1e-8, help="allowed |Delta E| outside the bracket")
    return parser


def _config_from_args(ns) -> RunConfig:
    cfg = RunConfig(command=ns.command, potential=ns.potential, fmt=ns.fmt, out=ns.out)
    for name in ("levels", "parity", "ktol", "k", "level", "perturb", "xmax", "grid", "tol"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if hasattr(ns, "oracle_h"):
        cfg.oracle_h = ns.oracle_h
    if cfg.potential == "chain-file":
        if not ns.chain:
            raise UsageError("--potential chain-file needs --chain PATH")
        if any(v is not None for v in (ns.gamma, ns.gamma1, ns.gamma2)):
            raise UsageError("--chain excludes the Morse parameters")
        cfg.chain = ns.chain
    else:
        if ns.chain:
            raise UsageError("--chain is only valid with --potential chain-file")
        g1 = ns.gamma1 if ns.gamma1 is not None else ns.gamma
        g2 = ns.gamma2 if ns.gamma2 is not None else ns.gamma
        if g1 is None or g2 is None:
            raise UsageError("give --gamma, or both --gamma1 and --gamma2")
        try:
            shift = ns.d if cfg.potential != "morse" else 0.0
            cfg.params = MorseParams(ns.alpha, g1, g2, shift)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if getattr(ns, "levels", 1) < 1:
        raise UsageError("--levels must be >= 1")
    if cfg.command == "wavefunction":
        if cfg.potential not in ("sym-morse", "single-well"):
            raise UsageError("wavefunction supports sym-morse and single-well only")
        if not cfg.k and cfg.level is None:
            raise UsageError("wavefunction needs --k or --level")
        if cfg.grid is not None and cfg.grid < 2:
            raise UsageError("--grid must be >= 2")
    return cfg


def _bracket_row(index, parity, br: EnergyBracket, closed=None) -> dict:
    return {
        "index": index,
        "parity": parity.value if parity is not None else "",
        "k_lo": float(br.k_lo),
        "k_hi": float(br.k_hi),
        "E_lo": float(br.e_lo),
        "E_hi": float(br.e_hi),
        "nodes": br.node_evidence[0],
        "evaluations": br.evaluations,
        "closed_form_E": closed,
    }


def _symmetric_levels(cfg: RunConfig) -> list[SpectrumEntry]:
    """Requested levels of sym-morse / single-well as spectrum entries."""
    flipped = cfg.potential == "single-well"
    if cfg.parity == "both":
        return spectrum(cfg.params, cfg.levels - 1, cfg.ktol, flipped=flipped)
    parity = Parity.parse(cfg.parity)
    offset = 0 if parity is Parity.EVEN else 1
    out = []
    for n in range(cfg.levels):
        try:
            br = bracket_level(cfg.params, n, parity, cfg.ktol, flipped=flipped)
            out.append(SpectrumEntry(2 * n + offset, parity, br))
        except NoSuchLevel as exc:
            out.append(SpectrumEntry(2 * n + offset, parity, None, exc))
            break
    return out


def _chain_builder(cfg: RunConfig):
    if cfg.potential == "morse":
        return full_line_morse_chain(cfg.params)
    return load_chain(cfg.chain)


def _chain_levels(cfg: RunConfig) -> list[SpectrumEntry]:
    builder = _chain_builder(cfg)
    out = []
    for n in range(cfg.levels):
        try:
            out.append(SpectrumEntry(n, None, bracket_secular(builder, n, cfg.ktol)))
        except NoSuchLevel as exc:
            out.append(SpectrumEntry(n, None, None, exc))
            break
    return out


def _levels(cfg: RunConfig) -> list[SpectrumEntry]:
    if cfg.potential in ("sym-morse", "single-well"):
        return _symmetric_levels(cfg)
    return _chain_levels(cfg)


def _closed_form(cfg: RunConfig, index: int):
    if cfg.potential != "morse":
        return None
    levels = exact_full_line_morse_spectrum(cfg.params)
    return levels[index] if index < len(levels) else None


def _report_missing(entries, requested: int) -> bool:
    found = [e for e in entries if e.found]
    if len(found) < requested:
        print(
            f"warning: {requested} level(s) requested, {len(found)} found",
            file=sys.stderr,
        )
        return True
    return False


def cmd_spectrum(cfg: RunConfig) -> int:
    entries = _levels(cfg)
    rows = [
        _bracket_row(e.index, e.parity, e.bracket, _closed_form(cfg, e.index))
        for e in entries
        if e.found
    ]
    _emit(cfg, rows, SPECTRUM_COLUMNS)
    return EXIT_NO_LEVEL if _report_missing(entries, cfg.levels) else EXIT_OK


def cmd_wavefunction(cfg: RunConfig) -> int:
    flipped = cfg.potential == "single-well"
    parity = Parity.parse(cfg.parity)
    ks = list(cfg.k)
    if cfg.level is not None:
        try:
            br = bracket_level(cfg.params, cfg.level, parity, cfg.ktol, flipped=flipped)
        except NoSuchLevel as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NO_LEVEL
        ks.append(float(br.k_mid))
    if cfg.perturb:
        ks = [v for k in ks for v in (k - cfg.perturb, k, k + cfg.perturb)]
    x = np.linspace(-cfg.xmax, cfg.xmax, cfg.grid)
    solver = SolverConfig(x_render_max=max(cfg.xmax, 12.0 / cfg.params.alpha))
    rows = []
    for k in ks:
        wave = build_regular(cfg.params, EnergyTrial.from_k(k, cfg.params), parity, solver,
                             flipped=flipped)
        psi, dpsi = wave.profile(x)
        rows.extend(
            {"k": k, "x": float(xi), "psi": float(p), "dpsi": float(dp)}
            for xi, p, dp in zip(x, psi, dpsi)
        )
    _emit(cfg, rows, ("k", "x", "psi", "dpsi"))
    return EXIT_OK


def _oracle_energy(cfg: RunConfig, entry: SpectrumEntry, builder=None) -> float:
    if cfg.potential in ("sym-morse", "single-well"):
        sc = ShootingConfig(x_max=cfg.xmax, h_step=cfg.oracle_h)
        return eigenvalue(
            cfg.params, entry.index // 2, entry.parity, sc,
            flipped=cfg.potential == "single-well",
        )
    if cfg.potential == "morse":
        x_max = cfg.xmax if cfg.xmax is not None else 40.0 / cfg.params.alpha
        return full_line_eigenvalue(cfg.params, entry.index, ShootingConfig(x_max, cfg.oracle_h))
    chain = builder(entry.bracket.e_mid)
    cuts = chain.boundaries or [0.0]
    pad = cfg.xmax if cfg.xmax is not None else 15.0
    sc = ShootingConfig(x_max=None, h_step=cfg.oracle_h)
    return dirichlet_eigenvalue(
        chain.potential, entry.index, cuts[0] - pad, cuts[-1] + pad, sc,
        (chain.v_min() - 1e-9, chain.threshold),
    )


def cmd_compare(cfg: RunConfig) -> int:
    entries = _levels(cfg)
    builder = _chain_builder(cfg) if cfg.potential == "chain-file" else None
    rows, failed = [], False
    for e in entries:
        if not e.found:
            continue
        br = e.bracket
        e_or = _oracle_energy(cfg, e, builder)
        mid = float(br.e_mid)
        inside = float(br.e_lo) < e_or < float(br.e_hi)
        ok = inside or abs(e_or - mid) <= cfg.tol
        closed = _closed_form(cfg, e.index)
        d_closed = None
        if closed is not None:
            d_closed = mid - closed
            ok = ok and (abs(d_closed) <= cfg.tol or br.contains_energy(closed))
            ok = ok and abs(e_or - closed) <= cfg.tol
        failed |= not ok
        rows.append({
            "index": e.index,
            "parity": e.parity.value if e.parity is not None else "",
            "E_lo": float(br.e_lo),
            "E_hi": float(br.e_hi),
            "E_mid": mid,
            "E_oracle": e_or,
            "delta_oracle": e_or - mid,
            "closed_form_E": closed,
            "delta_closed": d_closed,
            "status": "PASS" if ok else "FAIL",
        })
    _emit(cfg, rows, COMPARE_COLUMNS)
    missing = _report_missing(entries, cfg.levels)
    if failed:
        return EXIT_FAIL
    return EXIT_NO_LEVEL if missing else EXIT_OK


COMMANDS = {"spectrum": cmd_spectrum, "wavefunction": cmd_wavefunction, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config_from_args(ns)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"symmorse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg)
    except (SymMorseError, ValueError, OSError) as exc:
        print(f"symmorse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
