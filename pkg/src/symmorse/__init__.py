"""Certified bound states of the symmetrised Morse potential.

Units hbar = 2m = 1 throughout, so the Hamiltonian is -d^2/dx^2 + V(x).
"""

__version__ = "0.1.0"

from .bracketer import (
    EnergyBracket,
    GapEstimate,
    SpectrumEntry,
    bracket_level,
    classify,
    degeneracy_gap,
    refine_bracket,
    spectrum,
)
from .errors import (
    ChainError,
    ConvergenceError,
    DomainError,
    NoSuchLevel,
    PrecisionFloor,
    PreconditionError,
    SingularTransfer,
    SymMorseError,
)
from .oracle import ShootingConfig, dirichlet_eigenvalue, eigenvalue, full_line_eigenvalue
from .piecewise import (
    ConstantPiece,
    MorsePiece,
    Segment,
    SegmentChain,
    bracket_secular,
    load_chain,
    square_well_chain,
    sym_morse_chain,
)
from .potentials import MorseParams, exact_full_line_morse_spectrum, v_morse, v_single_well, v_sym
from .regular import EnergyTrial, Parity, RegularWave, SolverConfig, build_regular, tail_functional

__all__ = [name for name in dir() if not name.startswith("_")]
