import math

import numpy as np
import pytest

from symmorse.bracketer import (
    EnergyBracket,
    Probe,
    bracket_level,
    classify,
    degeneracy_gap,
    drive,
    refine_bracket,
    spectrum,
)
from symmorse.errors import NoSuchLevel, PrecisionFloor, PreconditionError
from symmorse.oracle import eigenvalue
from symmorse.potentials import MorseParams
from symmorse.regular import Parity

ROOTS = (1.5, 0.9, 0.4)


def toy(k, roots=ROOTS):
    """Classifier with levels at ``roots`` mimicking the regular solution.

    Just below a root the new node has not yet entered the bulk, so the
    tail sign carries the extra zero.
    """
    if k in roots:
        j = sum(r > k for r in roots)
        return Probe(k, j, 0)
    j = sum(r > k for r in roots)
    if j > 0 and roots[j - 1] - k < 0.1:
        return Probe(k, j - 1, -((-1) ** (j - 1)))
    return Probe(k, j, (-1) ** j)


class TestProbe:
    def test_zeros(self):
        assert Probe(1.0, 0, 1).zeros == 0
        assert Probe(1.0, 0, -1).zeros == 1
        assert Probe(1.0, 1, -1).zeros == 1
        assert Probe(1.0, 1, 1).zeros == 2
        assert Probe(1.0, 2, 0).zeros == 2


class TestDrive:
    @pytest.mark.parametrize("n", range(3))
    def test_toy_levels(self, n):
        br = drive(toy, n, 1.8, 1e-9)
        assert br.k_lo < ROOTS[n] < br.k_hi
        assert br.width <= 1e-9
        assert br.node_evidence == (n, n)
        assert br.sign_evidence[0] == -br.sign_evidence[1]

    def test_toy_missing(self):
        with pytest.raises(NoSuchLevel) as info:
            drive(toy, 3, 1.8, 1e-9)
        assert info.value.found == 3

    def test_exact_hit(self):
        br = drive(toy, 0, 1.8, 1e-9, seeds=(1.0, 2.0))
        assert br.sign_evidence == (0, 0)
        assert br.k_lo == 1.5 * (1 - 1e-13) and br.k_hi == 1.5 * (1 + 1e-13)

    def test_bad_seeds_fall_back_to_scan(self):
        br = drive(toy, 1, 1.8, 1e-9, seeds=(1.0, 2.0))
        assert br.contains_k(0.9)

    def test_precision_floor(self):
        with pytest.raises(PrecisionFloor):
            drive(toy, 0, 1.8, 1e-13)

    def test_bad_index(self):
        with pytest.raises(ValueError):
            drive(toy, -1, 1.8, 1e-6)


class TestBracketType:
    def test_energy_view(self):
        br = EnergyBracket(0, Parity.EVEN, 1.0, 1.1, (0, 0), (-1, 1), 5)
        assert br.e_lo == pytest.approx(-1.21) and br.e_hi == -1.0
        assert br.contains_energy(-1.1) and not br.contains_energy(-0.9)
        assert br.width == pytest.approx(0.1)
        with pytest.raises(ValueError):
            EnergyBracket(0, Parity.EVEN, 1.1, 1.0, (0, 0), (-1, 1), 5)

    def test_threshold_shift(self):
        br = EnergyBracket(0, None, 1.0, 2.0, (0, 0), (-1, 1), 5, threshold=3.0)
        assert (br.e_lo, br.e_hi) == (-1.0, 2.0)


class TestClassify:
    def test_coarse_pair(self, dw_params):
        a, b = classify(dw_params, 1.354, "even"), classify(dw_params, 1.358, "even")
        assert a[0] == b[0] == 0 and a[1] == -b[1]

    def test_odd_pair(self, dw_params):
        a, b = classify(dw_params, 1.26, "odd"), classify(dw_params, 1.27, "odd")
        assert a[0] == b[0] == 0 and a[1] == -b[1]

    def test_out_of_range(self, dw_params):
        with pytest.raises(PreconditionError):
            classify(dw_params, 1.8 * (1 + 1e-6), "even")


class TestBracketLevel:
    def test_reference_even(self, dw_params):
        br = bracket_level(dw_params, 0, "even", 1e-5)
        assert 1.35576 < br.k_lo < br.k_hi < 1.35577

    def test_reference_odd(self, dw_params):
        br = bracket_level(dw_params, 0, "odd", 3e-6)
        assert 1.268110 < br.k_lo < br.k_hi < 1.268116

    def test_deterministic(self, dw_params):
        a = bracket_level(dw_params, 0, "odd", 1e-7)
        b = bracket_level(dw_params, 0, "odd", 1e-7)
        assert a == b and a.k_lo.hex() == b.k_lo.hex()

    def test_budget_from_seed(self, dw_params):
        br = bracket_level(dw_params, 0, "even", 1e-6, 1.0, 2.0)
        assert br.evaluations <= 40
        assert br.contains_k(1.3557629341)

    def test_evidence(self, dw_params):
        br = bracket_level(dw_params, 1, "even", 1e-6)
        assert br.node_evidence == (1, 1)
        assert br.sign_evidence[0] == -br.sign_evidence[1]
        assert br.contains_k(0.40106172695)

    def test_missing(self, dw_params):
        with pytest.raises(NoSuchLevel):
            bracket_level(dw_params, 2, "odd", 1e-6)

    def test_floor(self, dw_params):
        with pytest.raises(PrecisionFloor):
            bracket_level(dw_params, 0, "even", 1e-13)

    @pytest.mark.parametrize("parity", ["even", "odd"])
    def test_single_well_against_oracle(self, parity):
        p = MorseParams.symmetric(1.0, 1.8, 2.0)
        br = bracket_level(p, 0, parity, 1e-7, flipped=True)
        e = eigenvalue(p, 0, parity, flipped=True)
        assert br.e_lo < e < br.e_hi

    def test_shallow_single_well_has_no_level(self, dw_params):
        # the d = 1 single well approaches zero from above and is too narrow to bind
        with pytest.raises(NoSuchLevel):
            bracket_level(dw_params, 0, "even", 1e-6, flipped=True)

    def test_refine(self, dw_params):
        br = bracket_level(dw_params, 0, "odd", 1e-6)
        fine = refine_bracket(dw_params, br, 1e-20)
        assert fine.width <= 1e-20
        assert br.k_lo <= fine.k_lo < fine.k_hi <= br.k_hi
        assert abs(float(fine.k_mid) - 1.2681111414) < 1e-9


class TestSpectrum:
    def test_two_levels(self, dw_params):
        entries = spectrum(dw_params, 1, 1e-6)
        assert [(e.index, e.parity) for e in entries] == [(0, Parity.EVEN), (1, Parity.ODD)]
        assert entries[0].bracket.contains_k(1.3557629341)
        assert entries[1].bracket.contains_k(1.2681111414)

    def test_interleaving_and_truncation(self, dw_params):
        entries = spectrum(dw_params, 5, 1e-6)
        found = [e for e in entries if e.found]
        assert len(found) == 4
        mids = [e.bracket.e_mid for e in found]
        assert all(b > a for a, b in zip(mids, mids[1:]))
        assert all(found[i].bracket.e_hi < found[i + 1].bracket.e_lo for i in range(3))
        missing = [e for e in entries if not e.found]
        assert [e.index for e in missing] == [4, 5]
        assert all(isinstance(e.missing, NoSuchLevel) for e in missing)

    def test_bad_request(self, dw_params):
        with pytest.raises(ValueError):
            spectrum(dw_params, -1)


class TestGap:
    def test_figure_doublet(self, dw_params):
        g = degeneracy_gap(dw_params, 0, 1e-8)
        # 1.355765^2 - 1.268113^2 from the published k values
        assert float(g) == pytest.approx(1.355765**2 - 1.268113**2, abs=5e-5)
        assert g.gap > 0 and g.uncertainty < 1e-3 * g.gap

    def test_deep_well_nearly_degenerate(self):
        p = MorseParams.symmetric(1.0, 5.0, 2.0)
        g = degeneracy_gap(p, 0, 1e-8)
        depth = float(g.even.e_mid)
        assert 0 < float(g.gap) < 1e-10 * abs(depth)
