import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loglog_nls.bourgain import (
    ConcentrationError,
    ConcentrationReport,
    IntervalFamily,
    check_report,
    concentrate,
    k_lower_bound,
    structured_family,
)


def family(rows):
    return IntervalFamily(np.array(rows, dtype=float))


class TestFamily:
    def test_validation(self):
        with pytest.raises(ValueError):
            family([(0, 1), (0.5, 2)])  # overlap
        with pytest.raises(ValueError):
            family([(1, 1)])
        with pytest.raises(ValueError):
            family([(2, 3), (0, 1)])
        with pytest.raises(ValueError):
            family([(0, math.inf)])

    def test_text_round_trip(self, tmp_path):
        fam = structured_family(np.random.default_rng(1), 50, 0.1)
        p = tmp_path / "fam.txt"
        fam.write(p)
        again = IntervalFamily.read(p)
        np.testing.assert_array_equal(again.intervals, fam.intervals)

    def test_text_comments_and_commas(self):
        fam = IntervalFamily.from_text("# header\n0, 1\n\n1 3  # trailing\n")
        np.testing.assert_array_equal(fam.intervals, [[0, 1], [1, 3]])
        with pytest.raises(ValueError):
            IntervalFamily.from_text("0 1 2\n")


class TestLowerBound:
    def test_formula(self):
        assert k_lower_bound(1000, 0.1) == pytest.approx(-math.log(1000) / (2 * math.log(0.1 / 8)))
        assert k_lower_bound(1, 0.1) == 0.0


class TestConcentrate:
    def test_small_family_single_pick(self):
        fam = family([(0, 1), (1, 4), (4, 5), (5, 8)])
        rep = concentrate(fam, 0.5)
        # ties break towards the earliest start
        assert rep.indices == (1,)
        assert rep.t_bar == 2.5
        assert check_report(fam, rep).passed

    def test_rejects_bad_eta(self):
        fam = family([(0, 1)])
        for eta in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                concentrate(fam, eta)

    def test_unstructured_family_raises(self):
        # 1000 equal intervals (more than 100/eta): the longest is far below eta times the span
        edges = np.linspace(0, 1, 1001)
        fam = IntervalFamily(np.column_stack([edges[:-1], edges[1:]]))
        with pytest.raises(ConcentrationError):
            concentrate(fam, 0.5)

    @pytest.mark.parametrize("seed", range(20))
    def test_structured_passes(self, seed):
        rng = np.random.default_rng(seed)
        eta = rng.uniform(0.05, 0.5)
        fam = structured_family(rng, int(rng.integers(1, 3000)), eta)
        rep = concentrate(fam, eta)
        out = check_report(fam, rep)
        assert out.passed, out.detail
        lengths = fam.lengths[list(rep.indices)]
        assert np.all(lengths[:-1] >= 2 * lengths[1:])

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 2000), eta=st.floats(0.02, 0.8))
    def test_structured_property(self, seed, L, eta):
        fam = structured_family(np.random.default_rng(seed), L, eta)
        assert len(fam) == L
        if L <= 100 / eta and k_lower_bound(L, eta) > 1:
            # stops after one pick, yet the count bound asks for more (only possible for eta > 0.64)
            with pytest.raises(ConcentrationError):
                concentrate(fam, eta)
            return
        assert check_report(fam, concentrate(fam, eta)).passed

    def test_count_bound_conflict_needs_large_eta(self):
        etas = np.linspace(0.01, 0.64, 200)
        assert all(k_lower_bound(int(100 / eta), eta) <= 1 for eta in etas)

    def test_deterministic_text(self):
        fam = structured_family(np.random.default_rng(7), 1500, 0.05)
        a = concentrate(fam, 0.05).to_text()
        b = concentrate(IntervalFamily.from_text(fam.to_text()), 0.05).to_text()
        assert a == b


class TestCheckReport:
    @pytest.fixture
    def case(self):
        fam = structured_family(np.random.default_rng(3), 2500, 0.05)
        rep = concentrate(fam, 0.05)
        assert rep.K >= 2
        return fam, rep

    def test_detects_dyadic_violation(self, case):
        fam, rep = case
        bad = replace(rep, indices=rep.indices[::-1], intervals=rep.intervals[::-1])
        assert check_report(fam, bad).violation == "dyadic-decay"

    def test_detects_distance_violation(self, case):
        fam, rep = case
        bad = replace(rep, t_bar=rep.t_bar + 1e3)
        assert check_report(fam, bad).violation == "distance"

    def test_detects_count_violation(self):
        edges = np.linspace(0, 1, 1001)
        fam = IntervalFamily(np.column_stack([edges[:-1], edges[1:]]))
        # the bound is -log 1000 / (2 log(0.7/8)) ~ 1.42 > K = 1
        rep = ConcentrationReport(0.0005, (0,), ((0.0, 0.001),), 0.7, 1000)
        assert check_report(fam, rep).violation == "k-lower-bound"

    def test_empty_selection(self, case):
        fam, _ = case
        rep = ConcentrationReport(0.0, (), (), 0.05, len(fam))
        assert check_report(fam, rep).violation == "count"

    def test_dangling_reference(self, case):
        fam, rep = case
        bad = replace(rep, indices=(len(fam) + 5,), intervals=rep.intervals[:1])
        with pytest.raises(ValueError):
            check_report(fam, bad)
