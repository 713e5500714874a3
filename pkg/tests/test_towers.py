import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.errors import InfeasibleTowerError, LengthMismatchError, ValidationError
from ergolab.towers import (
    Tower,
    decompose_from_occurrences,
    extract_columns,
    kakutani_decompose,
    pattern_occurrences,
    rohlin_tower,
)


def _pairs(d):
    return [(t.base_position, t.height) for t in d.towers]


class TestKakutani:
    def test_hand_simulation(self):
        d = decompose_from_occurrences(20, [0, 7, 15], 5)
        assert _pairs(d) == [(0, 7), (7, 8), (15, 5)]
        assert d.leftover.size == 0

    def test_no_occurrences(self):
        d = kakutani_decompose("0000000", "1", 3)
        assert d.towers == ()
        assert d.leftover.tolist() == list(range(7))

    def test_thinning(self):
        d = decompose_from_occurrences(20, [0, 2, 9], 5)
        assert _pairs(d) == [(0, 9), (9, 11)]

    def test_head_and_short_tail_are_leftover(self):
        d = decompose_from_occurrences(20, [3, 10, 17], 5)
        assert _pairs(d) == [(3, 7), (10, 7)]
        assert d.leftover.tolist() == [0, 1, 2, 17, 18, 19]

    def test_pattern_occurrences_overlap(self):
        assert pattern_occurrences("0110110", "11").tolist() == [1, 4]
        assert pattern_occurrences("000", "00").tolist() == [0, 1]

    def test_pattern_longer_than_height(self):
        with pytest.raises(ValidationError):
            kakutani_decompose("0101", "0101", 3)

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=300), st.integers(1, 12),
           st.lists(st.integers(0, 1), min_size=1, max_size=3))
    def test_invariants(self, path, N, pattern):
        if len(pattern) > N:
            pattern = pattern[:N]
        d = kakutani_decompose(path, pattern, N)
        d.check(min_height=N)
        occ = set(pattern_occurrences(path, pattern).tolist())
        assert all(t.base_position in occ for t in d.towers)


class TestRohlin:
    def test_exact_division(self):
        d = rohlin_tower(100, 10, 0.2)
        assert len(d.towers) == 10 and d.leftover.size == 0

    def test_remainder(self):
        d = rohlin_tower(105, 10, 0.2)
        assert len(d.towers) == 10
        assert d.leftover_fraction == pytest.approx(5 / 105)
        assert all(t.height == 10 for t in d.towers)

    def test_infeasible(self):
        with pytest.raises(InfeasibleTowerError):
            rohlin_tower(20, 10, 0.1)

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, 5000), st.integers(1, 200), st.floats(0.01, 1.0))
    def test_invariants(self, n, N, eps):
        if N > eps * n:
            with pytest.raises(InfeasibleTowerError):
                rohlin_tower(n, N, eps)
            return
        d = rohlin_tower(n, N, eps)
        d.check(min_height=N)
        assert d.leftover_fraction <= N / n
        assert d.leftover_fraction <= eps


class TestColumns:
    def test_single_column(self):
        d = rohlin_tower(12, 3, 0.5)
        cols = extract_columns(d, "010" * 4)
        assert len(cols) == 1 and cols[0].count == 4

    def test_two_names(self):
        d = rohlin_tower(6, 3, 0.5)
        cols = extract_columns(d, "010011")
        assert [c.name_p for c in cols] == [(0, 1, 0), (0, 1, 1)]

    def test_heights_never_mix(self):
        d = decompose_from_occurrences(12, [0, 5], 5)
        assert _pairs(d) == [(0, 5), (5, 7)]
        cols = extract_columns(d, "0" * 12)
        assert sorted(c.height for c in cols) == [5, 7]
        for c in cols:
            assert {t.height for t in c.members} == {c.height}

    def test_q_names_split_columns(self):
        d = rohlin_tower(6, 3, 0.5)
        cols = extract_columns(d, "000000", "001000")
        assert len(cols) == 2
        assert {c.name_q for c in cols} == {(0, 0, 1), (0, 0, 0)}

    def test_partition_of_towers(self):
        rng = np.random.default_rng(4)
        p = rng.integers(0, 2, 3000)
        d = kakutani_decompose(p, [1, 1], 4)
        cols = extract_columns(d, p)
        assert sum(c.count for c in cols) == len(d.towers)
        members = sorted(t for c in cols for t in c.members)
        assert members == sorted(d.towers)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            extract_columns(rohlin_tower(6, 3, 0.5), "0000")


def test_tower_top():
    assert Tower(4, 3).top == 7
