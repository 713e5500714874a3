"""Tower decompositions of the positions of a finite sample path.

A tower is a run of consecutive positions ``[base, base + height)``.  A
decomposition is a list of pairwise disjoint towers plus the leftover
positions; together they cover ``range(n)`` exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ergolab.core import as_word
from ergolab.errors import (
    InfeasibleTowerError,
    InternalConsistencyError,
    LengthMismatchError,
    ValidationError,
)


@dataclass(frozen=True, order=True)
class Tower:
    base_position: int
    height: int

    @property
    def top(self) -> int:
        """One past the last position."""
        return self.base_position + self.height


@dataclass(frozen=True)
class TowerDecomposition:
    length: int
    towers: tuple
    leftover: np.ndarray  # sorted int64 positions

    @property
    def leftover_fraction(self) -> float:
        return len(self.leftover) / self.length if self.length else 0.0

    @property
    def covered(self) -> int:
        return sum(t.height for t in self.towers)

    def check(self, min_height: int = 1) -> None:
        """Assert disjointness, exact coverage and the height floor."""
        mark = np.zeros(self.length, dtype=np.int64)
        for t in self.towers:
            if t.height < min_height:
                raise InternalConsistencyError(f"tower {t} lower than {min_height}")
            if t.base_position < 0 or t.top > self.length:
                raise InternalConsistencyError(f"tower {t} outside the path")
            mark[t.base_position:t.top] += 1
        mark[self.leftover] += 1
        if not np.all(mark == 1):
            raise InternalConsistencyError("towers and leftover do not partition the positions")


def _leftover(n: int, towers) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    for t in towers:
        mask[t.base_position:t.top] = False
    return np.flatnonzero(mask)


def pattern_occurrences(path, pattern) -> np.ndarray:
    """Start positions of ``pattern`` in ``path`` (overlaps allowed)."""
    path = as_word(path)
    pattern = as_word(pattern)
    k = pattern.size
    if k == 0 or k > path.size:
        return np.empty(0, dtype=np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(path, k)
    return np.flatnonzero(np.all(windows == pattern, axis=1))


def kakutani_decompose(path, pattern, min_height: int) -> TowerDecomposition:
    """Towers based at occurrences of ``pattern``, thinned so bases are >= ``min_height`` apart.

    A tower runs from its base to the next kept base; the last one runs to
    the end of the path if that leaves at least ``min_height`` positions,
    otherwise the tail becomes leftover.  The head before the first base is
    leftover too.

    Examples
    --------
    >>> d = kakutani_decompose("0" * 20, "0", 5)
    >>> [(t.base_position, t.height) for t in d.towers]
    [(0, 5), (5, 5), (10, 5), (15, 5)]
    """
    path = as_word(path)
    pattern = as_word(pattern)
    if min_height < 1:
        raise ValidationError("min_height must be at least 1")
    if pattern.size > min_height:
        raise ValidationError("pattern longer than min_height")
    return decompose_from_occurrences(path.size, pattern_occurrences(path, pattern), min_height)


def decompose_from_occurrences(n: int, occurrences, min_height: int) -> TowerDecomposition:
    """Greedy left-to-right thinning of candidate base positions."""
    bases = []
    last = None
    for p in sorted(int(x) for x in occurrences):
        if p < 0 or p >= n:
            raise ValidationError(f"occurrence {p} outside path of length {n}")
        if last is None or p - last >= min_height:
            bases.append(p)
            last = p
    towers = [Tower(a, b - a) for a, b in zip(bases, bases[1:])]
    if bases and n - bases[-1] >= min_height:
        towers.append(Tower(bases[-1], n - bases[-1]))
    towers = tuple(towers)
    return TowerDecomposition(n, towers, _leftover(n, towers))


def rohlin_tower(n: int, height: int, epsilon: float) -> TowerDecomposition:
    """Equal-height towers based at 0, N, 2N, ...; the remainder is leftover.

    Examples
    --------
    >>> d = rohlin_tower(105, 10, 0.2)
    >>> len(d.towers), len(d.leftover)
    (10, 5)
    """
    if n < 1 or height < 1:
        raise ValidationError("n and height must be positive")
    if height > epsilon * n:
        raise InfeasibleTowerError(f"height {height} exceeds epsilon * n = {epsilon * n}")
    towers = tuple(Tower(b, height) for b in range(0, n - height + 1, height))
    return TowerDecomposition(n, towers, np.arange(len(towers) * height, n, dtype=np.int64))


@dataclass(frozen=True)
class Column:
    height: int
    name_p: tuple
    name_q: tuple | None
    members: tuple  # towers sharing both names

    @property
    def count(self) -> int:
        return len(self.members)


def extract_columns(decomposition: TowerDecomposition, path_p, path_q=None) -> list:
    """Group towers by (height, P-name, Q-name), sorted by that key."""
    path_p = as_word(path_p)
    if path_p.size != decomposition.length:
        raise LengthMismatchError("P-path length differs from the decomposition")
    if path_q is not None:
        path_q = as_word(path_q)
        if path_q.size != decomposition.length:
            raise LengthMismatchError("Q-path length differs from the decomposition")
    groups = {}
    for t in decomposition.towers:
        u = tuple(path_p[t.base_position:t.top].tolist())
        v = None if path_q is None else tuple(path_q[t.base_position:t.top].tolist())
        groups.setdefault((t.height, u, v), []).append(t)
    keys = sorted(groups, key=lambda k: (k[0], k[1], () if k[2] is None else k[2]))
    return [Column(h, u, v, tuple(groups[(h, u, v)])) for h, u, v in keys]
