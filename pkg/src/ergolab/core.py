"""Words, block distributions and the two distances used throughout.

Words are carried as one-dimensional ``uint8`` numpy arrays (alphabets of at
most 256 symbols); every public function accepts any integer sequence and
converts with :func:`as_word`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ergolab.errors import (
    AlphabetError,
    DistinctSpaceError,
    IncompatibleDistributionError,
    InsufficientDataError,
    LengthMismatchError,
    ValidationError,
)

MAX_ALPHABET = 256


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if not 1 <= self.size <= MAX_ALPHABET:
            raise ValidationError(f"alphabet size must be in [1, {MAX_ALPHABET}], got {self.size}")

    def check(self, word) -> None:
        w = as_word(word)
        if w.size and int(w.max()) >= self.size:
            raise AlphabetError(f"symbol {int(w.max())} outside alphabet of size {self.size}")


def as_word(symbols, alphabet_size: int | None = None) -> np.ndarray:
    """Return ``symbols`` as a ``uint8`` array, validating the range."""
    if isinstance(symbols, str):
        symbols = [int(ch) for ch in symbols]
    arr = np.asarray(symbols)
    if arr.ndim != 1:
        raise ValidationError("a word is one-dimensional")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() >= MAX_ALPHABET):
            raise AlphabetError("symbols must lie in [0, 256)")
        arr = arr.astype(np.uint8)
    if alphabet_size is not None and arr.size and int(arr.max()) >= alphabet_size:
        raise AlphabetError(f"symbol {int(arr.max())} outside alphabet of size {alphabet_size}")
    return arr


def word_str(word) -> str:
    """Compact text form: digits for alphabets up to 10, comma-separated otherwise."""
    w = as_word(word)
    if w.size and int(w.max()) >= 10:
        return ",".join(str(int(s)) for s in w)
    return "".join(str(int(s)) for s in w)


def parse_word(text: str) -> np.ndarray:
    text = text.strip()
    if "," in text:
        return as_word([int(t) for t in text.split(",")])
    return as_word([int(ch) for ch in text])


def fsum(values) -> float:
    """Compensated sum (exact rounding of the true sum)."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


@dataclass(frozen=True)
class BlockDistribution:
    """Probabilities of length-``block_length`` words; absent words weigh 0.

    Keys are tuples of ints.
    """

    block_length: int
    weights: Mapping[tuple, float]
    alphabet_size: int | None = None

    def __post_init__(self):
        for key, p in self.weights.items():
            if len(key) != self.block_length:
                raise ValidationError(f"block {key} does not have length {self.block_length}")
            if p < 0:
                raise ValidationError(f"negative weight for block {key}")
        total = math.fsum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"weights sum to {total!r}, not 1")

    def __getitem__(self, block) -> float:
        return self.weights.get(tuple(int(s) for s in block), 0.0)

    def __len__(self):
        return len(self.weights)

    @classmethod
    def from_arrays(cls, words: np.ndarray, probs: np.ndarray, alphabet_size=None):
        weights = {tuple(row.tolist()): float(p) for row, p in zip(words, probs)}
        return cls(int(words.shape[1]), weights, alphabet_size)


@dataclass(frozen=True)
class WeightedLabeling:
    """A finite partition: atom i has weight ``atoms[i][0]`` and label ``atoms[i][1]``."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(w), int(l)) for w, l in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if any(w < 0 for w, _ in atoms):
            raise ValidationError("atom weights must be non-negative")
        total = math.fsum(w for w, _ in atoms)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"atom weights sum to {total!r}, not 1")

    @classmethod
    def uniform(cls, labels: Sequence[int]) -> "WeightedLabeling":
        n = len(labels)
        return cls(tuple((1.0 / n, l) for l in labels))

    @property
    def weights(self):
        return tuple(w for w, _ in self.atoms)

    @property
    def labels(self):
        return tuple(l for _, l in self.atoms)


def rho_distance(p: WeightedLabeling, q: WeightedLabeling) -> float:
    """Partition distance: sum over labels of the measure of the symmetric difference.

    Each atom whose label differs lies in exactly two symmetric differences
    (its p-label's and its q-label's), so the distance is twice the
    disagreeing mass.
    """
    if len(p.atoms) != len(q.atoms) or any(
        abs(a - b) > 1e-15 for a, b in zip(p.weights, q.weights)
    ):
        raise DistinctSpaceError("labelings are not over the same atoms")
    return 2.0 * math.fsum(w for (w, a), (_, b) in zip(p.atoms, q.atoms) if a != b)


def empirical_block_distribution(w, N: int) -> BlockDistribution:
    """Overlapping-window frequencies of ``N``-blocks in ``w``."""
    words, counts = block_counts(w, N)
    total = counts.sum()
    return BlockDistribution.from_arrays(words, counts / total)


def block_counts(w, N: int):
    """Distinct overlapping ``N``-blocks of ``w`` (lexicographic) and their counts."""
    w = as_word(w)
    if N < 1:
        raise ValidationError("block length must be positive")
    if w.size < N:
        raise InsufficientDataError(f"word of length {w.size} has no {N}-blocks")
    windows = np.lib.stride_tricks.sliding_window_view(w, N)
    rows = np.ascontiguousarray(windows).view(np.dtype((np.void, N))).ravel()
    uniq, idx, counts = np.unique(rows, return_index=True, return_counts=True)
    return windows[idx].copy(), counts


def empirical_block_arrays(w, N: int):
    """Like :func:`block_counts` but returns probabilities."""
    words, counts = block_counts(w, N)
    return words, counts / counts.sum()


def l1_distance(d1: BlockDistribution, d2: BlockDistribution) -> float:
    if d1.block_length != d2.block_length:
        raise IncompatibleDistributionError(
            f"block lengths differ: {d1.block_length} vs {d2.block_length}"
        )
    if d1.alphabet_size and d2.alphabet_size and d1.alphabet_size != d2.alphabet_size:
        raise IncompatibleDistributionError("alphabets differ")
    keys = set(d1.weights) | set(d2.weights)
    return math.fsum(abs(d1.weights.get(k, 0.0) - d2.weights.get(k, 0.0)) for k in keys)


def l1_distance_arrays(words1, probs1, words2, probs2) -> float:
    """ℓ¹ distance between two block tables given as (words, probs) arrays."""
    if words1.shape[1] != words2.shape[1]:
        raise IncompatibleDistributionError("block lengths differ")
    n = words1.shape[1]
    allw = np.concatenate([words1, words2]).astype(np.uint8)
    rows = np.ascontiguousarray(allw).view(np.dtype((np.void, n))).ravel()
    _, inv = np.unique(rows, return_inverse=True)
    k = inv.max() + 1 if inv.size else 0
    diff = np.zeros(k)
    np.add.at(diff, inv[: len(words1)], probs1)
    np.subtract.at(diff, inv[len(words1):], probs2)
    return fsum(np.abs(diff))


def hamming_fraction(u, v) -> float:
    u = as_word(u)
    v = as_word(v)
    if u.size != v.size:
        raise LengthMismatchError(f"lengths differ: {u.size} vs {v.size}")
    if u.size == 0:
        raise ValidationError("hamming_fraction needs non-empty words")
    return float(np.count_nonzero(u != v)) / u.size
