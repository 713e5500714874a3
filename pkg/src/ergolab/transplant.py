"""Distribution transplant: relabel tower columns with names drawn from another process.

Each column of a decomposition of a Y-path has a name ``u``.  Its towers are
relabeled independently with names ``v`` drawn from a conditional
distribution ``conditional(. | u)`` taken from an X-side model, so that the
relabeled path inherits the block statistics of X away from tower
boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ergolab import seeds
from ergolab.core import as_word
from ergolab.errors import LengthMismatchError, UnsupportedNameError, ValidationError
from ergolab.towers import extract_columns


class Conditional:
    """Interface: ``distribution(u)`` returns ``(names, probs)`` for a name ``u`` (tuple)."""

    def distribution(self, u: tuple):
        raise NotImplementedError

    def known_names(self, height: int):
        """Names with an available distribution, used by the nearest-name fallback."""
        return []


class IdentityConditional(Conditional):
    """Point mass at ``v = u``."""

    def distribution(self, u):
        return np.asarray([u], dtype=np.uint8), np.ones(1)


class TableConditional(Conditional):
    """Explicit table ``u -> (list of v, probabilities)``."""

    def __init__(self, table: dict):
        self.table = {}
        for u, (vs, ps) in table.items():
            ps = np.asarray(ps, dtype=float)
            if ps.size == 0 or np.any(ps < 0) or abs(ps.sum() - 1.0) > 1e-9:
                raise ValidationError(f"conditional for u={u} is not a distribution")
            self.table[tuple(int(s) for s in u)] = (np.asarray(vs, dtype=np.uint8), ps / ps.sum())

    def distribution(self, u):
        try:
            return self.table[tuple(u)]
        except KeyError:
            raise UnsupportedNameError(f"no conditional for u={tuple(u)}") from None

    def known_names(self, height):
        return sorted(u for u in self.table if len(u) == height)


class JointConditional(TableConditional):
    """mu(v | u) for all positive pairs of a :class:`~ergolab.models.JointModel` at one height."""

    def __init__(self, joint, height: int):
        u, v, p = joint.joint_blocks(height)
        table = {}
        start = 0
        for i in range(1, len(p) + 1):
            if i == len(p) or not np.array_equal(u[i], u[start]):
                ps = p[start:i]
                table[tuple(u[start].tolist())] = (v[start:i], ps / ps.sum())
                start = i
        super().__init__(table)


class ProductConditional(Conditional):
    """For X = Y x Z: given the Y-name u, the X-name pairs u with an independent Z-name.

    ``right`` is the Z model; its ``height``-blocks are enumerated once.
    """

    def __init__(self, product, height: int):
        self.product = product
        self.height = height
        self.z_words, z_probs = product.right.blocks(height)
        self.z_probs = z_probs / z_probs.sum()
        self.r_left = product.left.alphabet_size

    def distribution(self, u):
        u = np.asarray(u, dtype=np.int64)
        if u.size != self.height:
            raise UnsupportedNameError(f"conditional prepared for height {self.height}, got {u.size}")
        if u.size and u.max() >= self.r_left:
            raise UnsupportedNameError("u uses symbols outside the left alphabet")
        return self.product.combine(u[None, :], self.z_words), self.z_probs


@dataclass(frozen=True)
class TransplantParams:
    """Block length ``N``, tolerance ``delta``, tower height ``L`` and budget ``beta``."""

    N: int
    delta: float
    L: int
    beta: float
    M_joint: int = 0
    epsilon: float | None = None

    def __post_init__(self):
        if self.N < 1 or self.L < 1:
            raise ValidationError("N and L must be positive")
        if not 0 < self.beta:
            raise ValidationError("beta must be positive")
        if self.epsilon is not None and not 0 < self.delta < self.epsilon / 2:
            raise ValidationError("delta must lie in (0, epsilon/2)")
        if not self.delta > 0:
            raise ValidationError("delta must be positive")
        if not self.L > 8 * max(self.M_joint, self.N) / self.beta:
            raise ValidationError(
                f"L = {self.L} must exceed 8 max(M, N) / beta = {8 * max(self.M_joint, self.N) / self.beta}"
            )

    @property
    def boundary_error(self) -> float:
        """2 max(M, N) / L: windows that straddle a tower boundary."""
        return 2 * max(self.M_joint, self.N) / self.L


@dataclass(frozen=True)
class TransplantResult:
    output: np.ndarray
    columns: int
    fallbacks: tuple  # (u, substitute) pairs for names without a conditional


def _nearest(u, candidates):
    u = np.asarray(u)
    best, best_d = None, math.inf
    for c in candidates:
        d = int(np.count_nonzero(np.asarray(c) != u))
        if d < best_d:
            best, best_d = c, d
    return best


def transplant_blocks(path_y, decomposition, conditional: Conditional, seed: int,
                      fallback: bool = True) -> TransplantResult:
    """Relabel each tower with a name drawn from ``conditional(. | u)``.

    Column ``c`` (in the sorted order of :func:`~ergolab.towers.extract_columns`)
    draws from the generator derived from ``(seed, c)``, so the result does
    not depend on the order columns are processed.  Leftover positions keep
    their Y symbols.
    """
    path_y = as_word(path_y)
    if path_y.size != decomposition.length:
        raise LengthMismatchError("path length differs from the decomposition")
    out = path_y.copy()
    used = []
    for c, col in enumerate(extract_columns(decomposition, path_y)):
        try:
            names, probs = conditional.distribution(col.name_p)
        except UnsupportedNameError:
            if not fallback:
                raise
            sub = _nearest(col.name_p, conditional.known_names(col.height))
            if sub is None:
                raise
            names, probs = conditional.distribution(tuple(sub))
            used.append((col.name_p, tuple(sub)))
        if names.shape[1] != col.height:
            raise LengthMismatchError("conditional names do not match the tower height")
        rng = seeds.generator(seed, c)
        picks = rng.choice(len(probs), size=col.count, p=probs)
        for t, j in zip(col.members, picks):
            out[t.base_position:t.top] = names[j]
    return TransplantResult(out, len(decomposition.towers), tuple(used))
