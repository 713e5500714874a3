"""Exact block entropies, SMB trajectories and the relative typical-set construction.

All logarithms are base 2.  Exact quantities come from positive-block
enumeration of a model (see ``blocks`` on each model class), so capacity
guards apply.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ergolab.core import as_word, fsum
from ergolab.errors import ImpossiblePathError, InternalConsistencyError, ValidationError
from ergolab.models import JOINT_LIMIT, JointModel


def partition_entropy(d) -> float:
    """Shannon entropy in bits of a probability vector, with 0 log 0 = 0.

    Examples
    --------
    >>> partition_entropy([0.25, 0.25, 0.25, 0.25])
    2.0
    >>> partition_entropy([1.0, 0.0])
    0.0
    """
    p = np.asarray(d, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0):
        raise ValidationError("probabilities must be non-negative and non-empty")
    if abs(fsum(p) - 1.0) > 1e-9:
        raise ValidationError(f"probabilities sum to {fsum(p)!r}, not 1")
    p = p[p > 0]
    h = -fsum(p * np.log2(p))
    return max(h, 0.0)


def block_entropy(model, n: int) -> float:
    """Entropy of the exact ``n``-block distribution of ``model``."""
    _, probs = model.blocks(n)
    return partition_entropy(probs / fsum(probs))


@dataclass(frozen=True)
class EntropyReport:
    block_entropies: tuple  # H_1 .. H_n

    @property
    def n(self) -> int:
        return len(self.block_entropies)

    @property
    def rate_upper(self) -> float:
        return self.block_entropies[-1] / self.n

    @property
    def rate_conditional(self) -> float:
        h = (0.0,) + tuple(self.block_entropies)
        return h[-1] - h[-2]

    def conditional_entropies(self):
        h = (0.0,) + tuple(self.block_entropies)
        return [h[i] - h[i - 1] for i in range(1, len(h))]


def entropy_report(model, n: int) -> EntropyReport:
    if n < 1:
        raise ValidationError("n must be positive")
    return EntropyReport(tuple(block_entropy(model, k) for k in range(1, n + 1)))


@dataclass(frozen=True)
class SmbTrajectory:
    """``values[i]`` is -(1/(i+1)) log2 mu(x_1 .. x_{i+1})."""

    values: np.ndarray

    @property
    def final(self) -> float:
        return float(self.values[-1])


def smb_trajectory(model, path) -> SmbTrajectory:
    """Running -(1/n) log2 mu of the prefixes of ``path``.

    Log-measures are accumulated incrementally by the model (one forward
    step, or one interval intersection, per symbol).
    """
    path = as_word(path)
    if path.size == 0:
        raise ValidationError("path must be non-empty")
    logs = model.log2_prefix_measures(path)
    if not np.all(np.isfinite(logs)):
        bad = int(np.argmax(~np.isfinite(logs)))
        raise ImpossiblePathError(f"prefix of length {bad + 1} has measure zero under the model")
    n = np.arange(1, path.size + 1)
    return SmbTrajectory(-logs / n)


# --------------------------------------------------------------------------
# relative SMB sets


@dataclass(frozen=True)
class RelativeSmbSet:
    """Word pairs (u, v) with mu(u) > 2^-(s+eps)n and mu(v|u) > 2^-(t-s+eps)n.

    Pairs are stored as parallel arrays sorted lexicographically by (u, v).
    """

    n: int
    epsilon: float
    s: float
    t: float
    u_words: np.ndarray
    v_words: np.ndarray
    joint: np.ndarray
    marginal: np.ndarray  # mu(u) for each pair's u
    coverage: float
    _groups: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self):
        return len(self.joint)

    @property
    def pairs(self):
        return {(tuple(u.tolist()), tuple(v.tolist())) for u, v in zip(self.u_words, self.v_words)}

    def groups(self) -> dict:
        """Map from u (tuple) to the lexicographically sorted list of its v words (tuples)."""
        if not self._groups:
            g = {}
            for u, v in zip(self.u_words, self.v_words):
                g.setdefault(tuple(u.tolist()), []).append(tuple(v.tolist()))
            self._groups.update(g)
        return self._groups

    @property
    def distinct_u(self) -> int:
        return len(self.groups())

    @property
    def max_v_per_u(self) -> int:
        return max((len(vs) for vs in self.groups().values()), default=0)

    def u_bound(self) -> float:
        return 2.0 ** ((self.s + self.epsilon) * self.n)

    def v_bound(self) -> float:
        return 2.0 ** ((self.t - self.s + self.epsilon) * self.n)

    def check_bounds(self) -> None:
        if not self.distinct_u < self.u_bound():
            raise InternalConsistencyError(
                f"{self.distinct_u} distinct u, bound {self.u_bound()}"
            )
        if not self.max_v_per_u < self.v_bound():
            raise InternalConsistencyError(
                f"{self.max_v_per_u} v for one u, bound {self.v_bound()}"
            )


def conditional_block_entropy(words: np.ndarray, probs: np.ndarray) -> float:
    """H_n - H_{n-1} with H_{n-1} taken from the marginal on the first n-1 symbols."""
    n = words.shape[1]
    total = fsum(probs)
    h_n = partition_entropy(probs / total)
    if n == 1:
        return h_n
    head = np.ascontiguousarray(words[:, :-1]).view(np.dtype((np.void, n - 1))).ravel()
    _, inv = np.unique(head, return_inverse=True)
    marg = np.zeros(inv.max() + 1)
    np.add.at(marg, inv.ravel(), probs)
    return h_n - partition_entropy(marg / total)


def relative_smb_set(model: JointModel, n: int, epsilon: float, limit: int = JOINT_LIMIT) -> RelativeSmbSet:
    """Build the relative typical set at block length ``n``.

    ``s`` and ``t`` are the conditional block entropies H_n - H_{n-1} of the
    P-process and of the joint process.  Both counting bounds hold by
    construction and are re-checked before returning.
    """
    if not isinstance(model, JointModel):
        raise ValidationError("relative_smb_set needs a JointModel")
    if n < 1 or not epsilon > 0:
        raise ValidationError("need n >= 1 and epsilon > 0")
    u_all, v_all, joint = model.joint_blocks(n, limit)
    pair_words = (u_all.astype(np.int64) * model.r_q + v_all).astype(np.uint8)
    t = conditional_block_entropy(pair_words, joint)

    rows = np.ascontiguousarray(u_all).view(np.dtype((np.void, n))).ravel()
    _, inv = np.unique(rows, return_inverse=True)
    inv = inv.ravel()
    mu_u = np.zeros(inv.max() + 1)
    np.add.at(mu_u, inv, joint)
    first = np.unique(inv, return_index=True)[1]
    s = conditional_block_entropy(u_all[first], mu_u)
    if s > t + 1e-9:
        raise InternalConsistencyError(f"P entropy {s} exceeds joint entropy {t}")
    s = min(s, t)

    marginal = mu_u[inv]
    cond = joint / marginal
    keep = (marginal > 2.0 ** (-(s + epsilon) * n)) & (cond > 2.0 ** (-(t - s + epsilon) * n))
    result = RelativeSmbSet(
        n=n,
        epsilon=float(epsilon),
        s=float(s),
        t=float(t),
        u_words=u_all[keep],
        v_words=v_all[keep],
        joint=joint[keep],
        marginal=marginal[keep],
        coverage=fsum(joint[keep]),
    )
    result.check_bounds()
    return result


def coverage_growth(model: JointModel, epsilon: float, n_list) -> list:
    """Coverage of the relative typical set for each block length in ``n_list``."""
    return [relative_smb_set(model, int(n), epsilon).coverage for n in n_list]

