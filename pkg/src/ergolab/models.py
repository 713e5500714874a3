"""Stationary ergodic process models with a seeded sampler and exact cylinder measures.

Model kinds: :class:`IIDModel`, :class:`MarkovModel` (optionally lumped
through a non-injective labeling), :class:`RotationModel` (irrational circle
rotation coded by an interval partition, exact 128-bit fixed point),
:class:`ProductModel` and :class:`JointModel` (a pair of labelings of one
model).  All are immutable after construction.
"""

from __future__ import annotations

import json
import math
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import numpy as np

from ergolab import seeds
from ergolab._backend import kernels
from ergolab.core import as_word, fsum
from ergolab.errors import (
    AlphabetError,
    CapacityError,
    ImpossiblePathError,
    ModelError,
    NullConditioningError,
    ValidationError,
)

BLOCK_LIMIT = 1 << 22
JOINT_LIMIT = 1 << 24

ONE = 1 << 128  # fixed-point unit for rotations
_MASK64 = (1 << 64) - 1
_PI_MINUS_3 = "0.14159265358979323846264338327950288419716939937510582097494459"


# --------------------------------------------------------------------------
# fixed point helpers

def fixed_from_decimal(text) -> int:
    """Nearest 128-bit fixed-point fraction to a decimal string in [0, 1)."""
    frac = Fraction(str(text))
    if not 0 <= frac < 1:
        raise ModelError(f"fraction {text} outside [0, 1)")
    x = round(frac * ONE)
    return x % ONE


def fixed_to_decimal(x: int, digits: int = 45) -> str:
    with localcontext() as ctx:
        ctx.prec = digits
        return str(+(Decimal(x) / Decimal(ONE)))


def golden_conjugate() -> int:
    """(sqrt(5) - 1) / 2 truncated to 128 fractional bits."""
    return (math.isqrt(5 << 256) - ONE) >> 1


def sqrt2_minus_1() -> int:
    return math.isqrt(2 << 256) - ONE


def pi_minus_3() -> int:
    return math.floor(Fraction(_PI_MINUS_3) * ONE)


def _split(x: int):
    return np.uint64(x >> 64), np.uint64(x & _MASK64)


def _shift(intervals, d):
    out = []
    for a, b in intervals:
        lo = (a + d) % ONE
        hi = lo + (b - a)
        if hi <= ONE:
            out.append((lo, hi))
        else:
            out.append((lo, ONE))
            out.append((0, hi - ONE))
    out.sort()
    return out


def _intersect(xs, ys):
    out = []
    i = j = 0
    while i < len(xs) and j < len(ys):
        lo = max(xs[i][0], ys[j][0])
        hi = min(xs[i][1], ys[j][1])
        if lo < hi:
            out.append((lo, hi))
        if xs[i][1] < ys[j][1]:
            i += 1
        else:
            j += 1
    return out


def _merge_words(words: np.ndarray, probs: np.ndarray):
    """Sort rows lexicographically and add the probabilities of duplicates."""
    n = words.shape[1]
    if words.shape[0] == 0:
        return words, probs
    rows = np.ascontiguousarray(words).view(np.dtype((np.void, n))).ravel()
    _, first, inv = np.unique(rows, return_index=True, return_inverse=True)
    merged = np.zeros(len(first))
    np.add.at(merged, inv.ravel(), probs)
    return words[first], merged


# --------------------------------------------------------------------------
# models

class IIDModel:
    kind = "iid"

    def __init__(self, weights):
        w = np.array([float(x) for x in weights], dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0):
            raise ModelError("weights must be a non-empty non-negative vector")
        if abs(fsum(w) - 1.0) > 1e-12:
            raise ModelError(f"weights sum to {fsum(w)!r}, not 1")
        if w.size > 256:
            raise ModelError("at most 256 symbols")
        self.weights = w
        self.alphabet_size = w.size

    def __repr__(self):
        return f"IIDModel({self.weights.tolist()})"

    def sample(self, n: int, seed: int) -> np.ndarray:
        _check_length(n)
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        u = seeds.generator(seed).random(n)
        return np.searchsorted(cum[:-1], u, side="right").astype(np.uint8)

    def cylinder_measure(self, u) -> float:
        u = _symbols(u, self.alphabet_size)
        return float(np.prod(self.weights[u]))

    def log2_prefix_measures(self, path) -> np.ndarray:
        path = _symbols(path, self.alphabet_size)
        with np.errstate(divide="ignore"):
            logs = np.log2(self.weights[path])
        return np.cumsum(logs)

    def entropy_rate(self):
        p = self.weights[self.weights > 0]
        return float(-fsum(p * np.log2(p)))

    def as_markov(self) -> "MarkovModel":
        r = self.alphabet_size
        return MarkovModel(np.tile(self.weights, (r, 1)), validate=False)

    def blocks(self, n: int, limit: int = BLOCK_LIMIT):
        return self.as_markov().blocks(n, limit)

    def to_dict(self):
        return {"kind": "iid", "weights": [repr(float(x)) for x in self.weights]}


class MarkovModel:
    """Finite-state chain observed through ``labeling`` (identity by default)."""

    def __init__(self, transition, labeling=None, alphabet_size=None, validate=True):
        T = np.array([[float(x) for x in row] for row in transition], dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] == 0:
            raise ModelError("transition must be a non-empty square matrix")
        if np.any(T < 0):
            raise ModelError("transition probabilities must be non-negative")
        for i, row in enumerate(T):
            if abs(fsum(row) - 1.0) > 1e-12:
                raise ModelError(f"row {i} sums to {fsum(row)!r}, not 1")
        m = T.shape[0]
        if labeling is None:
            lab = np.arange(m)
        else:
            lab = np.array([int(x) for x in labeling])
            if lab.shape != (m,) or lab.min() < 0:
                raise ModelError("labeling must assign a symbol to every state")
        r = int(lab.max()) + 1 if alphabet_size is None else int(alphabet_size)
        if r > 256 or lab.max() >= r:
            raise ModelError("labeling symbols must lie in the alphabet (at most 256)")
        if validate and not _primitive(T):
            raise ModelError("chain must be irreducible and aperiodic")
        self.transition = T
        self.labeling = lab
        self.states = m
        self.alphabet_size = r
        self.stationary = _stationary(T)
        if np.max(np.abs(self.stationary @ T - self.stationary)) > 1e-10:
            raise ModelError("stationary vector did not converge")
        self.injective = len(set(lab.tolist())) == m
        self.kind = "markov" if self.injective else "lumped-markov"
        self._masks = np.array([lab == a for a in range(r)], dtype=float)

    def __repr__(self):
        return f"MarkovModel(states={self.states}, alphabet={self.alphabet_size})"

    def sample_states(self, n: int, seed: int) -> np.ndarray:
        _check_length(n)
        u = seeds.generator(seed).random(n)
        cum = np.ascontiguousarray(np.cumsum(self.transition, axis=1))
        cum[:, -1] = 1.0
        init = np.cumsum(self.stationary)
        init[-1] = 1.0
        return kernels.markov_walk(cum, np.ascontiguousarray(init), u)

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self.labeling[self.sample_states(n, seed)].astype(np.uint8)

    def cylinder_measure(self, u) -> float:
        u = _symbols(u, self.alphabet_size)
        f = self.stationary * self._masks[u[0]]
        for a in u[1:]:
            f = (f @ self.transition) * self._masks[a]
        return float(f.sum())

    def log2_prefix_measures(self, path) -> np.ndarray:
        path = _symbols(path, self.alphabet_size)
        if self.injective:
            inv = np.empty(self.alphabet_size, dtype=np.int64)
            inv[:] = -1
            inv[self.labeling] = np.arange(self.states)
            s = inv[path]
            if np.any(s < 0):
                bad = int(np.argmax(s < 0))
                return np.concatenate([np.zeros(bad), np.full(len(path) - bad, -np.inf)])
            with np.errstate(divide="ignore"):
                steps = np.log2(self.transition[s[:-1], s[1:]])
                first = np.log2(self.stationary[s[0]])
            return first + np.concatenate([[0.0], np.cumsum(steps)])
        out = np.empty(len(path))
        f = self.stationary * self._masks[path[0]]
        logsum = 0.0
        for i in range(len(path)):
            if i:
                f = (f @ self.transition) * self._masks[path[i]]
            c = f.sum()
            if c <= 0:
                out[i:] = -np.inf
                break
            logsum += math.log2(c)
            f = f / c
            out[i] = logsum
        return out

    def entropy_rate(self):
        if not self.injective:
            return None
        T = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(T > 0, T * np.log2(T), 0.0)
        return float(-fsum(self.stationary[:, None] * terms))

    def blocks(self, n: int, limit: int = BLOCK_LIMIT):
        """Positive-measure ``n``-blocks in lexicographic order with their measures."""
        if n < 1:
            raise ValidationError("block length must be positive")
        if self.injective:
            return self._injective_blocks(n, limit)
        r = self.alphabet_size
        masks = self._masks
        fwd = self.stationary[None, :] * masks  # (r, m)
        words = np.arange(r, dtype=np.uint8)[:, None]
        keep = fwd.sum(axis=1) > 0
        words, fwd = words[keep], fwd[keep]
        for _ in range(1, n):
            k = words.shape[0]
            if k * r > limit * 4 and k > limit:
                raise CapacityError(f"more than {limit} positive blocks")
            g = fwd @ self.transition  # (k, m)
            cand = g[:, None, :] * masks[None, :, :]  # (k, r, m)
            probs = cand.sum(axis=2).ravel()
            keep = probs > 0
            if np.count_nonzero(keep) > limit:
                raise CapacityError(f"more than {limit} positive blocks of length {n}")
            new_words = np.empty((k, r, words.shape[1] + 1), dtype=np.uint8)
            new_words[:, :, :-1] = words[:, None, :]
            new_words[:, :, -1] = np.arange(r, dtype=np.uint8)[None, :]
            words = new_words.reshape(k * r, -1)[keep]
            fwd = cand.reshape(k * r, -1)[keep]
        return words, fwd.sum(axis=1)

    def _injective_blocks(self, n, limit):
        # every word pins down its state path, so one probability per word suffices
        order = np.argsort(self.labeling)
        symbols = self.labeling[order].astype(np.uint8)
        probs = self.stationary[order]
        keep = probs > 0
        words = symbols[keep][:, None]
        probs, last = probs[keep], order[keep]
        T = self.transition[order][:, order]
        for _ in range(1, n):
            cand = probs[:, None] * T[np.searchsorted(symbols, self.labeling[last])]
            keep = cand.ravel() > 0
            if np.count_nonzero(keep) > limit:
                raise CapacityError(f"more than {limit} positive blocks of length {n}")
            k, m = cand.shape
            new_words = np.empty((k, m, words.shape[1] + 1), dtype=np.uint8)
            new_words[:, :, :-1] = words[:, None, :]
            new_words[:, :, -1] = symbols[None, :]
            words = new_words.reshape(k * m, -1)[keep]
            probs = cand.ravel()[keep]
            last = np.tile(order, k)[keep]
        return words, probs

    def to_dict(self):
        d = {
            "kind": self.kind,
            "states": self.states,
            "transition": [[repr(float(x)) for x in row] for row in self.transition],
        }
        if not np.array_equal(self.labeling, np.arange(self.states)):
            d["labeling"] = self.labeling.tolist()
        return d


class RotationModel:
    """x -> x + alpha (mod 1) coded by intervals [b_j, b_{j+1}) carrying ``symbols[j]``.

    ``alpha`` and ``breakpoints`` are integers in units of 2**-128; the first
    breakpoint is 0 (it is prepended when missing); by default interval j
    carries symbol j.
    """

    kind = "rotation"

    def __init__(self, alpha: int, breakpoints, symbols=None, alphabet_size=None, check_alpha=True):
        alpha = int(alpha) % ONE
        bps = tuple(int(b) for b in breakpoints)
        if not bps or bps[0] != 0:
            bps = (0,) + bps
        syms = tuple(range(len(bps))) if symbols is None else tuple(int(s) for s in symbols)
        if any(b >= c for b, c in zip(bps, bps[1:])) or bps[-1] >= ONE:
            raise ModelError("breakpoints must be strictly increasing in [0, 1)")
        if len(syms) != len(bps) or min(syms) < 0:
            raise ModelError("one non-negative symbol per interval")
        if check_alpha:
            approx = Fraction(alpha, ONE).limit_denominator(10**6)
            if abs(Fraction(alpha, ONE) - approx) < Fraction(1, 1 << 100):
                raise ModelError(f"alpha is within 2^-100 of {approx}")
        self.alpha = alpha
        self.breakpoints = bps
        self.symbols = syms
        self.alphabet_size = max(syms) + 1 if alphabet_size is None else int(alphabet_size)
        edges = bps + (ONE,)
        self._intervals = {
            a: [(edges[j], edges[j + 1]) for j in range(len(bps)) if syms[j] == a]
            for a in range(self.alphabet_size)
        }
        self._bp_hi = np.array([b >> 64 for b in bps], dtype=np.uint64)
        self._bp_lo = np.array([b & _MASK64 for b in bps], dtype=np.uint64)
        self._sym_arr = np.array(syms, dtype=np.uint8)

    @classmethod
    def two_interval(cls, alpha: int, cut: int):
        """Partition ([0, cut), [cut, 1)) labeled 0 and 1."""
        return cls(alpha, (0, cut), (0, 1))

    @classmethod
    def sturmian(cls, alpha: int):
        """The one-cut coding with n + 1 distinct n-blocks: ([0, 1-alpha), [1-alpha, 1))."""
        return cls(alpha, (0, ONE - alpha), (0, 1))

    def __repr__(self):
        return (
            f"RotationModel(alpha={fixed_to_decimal(self.alpha, 12)}, "
            f"breakpoints={[fixed_to_decimal(b, 6) for b in self.breakpoints]})"
        )

    def itinerary(self, x: int, n: int) -> np.ndarray:
        xh, xl = _split(int(x) % ONE)
        ah, al = _split(self.alpha)
        return kernels.rotation_codes(xh, xl, ah, al, self._bp_hi, self._bp_lo, self._sym_arr, n)

    def sample(self, n: int, seed: int) -> np.ndarray:
        _check_length(n)
        hi, lo = seeds.generator(seed).integers(0, 1 << 64, size=2, dtype=np.uint64, endpoint=False)
        return self.itinerary((int(hi) << 64) | int(lo), n)

    def cylinder_set(self, u):
        u = _symbols(u, self.alphabet_size)
        current = list(self._intervals[int(u[0])])
        for i in range(1, len(u)):
            if not current:
                break
            shifted = _shift(self._intervals[int(u[i])], -i * self.alpha)
            current = _intersect(current, shifted)
        return current

    def cylinder_length(self, u) -> int:
        """Exact measure of the cylinder in units of 2**-128."""
        return sum(b - a for a, b in self.cylinder_set(u))

    def cylinder_measure(self, u) -> float:
        return self.cylinder_length(u) / ONE

    def log2_prefix_measures(self, path) -> np.ndarray:
        path = _symbols(path, self.alphabet_size)
        out = np.empty(len(path))
        current = list(self._intervals[int(path[0])])
        for i in range(len(path)):
            if i:
                current = _intersect(current, _shift(self._intervals[int(path[i])], -i * self.alpha))
            total = sum(b - a for a, b in current)
            if total == 0:
                out[i:] = -np.inf
                break
            out[i] = math.log2(total) - 128
        return out

    def entropy_rate(self):
        return 0.0

    def blocks(self, n: int, limit: int = BLOCK_LIMIT):
        """Positive-measure ``n``-blocks via the arcs cut out by the preimages of the breakpoints."""
        if n < 1:
            raise ValidationError("block length must be positive")
        if n * len(self.breakpoints) > limit:
            raise CapacityError(f"more than {limit} arcs for length {n}")
        cuts = sorted({(b - i * self.alpha) % ONE for b in self.breakpoints for i in range(n)})
        lengths = [c2 - c1 for c1, c2 in zip(cuts, cuts[1:])] + [cuts[0] + ONE - cuts[-1]]
        words = np.empty((len(cuts), n), dtype=np.uint8)
        for k, c in enumerate(cuts):
            words[k] = self.itinerary(c, n)
        probs = np.array([x / ONE for x in lengths])
        return _merge_words(words, probs)

    def to_dict(self):
        return {
            "kind": "rotation",
            "alpha": fixed_to_decimal(self.alpha),
            "breakpoints": [fixed_to_decimal(b) for b in self.breakpoints],
            "symbols": list(self.symbols),
        }


class ProductModel:
    """Independent product; the symbol of a pair (a, b) is ``a * r_right + b``."""

    kind = "product"

    def __init__(self, left, right):
        self.left = left
        self.right = right
        self.alphabet_size = left.alphabet_size * right.alphabet_size
        if self.alphabet_size > 256:
            raise ModelError("product alphabet exceeds 256 symbols")

    def __repr__(self):
        return f"ProductModel({self.left!r}, {self.right!r})"

    def split(self, word):
        w = _symbols(word, self.alphabet_size)
        rr = self.right.alphabet_size
        return (w // rr).astype(np.uint8), (w % rr).astype(np.uint8)

    def combine(self, left_word, right_word):
        rr = self.right.alphabet_size
        return (np.asarray(left_word, dtype=np.int64) * rr + np.asarray(right_word)).astype(np.uint8)

    def sample(self, n: int, seed: int) -> np.ndarray:
        _check_length(n)
        a = self.left.sample(n, seeds.mix64(seed, 0))
        b = self.right.sample(n, seeds.mix64(seed, 1))
        return self.combine(a, b)

    def cylinder_measure(self, u) -> float:
        a, b = self.split(u)
        return self.left.cylinder_measure(a) * self.right.cylinder_measure(b)

    def log2_prefix_measures(self, path) -> np.ndarray:
        a, b = self.split(path)
        return self.left.log2_prefix_measures(a) + self.right.log2_prefix_measures(b)

    def entropy_rate(self):
        x, y = self.left.entropy_rate(), self.right.entropy_rate()
        return None if x is None or y is None else x + y

    def blocks(self, n: int, limit: int = BLOCK_LIMIT):
        wl, pl = self.left.blocks(n, limit)
        wr, pr = self.right.blocks(n, limit)
        if len(pl) * len(pr) > limit:
            raise CapacityError(f"more than {limit} positive blocks")
        rr = self.right.alphabet_size
        words = (wl.astype(np.int64)[:, None, :] * rr + wr[None, :, :]).astype(np.uint8)
        words = words.reshape(-1, n)
        probs = (pl[:, None] * pr[None, :]).ravel()
        return _merge_words(words, probs)

    def to_dict(self):
        return {"kind": "product", "left": self.left.to_dict(), "right": self.right.to_dict()}


class RelabeledModel:
    """A model observed through a symbol map; measures by block enumeration."""

    kind = "relabeled"

    def __init__(self, base, mapping, alphabet_size=None):
        self.base = base
        self.mapping = np.array([int(x) for x in mapping], dtype=np.uint8)
        if self.mapping.size != base.alphabet_size:
            raise ModelError("mapping must cover the base alphabet")
        self.alphabet_size = int(self.mapping.max()) + 1 if alphabet_size is None else alphabet_size

    def sample(self, n: int, seed: int) -> np.ndarray:
        return self.mapping[self.base.sample(n, seed)]

    def blocks(self, n: int, limit: int = BLOCK_LIMIT):
        words, probs = self.base.blocks(n, limit)
        return _merge_words(self.mapping[words], probs)

    def cylinder_measure(self, u) -> float:
        u = _symbols(u, self.alphabet_size)
        words, probs = self.blocks(len(u))
        hit = np.all(words == u[None, :], axis=1)
        return float(probs[hit].sum())

    def log2_prefix_measures(self, path) -> np.ndarray:
        return np.log2([self.cylinder_measure(path[: i + 1]) for i in range(len(path))])

    def entropy_rate(self):
        return None


class JointModel:
    """Two labelings (P and Q) of one underlying model.

    For a Markov base the labelings act on states; for any other base they
    act on its symbols, and ``labeling_q`` must then be injective.
    """

    kind = "joint"

    def __init__(self, base, labeling_p, labeling_q):
        if isinstance(base, IIDModel):
            base = base.as_markov()
        self.base = base
        lp = np.array([int(x) for x in labeling_p], dtype=np.int64)
        lq = np.array([int(x) for x in labeling_q], dtype=np.int64)
        domain = base.states if isinstance(base, MarkovModel) else base.alphabet_size
        if lp.shape != (domain,) or lq.shape != (domain,):
            raise ModelError(f"both labelings must be total on {domain} base symbols/states")
        if lp.min() < 0 or lq.min() < 0:
            raise ModelError("labels must be non-negative")
        self.labeling_p = lp
        self.labeling_q = lq
        self.r_p = int(lp.max()) + 1
        self.r_q = int(lq.max()) + 1
        if self.r_p * self.r_q > 256:
            raise ModelError("pair alphabet exceeds 256 symbols")
        if isinstance(base, MarkovModel):
            T = base.transition
            self.p_model = MarkovModel(T, lp, self.r_p, validate=False)
            self.q_model = MarkovModel(T, lq, self.r_q, validate=False)
            self.pair_model = MarkovModel(T, lp * self.r_q + lq, self.r_p * self.r_q, validate=False)
            self._q_inverse = None
        else:
            if len(set(lq.tolist())) != domain:
                raise ModelError("labeling_q must be injective for a non-Markov base")
            inv = np.zeros(self.r_q, dtype=np.int64)
            inv[lq] = np.arange(domain)
            self._q_inverse = inv
            self.p_model = RelabeledModel(base, lp, self.r_p)
            self.q_model = RelabeledModel(base, lq, self.r_q)
            self.pair_model = RelabeledModel(base, lp * self.r_q + lq, self.r_p * self.r_q)

    def __repr__(self):
        return f"JointModel(base={self.base!r}, r_p={self.r_p}, r_q={self.r_q})"

    @property
    def alphabet_size(self):
        return self.r_p * self.r_q

    def sample(self, n: int, seed: int):
        """A sample path of (P-name, Q-name)."""
        if isinstance(self.base, MarkovModel):
            states = self.base.sample_states(n, seed)
        else:
            states = self.base.sample(n, seed)
        return self.labeling_p[states].astype(np.uint8), self.labeling_q[states].astype(np.uint8)

    def joint_cylinder_measure(self, u, v) -> float:
        u = _symbols(u, self.r_p)
        v = _symbols(v, self.r_q)
        if len(u) != len(v):
            raise ValidationError("u and v must have equal length")
        if self._q_inverse is None:
            return self.pair_model.cylinder_measure(u.astype(np.int64) * self.r_q + v)
        w = self._q_inverse[v]
        if np.any(self.labeling_p[w] != u):
            return 0.0
        return self.base.cylinder_measure(w)

    def conditional_measure(self, u, v) -> float:
        mu_u = self.p_model.cylinder_measure(u)
        if mu_u <= 0:
            raise NullConditioningError(f"cylinder of u={u} has measure zero")
        return self.joint_cylinder_measure(u, v) / mu_u

    def joint_blocks(self, n: int, limit: int = JOINT_LIMIT):
        """Positive (u, v) pairs of length ``n``, sorted by u then v, with joint measures."""
        words, probs = self.pair_model.blocks(n, limit)
        u = (words // self.r_q).astype(np.uint8)
        v = (words % self.r_q).astype(np.uint8)
        order = np.lexsort(np.hstack([u, v])[:, ::-1].T)
        return u[order], v[order], probs[order]

    def entropy_rate(self):
        return self.pair_model.entropy_rate()

    def to_dict(self):
        return {
            "kind": "joint",
            "base": self.base.to_dict(),
            "labeling_p": self.labeling_p.tolist(),
            "labeling_q": self.labeling_q.tolist(),
        }


# --------------------------------------------------------------------------
# helpers and module-level operations

def _check_length(n):
    if int(n) < 1:
        raise ValidationError("sample length must be at least 1")


def _symbols(u, r) -> np.ndarray:
    w = as_word(u)
    if w.size == 0:
        raise ValidationError("word must be non-empty")
    if int(w.max()) >= r:
        raise AlphabetError(f"symbol {int(w.max())} outside alphabet of size {r}")
    return w.astype(np.int64)


def _primitive(T: np.ndarray) -> bool:
    m = T.shape[0]
    A = (T > 0).astype(np.int64)
    P = A.copy()
    for _ in range((m - 1) ** 2):
        P = np.minimum(P @ A, 1)
    return bool(np.all(P > 0))


def _stationary(T: np.ndarray) -> np.ndarray:
    m = T.shape[0]
    A = np.vstack([T.T - np.eye(m), np.ones(m)])
    b = np.zeros(m + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def symmetric_flip(p: float) -> MarkovModel:
    """Two-state chain that changes symbol with probability ``p``."""
    return MarkovModel([[1 - p, p], [p, 1 - p]])


def sample(model, n: int, seed: int) -> np.ndarray:
    return model.sample(n, seed)


def cylinder_measure(model, u) -> float:
    return model.cylinder_measure(u)


def joint_cylinder_measure(model: JointModel, u, v) -> float:
    return model.joint_cylinder_measure(u, v)


def conditional_measure(model: JointModel, u, v) -> float:
    return model.conditional_measure(u, v)


def exact_entropy_rate(model):
    """Entropy rate in bits, or ``None`` when no closed form applies (lumped chains)."""
    return model.entropy_rate()


# --------------------------------------------------------------------------
# model description files

def model_from_dict(d: dict):
    kind = d.get("kind")
    try:
        if kind == "iid":
            return IIDModel(d["weights"])
        if kind in ("markov", "lumped-markov"):
            T = d["transition"]
            if "states" in d and int(d["states"]) != len(T):
                raise ModelError(f"states={d['states']} but transition has {len(T)} rows")
            if kind == "markov":
                return MarkovModel(T, d.get("labeling"))
            return MarkovModel(T, d["labeling"])
        if kind == "rotation":
            return RotationModel(
                fixed_from_decimal(d["alpha"]),
                [fixed_from_decimal(b) for b in d["breakpoints"]],
                d.get("symbols"),
            )
        if kind == "product":
            return ProductModel(model_from_dict(d["left"]), model_from_dict(d["right"]))
        if kind == "joint":
            return JointModel(model_from_dict(d["base"]), d["labeling_p"], d["labeling_q"])
    except KeyError as exc:
        raise ModelError(f"model of kind {kind!r} is missing field {exc}") from None
    raise ModelError(f"unknown model kind {kind!r}")


def load_model(source):
    """Read a model from a JSON file path, a JSON string or a dict."""
    if isinstance(source, dict):
        return model_from_dict(source)
    text = str(source)
    if text.lstrip().startswith("{"):
        return model_from_dict(json.loads(text))
    try:
        data = json.loads(Path(text).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {text}: {exc}") from None
    return model_from_dict(data)


def dump_model(model) -> str:
    return json.dumps(model.to_dict(), indent=2, sort_keys=True)
