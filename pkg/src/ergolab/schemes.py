"""Observation schemes: functions from a finite word to a real number.

``plugin``
    Empirical block entropy divided by the block length.
``lz78``
    ``c log2(c) / n`` with ``c`` the number of phrases of the incremental parse.
``returntime``
    Average of ``log2(i) / l_i`` over the final quarter of the word, where
    ``l_i`` is the longest match of ``w[i:]`` inside ``w[:i]``.
``freq``
    Relative frequency of one symbol.  Finitely observable but not an
    isomorphism invariant, so it serves as the negative control.

The convergence harness samples many paths and reports how the estimates
concentrate around their median at the largest length.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ergolab import seeds
from ergolab._backend import kernels
from ergolab.core import as_word, fsum
from ergolab.errors import AlphabetError, ValidationError

SCHEME_NAMES = ("plugin", "lz78", "returntime", "freq")

_P1 = 2147483647
_P2 = 2147483629
_B1 = 1000003
_B2 = 999983


# --------------------------------------------------------------------------
# block hashing for the plug-in scheme


def _alphabet(w: np.ndarray) -> int:
    return max(2, int(w.max()) + 1) if w.size else 2


def _window_hash(x: np.ndarray, k: int, base: int, mod: int | None) -> np.ndarray:
    """Polynomial value of every k-window, built from doubled unit windows."""
    acc, acc_len = None, 0
    unit, unit_len = x, 1
    rem = k
    while True:
        if rem & 1:
            if acc is None:
                acc, acc_len = unit, unit_len
            else:
                size = len(unit) - acc_len
                acc = acc[:size] * pow(base, unit_len, mod) + unit[acc_len:acc_len + size]
                if mod is not None:
                    acc %= mod
                acc_len += unit_len
        rem >>= 1
        if not rem:
            return acc
        size = len(unit) - unit_len
        unit = unit[:size] * pow(base, unit_len, mod) + unit[unit_len:unit_len + size]
        if mod is not None:
            unit %= mod
        unit_len *= 2


def block_keys(w, k: int) -> np.ndarray:
    """One integer key per overlapping ``k``-window.

    Exact base-r codes when they fit in 62 bits, otherwise a pair of
    polynomial hashes modulo two primes below 2**31, combined into one key.
    Windows are built by binary composition, so the cost is O(n log k).
    """
    w = as_word(w)
    if k < 1 or k > w.size:
        raise ValidationError(f"block length {k} invalid for a word of length {w.size}")
    r = _alphabet(w)
    x = w.astype(np.int64)
    if k * math.log2(r) <= 62:
        return _window_hash(x, k, r, None)
    return _window_hash(x, k, _B1, _P1) * _P2 + _window_hash(x, k, _B2, _P2)


def empirical_block_entropy(w, k: int) -> float:
    keys = block_keys(w, k)
    _, counts = np.unique(keys, return_counts=True)
    p = counts / counts.sum()
    return max(0.0, -fsum(p * np.log2(p)))


# --------------------------------------------------------------------------
# the four schemes


def fixed_block_length(n: int, r: int) -> int:
    """k = max(1, floor(log2 n / (2 log2 r)))."""
    return max(1, int(math.floor(math.log2(n) / (2 * math.log2(max(r, 2))) + 1e-12)))


def adaptive_block_length(w) -> int:
    """Largest k <= max(1, floor(sqrt(n)/2)) whose empirical H_k stays within (1/2) log2 n.

    H_k is non-decreasing in k, so the admissible lengths form an initial
    segment; the search doubles k and then bisects.
    """
    w = as_word(w)
    n = w.size
    cap = max(1, math.isqrt(n) // 2)
    budget = 0.5 * math.log2(n)

    def ok(k):
        return empirical_block_entropy(w, k) <= budget

    if not ok(1):
        return 1
    lo = 1
    hi = 2
    while hi <= cap and ok(hi):
        lo, hi = hi, hi * 2
    hi = min(hi, cap + 1)
    while hi - lo > 1:  # ok(lo) holds, ok(hi) fails or hi is beyond the cap
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def plugin_scheme(w, policy: str = "adaptive") -> float:
    """H(empirical k-block distribution) / k.

    ``policy="fixed"`` uses k = floor(log2 n / (2 log2 r)); ``"adaptive"``
    (the default) uses :func:`adaptive_block_length`.
    """
    w = as_word(w)
    if w.size < 2:
        raise ValidationError("plugin scheme needs at least 2 symbols")
    if policy == "fixed":
        k = fixed_block_length(w.size, _alphabet(w))
    elif policy == "adaptive":
        k = adaptive_block_length(w)
    else:
        raise ValidationError(f"unknown plug-in policy {policy!r}")
    k = min(k, w.size)
    return empirical_block_entropy(w, k) / k


def lz78_phrase_count(w) -> int:
    w = np.ascontiguousarray(as_word(w))
    return int(kernels.lz78_phrase_count(w, _alphabet(w)))


def lz78_scheme(w) -> float:
    """c log2(c) / n for the incremental parse (the last partial phrase counts).

    Examples
    --------
    >>> round(lz78_scheme([0, 1]), 6)
    0.5
    """
    w = as_word(w)
    if w.size < 2:
        raise ValidationError("lz78 scheme needs at least 2 symbols")
    c = lz78_phrase_count(w)
    return c * math.log2(c) / w.size


def match_lengths(w, start: int) -> np.ndarray:
    """l_i for i in [start, n): longest prefix of w[i:] that occurs inside w[:i]."""
    w = np.ascontiguousarray(as_word(w))
    return np.asarray(kernels.match_lengths(w, _alphabet(w), int(start)), dtype=np.int64)


def returntime_scheme(w) -> float:
    """Mean of log2(i) / max(l_i, 1) over the probes i in the final quarter."""
    w = as_word(w)
    n = w.size
    if n < 16:
        raise ValidationError("returntime scheme needs at least 16 symbols")
    start = n - n // 4
    ell = np.maximum(match_lengths(w, start), 1)
    i = np.arange(start, n)
    return fsum(np.log2(i) / ell) / len(i)


def freq_scheme(w, symbol: int = 1, alphabet_size: int | None = None) -> float:
    w = as_word(w)
    if w.size < 1:
        raise ValidationError("freq scheme needs a non-empty word")
    if symbol < 0 or (alphabet_size is not None and symbol >= alphabet_size) or symbol >= 256:
        raise AlphabetError(f"symbol {symbol} outside the alphabet")
    return float(np.count_nonzero(w == symbol)) / w.size


# --------------------------------------------------------------------------
# descriptors and convergence reports


@dataclass(frozen=True)
class SchemeDescriptor:
    """A named scheme with its parameters; calling it evaluates the scheme."""

    name: str
    parameters: tuple = ()  # sorted (key, value) pairs

    def __post_init__(self):
        if self.name not in SCHEME_NAMES:
            raise ValidationError(f"unknown scheme {self.name!r}; choose from {', '.join(SCHEME_NAMES)}")
        p = dict(self.parameters)
        allowed = {"plugin": {"policy"}, "freq": {"symbol"}}.get(self.name, set())
        extra = set(p) - allowed
        if extra:
            raise ValidationError(f"scheme {self.name} takes no parameter(s) {sorted(extra)}")
        if self.name == "plugin" and p.get("policy", "adaptive") not in ("adaptive", "fixed"):
            raise ValidationError("plugin policy must be 'adaptive' or 'fixed'")
        if self.name == "freq" and not 0 <= int(p.get("symbol", 1)) < 256:
            raise ValidationError("freq symbol must lie in [0, 256)")

    @classmethod
    def parse(cls, text: str) -> "SchemeDescriptor":
        """``name`` or ``name:value`` (plugin:fixed, freq:0) or ``name:key=value,...``."""
        name, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, rest.split(",")):
            key, eq, value = item.partition("=")
            if not eq:
                key, value = {"plugin": "policy", "freq": "symbol"}.get(name, "value"), key
            params[key.strip()] = value.strip()
        if "symbol" in params:
            try:
                params["symbol"] = int(params["symbol"])
            except ValueError:
                raise ValidationError(f"freq symbol must be an integer, got {params['symbol']!r}") from None
        return cls(name, tuple(sorted(params.items())))

    @property
    def label(self) -> str:
        if not self.parameters:
            return self.name
        return self.name + ":" + ",".join(f"{k}={v}" for k, v in self.parameters)

    @property
    def is_entropy(self) -> bool:
        return self.name != "freq"

    def min_length(self) -> int:
        return {"plugin": 2, "lz78": 2, "returntime": 16, "freq": 1}[self.name]

    def __call__(self, w) -> float:
        p = dict(self.parameters)
        if self.name == "plugin":
            return plugin_scheme(w, p.get("policy", "adaptive"))
        if self.name == "lz78":
            return lz78_scheme(w)
        if self.name == "returntime":
            return returntime_scheme(w)
        return freq_scheme(w, int(p.get("symbol", 1)))


def thread_count() -> int:
    env = os.environ.get("ERGOLAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValidationError(f"ERGOLAB_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise ValidationError("ERGOLAB_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ConvergenceReport:
    scheme: str
    model: str
    n_grid: tuple
    trials: int
    estimates: np.ndarray  # trials x len(n_grid)
    seeds: tuple  # per-trial seeds
    epsilon: float
    limit_estimate: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "limit_estimate", float(np.median(self.estimates[:, -1])))

    def in_probability_fraction(self, epsilon: float | None = None) -> float:
        eps = self.epsilon if epsilon is None else epsilon
        final = self.estimates[:, -1]
        return float(np.count_nonzero(np.abs(final - self.limit_estimate) <= eps)) / len(final)

    def within(self, epsilon: float | None = None) -> np.ndarray:
        """Boolean matrix: estimate within epsilon of the limit estimate."""
        eps = self.epsilon if epsilon is None else epsilon
        return np.abs(self.estimates - self.limit_estimate) <= eps


def trial_seed(master_seed: int, trial: int) -> int:
    return seeds.mix64(master_seed, trial)


def convergence_report(scheme, model, n_grid, trials: int, epsilon: float, master_seed: int,
                       model_name: str = "", threads: int | None = None) -> ConvergenceReport:
    """Evaluate ``scheme`` on growing prefixes of ``trials`` independent sample paths.

    Trial ``t`` samples one path of length ``max(n_grid)`` with seed
    ``mix64(master_seed, t)`` and applies the scheme to each prefix length in
    ``n_grid``.
    """
    if not isinstance(scheme, SchemeDescriptor):
        scheme = SchemeDescriptor.parse(str(scheme))
    grid = tuple(int(n) for n in n_grid)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("n_grid must be non-empty and strictly increasing")
    if grid[0] < scheme.min_length():
        raise ValidationError(f"{scheme.name} needs lengths of at least {scheme.min_length()}")
    if trials < 10:
        raise ValidationError("at least 10 trials are required")
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    trial_seeds = tuple(trial_seed(master_seed, t) for t in range(trials))

    def run(seed):
        path = model.sample(grid[-1], seed)
        if isinstance(path, tuple):  # joint models yield (P-name, Q-name)
            path = path[0]
        return [scheme(path[:n]) for n in grid]

    workers = min(threads or thread_count(), trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, trial_seeds))
    else:
        rows = [run(s) for s in trial_seeds]
    estimates = np.array(rows, dtype=float)
    if not np.all(np.isfinite(estimates)):
        raise ValidationError("scheme produced a non-finite estimate")
    return ConvergenceReport(scheme.label, model_name or repr(model), grid, trials, estimates,
                             trial_seeds, float(epsilon))
