"""Three-stage column recoder and its decoder.

A column of height ``n`` carries a P-name ``u`` and a Q-name ``v``.  The
recoder overwrites a few levels of ``u`` so that the result still looks like
a P-name almost everywhere while determining both ``u`` and ``v``:

* stage 1 writes markers: 1 at levels ``0 .. 2m-1`` and 0 at every multiple
  of ``m`` from ``2m`` on;
* stage 2 writes the rank of ``v`` inside ``A_n(u)`` as fixed-width base-k
  digits, starting at level ``2m + 1`` and skipping multiples of ``m``;
* stage 3 continues with the same skip rule, writing the rank of the
  ``M``-prefix of ``u`` in a shared codebook followed by the original symbols
  of ``u`` at the markers at or above ``M``.

Every field has a fixed width, so the decoder can locate each digit from the
parameters alone.  All of it has to fit below the overwrite height ``M``.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ergolab.core import as_word
from ergolab.errors import (
    AtypicalColumnError,
    BudgetExceededError,
    CodebookError,
    CorruptionError,
    DesyncError,
    EpsilonTooLargeError,
    InternalConsistencyError,
    LengthMismatchError,
    ValidationError,
)

FORMAT_NAME = "ergolab-codebook"
FORMAT_VERSION = 1


def marker_period(epsilon: float) -> int:
    """m = ceil(1/epsilon), guarded against 1/0.1 evaluating to 10.000000000000002."""
    return max(1, math.ceil(1.0 / epsilon - 1e-9))


def digits_needed(count: int, k: int) -> int:
    """Fixed width ceil(log_k max(count, 2)) computed in integers."""
    count = max(int(count), 2)
    width, cap = 1, k
    while cap < count:
        width += 1
        cap *= k
    return width


def coefficient(h: float, h_prime: float, k: int, epsilon: float) -> float:
    """C(eps) = ((h - h' + eps) log_k 2 + 4 eps) / (1 - (h' + eps) log_k 2)."""
    if k < 2:
        raise ValidationError("k must be at least 2")
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    if not math.log2(k) > h >= h_prime >= 0:
        raise ValidationError(f"need log2 k > h >= h' >= 0, got k={k}, h={h}, h'={h_prime}")
    lk2 = 1.0 / math.log2(k)
    denom = 1.0 - (h_prime + epsilon) * lk2
    if denom <= 0:
        raise EpsilonTooLargeError(f"(h' + eps) log_k 2 = {1 - denom} is not below 1")
    c = ((h - h_prime + epsilon) * lk2 + 4 * epsilon) / denom
    if c >= 1:
        raise EpsilonTooLargeError(f"C(eps) = {c} is not below 1")
    return c


def compute_M(n: int, h: float, h_prime: float, k: int, epsilon: float):
    """Overwrite budget ``M = ceil(max(eps, C) n)`` and the coefficient ``C``.

    Examples
    --------
    >>> M, C = compute_M(1000, 0.0, 0.0, 2, 0.01)
    >>> M, round(C, 6)
    (51, 0.050505)
    """
    c = coefficient(h, h_prime, k, epsilon)
    M = math.ceil(max(epsilon, c) * n - 1e-9)
    return min(M, n), c


# --------------------------------------------------------------------------
# layout


@dataclass(frozen=True)
class Layout:
    markers_one: tuple
    markers_zero: tuple
    index: tuple
    prefix: tuple
    literal_sources: tuple  # marker positions >= M whose u-symbols are saved
    literals: tuple  # where those symbols are written

    def modified(self) -> tuple:
        return tuple(sorted(self.markers_one + self.markers_zero + self.index + self.prefix + self.literals))


def layout(n: int, m: int, M: int, index_width: int, prefix_width: int) -> Layout:
    """Positions used by each stage; raises when stages 2 and 3 do not fit below ``M``."""
    if 2 * m + 1 >= n:
        raise BudgetExceededError(f"height {n} leaves no room above the 2m = {2 * m} marker run")
    ones = tuple(range(2 * m))
    zeros = tuple(range(2 * m, n, m))
    sources = tuple(p for p in zeros if p >= M)
    need = index_width + prefix_width + len(sources)
    slots = []
    p = 2 * m + 1
    while len(slots) < need and p < M:
        if p % m:
            slots.append(p)
        p += 1
    if len(slots) < need:
        raise BudgetExceededError(
            f"stages 2 and 3 need {need} levels but only {len(slots)} are free below M = {M}"
        )
    a, b = index_width, index_width + prefix_width
    return Layout(ones, zeros, tuple(slots[:a]), tuple(slots[a:b]), sources, tuple(slots[b:]))


def _pow2_floor(x: float) -> int:
    """floor(2**x) without float overflow (exact to double precision in the mantissa)."""
    if x < 1000:
        return max(1, math.floor(2.0 ** x))
    i = math.floor(x)
    return int(2.0 ** (x - i) * 2 ** 52) << (i - 52)


def digit_budget(m: int, M: int) -> int:
    """Levels granted to stages 2 and 3: M - 2m - ceil(M/m).

    This is the counting inequality of the construction with every term
    rounded up; it never exceeds :func:`free_slots`, so a field list within
    the budget always has physical room below ``M``.
    """
    return M - 2 * m - -(-M // m)


def free_slots(m: int, M: int) -> int:
    """Levels in (2m, M) that are not multiples of m."""
    if M <= 2 * m + 1:
        return 0
    total = M - 2 * m - 1
    multiples = (M - 1) // m - 2
    return total - multiples


def _to_digits(value: int, width: int, k: int) -> list:
    out = [0] * width
    for j in range(width - 1, -1, -1):
        value, out[j] = divmod(value, k)
    if value:
        raise InternalConsistencyError("value does not fit in its digit field")
    return out


def _from_digits(digits, k: int) -> int:
    value = 0
    for d in digits:
        value = value * k + int(d)
    return value


# --------------------------------------------------------------------------
# parameters and codebooks


@dataclass(frozen=True)
class RecodingParams:
    """Everything the recoder and decoder share for one column height."""

    n: int
    k: int
    h: float
    h_prime: float
    epsilon: float
    m: int
    M: int
    C: float
    index_capacity: int  # max |A_n(u)|, fixes the stage-2 width
    prefix_count: int  # codebook size, fixes the stage-3 rank width

    @classmethod
    def build(cls, n, k, h, h_prime, epsilon, index_capacity=None, prefix_count=None):
        """Derive m, M and C and check that the resulting layout fits.

        Without explicit capacities the widths follow the counting bounds
        2^((h - h' + eps) n) and 2^((h' + eps) M).
        """
        n, k = int(n), int(k)
        M, C = compute_M(n, h, h_prime, k, epsilon)
        m = marker_period(epsilon)
        if index_capacity is None:
            index_capacity = _pow2_floor((h - h_prime + epsilon) * n)
        if prefix_count is None:
            prefix_count = _pow2_floor((h_prime + epsilon) * M)
        params = cls(n, k, float(h), float(h_prime), float(epsilon), m, M, C,
                     int(index_capacity), int(prefix_count))
        if not epsilon * n <= M + 1e-9 or M > n:
            raise InternalConsistencyError("budget outside [eps n, n]")
        if not 2 * m + 1 < M:
            raise BudgetExceededError(
                f"M = {M} leaves no room for the {2 * m}-level marker run",
                minimal_height=minimal_feasible_height(k, h, h_prime, epsilon, index_capacity, prefix_count),
            )
        need = params.index_width + params.prefix_width + len(range(m * -(-M // m), n, m))
        if need > digit_budget(m, M):
            raise BudgetExceededError(
                f"stages 2 and 3 need {need} levels but the budget below M = {M} is {digit_budget(m, M)}",
                minimal_height=minimal_feasible_height(k, h, h_prime, epsilon, index_capacity, prefix_count),
            )
        params.layout()
        return params

    @property
    def index_width(self) -> int:
        return digits_needed(self.index_capacity, self.k)

    @property
    def prefix_width(self) -> int:
        return digits_needed(self.prefix_count, self.k)

    def layout(self) -> Layout:
        return layout(self.n, self.m, self.M, self.index_width, self.prefix_width)

    @property
    def change_bound(self) -> int:
        """Per-column ceiling on modified levels: M + ceil(n/m)."""
        return self.M + -(-self.n // self.m)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "k": self.k, "h": self.h.hex(), "h_prime": self.h_prime.hex(),
            "epsilon": self.epsilon.hex(), "m": self.m, "M": self.M, "C": self.C.hex(),
            "index_capacity": self.index_capacity, "prefix_count": self.prefix_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecodingParams":
        return cls(
            int(d["n"]), int(d["k"]), float.fromhex(d["h"]), float.fromhex(d["h_prime"]),
            float.fromhex(d["epsilon"]), int(d["m"]), int(d["M"]), float.fromhex(d["C"]),
            int(d["index_capacity"]), int(d["prefix_count"]),
        )


def minimal_feasible_height(k, h, h_prime, epsilon, index_capacity=None, prefix_count=None,
                            horizon: int = 1 << 16):
    """Smallest height whose layout fits, or ``None`` below ``horizon``.

    With capacities omitted, the widths come from the counting bounds at each
    candidate height.
    """
    coefficient(h, h_prime, k, epsilon)
    m = marker_period(epsilon)
    for n in range(2 * m + 2, horizon):
        M, _ = compute_M(n, h, h_prime, k, epsilon)
        if M <= 2 * m + 1:
            continue
        ic = index_capacity or _pow2_floor((h - h_prime + epsilon) * n)
        pc = prefix_count or _pow2_floor((h_prime + epsilon) * M)
        need = digits_needed(ic, k) + digits_needed(pc, k) + len(range(m * -(-M // m), n, m))
        if need <= digit_budget(m, M):
            return n
    return None


@dataclass(frozen=True)
class PrefixCodebook:
    """Sorted admissible ``M``-prefixes (tuples); rank = position in the list."""

    M: int
    prefixes: tuple

    def __post_init__(self):
        if any(len(p) != self.M for p in self.prefixes):
            raise ValidationError(f"every prefix must have length {self.M}")
        if list(self.prefixes) != sorted(set(self.prefixes)):
            raise ValidationError("prefixes must be distinct and sorted")

    @classmethod
    def from_words(cls, words, M: int) -> "PrefixCodebook":
        return cls(M, tuple(sorted({tuple(int(s) for s in w[:M]) for w in words})))

    def __len__(self):
        return len(self.prefixes)

    def rank(self, prefix) -> int:
        key = tuple(int(s) for s in prefix)
        i = bisect.bisect_left(self.prefixes, key)
        if i == len(self.prefixes) or self.prefixes[i] != key:
            raise CodebookError(f"prefix {key} is not in the codebook")
        return i

    def unrank(self, r: int) -> tuple:
        if not 0 <= r < len(self.prefixes):
            raise CorruptionError(f"prefix rank {r} outside codebook of size {len(self.prefixes)}")
        return self.prefixes[r]


@dataclass
class HeightCodebook:
    """Parameters, prefix codebook and the sorted ``A_n(u)`` lists for one height."""

    params: RecodingParams
    prefixes: PrefixCodebook
    groups: dict  # u tuple -> sorted list of v tuples
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for u, vs in self.groups.items():
            if list(vs) != sorted(set(vs)):
                raise ValidationError(f"A_n(u) for u={u} must be sorted and distinct")
        self._index = {u: {v: i for i, v in enumerate(vs)} for u, vs in self.groups.items()}

    @property
    def n(self) -> int:
        return self.params.n

    def resolver(self, u) -> list:
        key = tuple(int(s) for s in u)
        if key not in self.groups:
            raise CodebookError(f"u={key} has no A_n(u) list")
        return self.groups[key]

    def index_of(self, u, v) -> int | None:
        return self._index.get(tuple(u), {}).get(tuple(v))

    @classmethod
    def from_pairs(cls, pairs, n, k, h, h_prime, epsilon) -> "HeightCodebook":
        """Codebook over the given (u, v) pairs, all of length ``n``."""
        groups = {}
        for u, v in pairs:
            u = tuple(int(s) for s in u)
            v = tuple(int(s) for s in v)
            if len(u) != n or len(v) != n:
                raise LengthMismatchError(f"pair lengths must equal the height {n}")
            groups.setdefault(u, set()).add(v)
        groups = {u: sorted(vs) for u, vs in sorted(groups.items())}
        if any(max(u) >= k for u in groups):
            raise ValidationError(f"P-names must use symbols below k={k}")
        M, _ = compute_M(n, h, h_prime, k, epsilon)
        prefixes = PrefixCodebook.from_words(groups, M)
        cap = max((len(vs) for vs in groups.values()), default=1)
        params = RecodingParams.build(n, k, h, h_prime, epsilon, cap, max(1, len(prefixes)))
        return cls(params, prefixes, groups)

    @classmethod
    def from_relative_set(cls, rset, k, h, h_prime, epsilon) -> "HeightCodebook":
        pairs = zip(rset.u_words.tolist(), rset.v_words.tolist())
        return cls.from_pairs(pairs, rset.n, k, h, h_prime, epsilon)

    # interchange ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "height": self.n,
            "params": self.params.to_dict(),
            "prefixes": [bytes(p).hex() for p in self.prefixes.prefixes],
            "groups": [[bytes(u).hex(), [bytes(v).hex() for v in vs]] for u, vs in self.groups.items()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HeightCodebook":
        if d.get("format") != FORMAT_NAME:
            raise ValidationError("not a codebook file")
        if d.get("version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported codebook version {d.get('version')}")
        params = RecodingParams.from_dict(d["params"])
        if params.n != d["height"]:
            raise ValidationError("height does not match params")
        prefixes = PrefixCodebook(params.M, tuple(tuple(bytes.fromhex(p)) for p in d["prefixes"]))
        groups = {tuple(bytes.fromhex(u)): [tuple(bytes.fromhex(v)) for v in vs] for u, vs in d["groups"]}
        return cls(params, prefixes, groups)


def dump_codebooks(family: dict) -> str:
    """Serialize ``{height: HeightCodebook}``; byte-stable for equal inputs."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "heights": [family[h].to_dict() for h in sorted(family)],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def load_codebooks(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME or doc.get("version") != FORMAT_VERSION:
        raise ValidationError("unrecognized codebook file header")
    books = [HeightCodebook.from_dict(d) for d in doc["heights"]]
    return {b.n: b for b in books}


# --------------------------------------------------------------------------
# one column


@dataclass(frozen=True)
class RecodedColumn:
    output: np.ndarray
    modified_positions: tuple
    stage_layout: dict  # "markers", "index", "prefix" -> tuples of levels


def recode_column(u, q_index: int, a_n_u_size: int, prefix_codebook: PrefixCodebook,
                  params: RecodingParams) -> RecodedColumn:
    """Overwrite the lower levels of ``u`` with markers, the rank of v and the lost part of u."""
    u = as_word(u, params.k)
    if u.size != params.n:
        raise LengthMismatchError(f"u has length {u.size}, params expect {params.n}")
    if not 0 <= q_index < a_n_u_size:
        raise ValidationError(f"index {q_index} outside A_n(u) of size {a_n_u_size}")
    if a_n_u_size > params.index_capacity:
        raise CodebookError(f"|A_n(u)| = {a_n_u_size} exceeds the index capacity {params.index_capacity}")
    if prefix_codebook.M != params.M:
        raise ValidationError("codebook prefix length differs from M")
    rank = prefix_codebook.rank(u[: params.M])
    if len(prefix_codebook) > params.prefix_count:
        raise CodebookError("codebook larger than the declared prefix count")
    lay = params.layout()
    out = u.copy()
    out[list(lay.markers_one)] = 1
    out[list(lay.markers_zero)] = 0
    out[list(lay.index)] = _to_digits(q_index, params.index_width, params.k)
    out[list(lay.prefix)] = _to_digits(rank, params.prefix_width, params.k)
    if lay.literals:
        out[list(lay.literals)] = u[list(lay.literal_sources)]
    return RecodedColumn(
        output=out,
        modified_positions=lay.modified(),
        stage_layout={
            "markers": lay.markers_one + lay.markers_zero,
            "index": lay.index,
            "prefix": lay.prefix + lay.literals,
        },
    )


def decode_column(w, prefix_codebook: PrefixCodebook, resolver, params: RecodingParams):
    """Recover ``(u, v)`` from a recoded column.

    ``resolver(u)`` must return the sorted list ``A_n(u)``.
    """
    w = as_word(w)
    if w.size != params.n:
        raise LengthMismatchError(f"column has length {w.size}, params expect {params.n}")
    lay = params.layout()
    if np.any(w[list(lay.markers_one)] != 1) or np.any(w[list(lay.markers_zero)] != 0):
        raise DesyncError("marker levels do not carry the base pattern")
    if np.any(w >= params.k):
        raise CorruptionError("symbol outside the recoding alphabet")
    index = _from_digits(w[list(lay.index)], params.k)
    rank = _from_digits(w[list(lay.prefix)], params.k)
    u = w.copy()
    u[: params.M] = prefix_codebook.unrank(rank)
    if lay.literals:
        u[list(lay.literal_sources)] = w[list(lay.literals)]
    candidates = resolver(u)
    if index >= len(candidates):
        raise CorruptionError(f"index {index} outside A_n(u) of size {len(candidates)}")
    return u, np.asarray(candidates[index], dtype=np.uint8)


# --------------------------------------------------------------------------
# whole paths


@dataclass(frozen=True)
class PathRecoding:
    recoded: np.ndarray
    change_fraction: float  # fraction of positions whose symbol changed
    modified_fraction: float  # fraction of positions written by some stage
    bound: float  # max over heights of C + 2 eps, plus the leftover fraction
    columns: int
    max_modified_excess: int  # max over towers of modified - (M + ceil(n/m)); must be <= 0


def recode_path(path_p, path_q, decomposition, family: dict) -> PathRecoding:
    """Recode every tower of ``decomposition``; leftover positions are copied.

    ``family`` maps each tower height to its :class:`HeightCodebook`.
    Columns whose names fall outside the codebook raise
    :class:`AtypicalColumnError`.
    """
    path_p = as_word(path_p)
    path_q = as_word(path_q)
    if path_p.size != decomposition.length or path_q.size != decomposition.length:
        raise LengthMismatchError("paths must match the decomposition length")
    out = path_p.copy()
    modified = 0
    excess = -(1 << 62)
    bound = 0.0
    for t in decomposition.towers:
        book = family.get(t.height)
        if book is None:
            raise AtypicalColumnError(f"no codebook for height {t.height}", column=t)
        u = path_p[t.base_position:t.top]
        v = path_q[t.base_position:t.top]
        i = book.index_of(tuple(u.tolist()), tuple(v.tolist()))
        if i is None:
            raise AtypicalColumnError(
                f"column at {t.base_position} (height {t.height}) is outside A_n", column=t
            )
        size = len(book.groups[tuple(u.tolist())])
        col = recode_column(u, i, size, book.prefixes, book.params)
        out[t.base_position:t.top] = col.output
        modified += len(col.modified_positions)
        excess = max(excess, len(col.modified_positions) - book.params.change_bound)
        bound = max(bound, book.params.C + 2 * book.params.epsilon)
    n = max(decomposition.length, 1)
    change = float(np.count_nonzero(out != path_p)) / n
    result = PathRecoding(
        recoded=out,
        change_fraction=change,
        modified_fraction=modified / n,
        bound=bound + decomposition.leftover_fraction,
        columns=len(decomposition.towers),
        max_modified_excess=excess if decomposition.towers else 0,
    )
    if result.max_modified_excess > 0:
        raise InternalConsistencyError("a column modified more than M + ceil(n/m) levels")
    if result.modified_fraction > result.bound + 1e-12:
        raise InternalConsistencyError(
            f"modified fraction {result.modified_fraction} exceeds {result.bound}"
        )
    return result


def decode_path(recoded, decomposition, family: dict):
    """Decode every tower; returns (path_p, path_q) with -1 at leftover positions of path_q.

    Leftover positions of the P-path are copied from ``recoded`` (they were
    never modified).
    """
    recoded = as_word(recoded)
    p = recoded.astype(np.int64)
    q = np.full(recoded.size, -1, dtype=np.int64)
    for t in decomposition.towers:
        book = family[t.height]
        u, v = decode_column(recoded[t.base_position:t.top], book.prefixes, book.resolver, book.params)
        p[t.base_position:t.top] = u
        q[t.base_position:t.top] = v
    return p, q


@dataclass(frozen=True)
class BaseDetection:
    true_bases: int
    detected: int
    missed: int  # true bases not detected
    spurious: int  # detections that are not bases
    collision_rate: float  # spurious / detected


def detect_bases(recoded, m: int, decomposition=None) -> BaseDetection | np.ndarray:
    """Positions where a 2m-run of 1's is followed by a 0 and the next marker zeros.

    With a decomposition, compare the detections to its true bases and
    report the accidental-collision rate; without one, return the positions.
    """
    w = as_word(recoded)
    n = w.size
    span = 2 * m + 1
    if n < span:
        found = np.empty(0, dtype=np.int64)
    else:
        windows = np.lib.stride_tricks.sliding_window_view(w, span)
        pattern = np.concatenate([np.ones(2 * m, dtype=np.uint8), [0]])
        found = np.flatnonzero(np.all(windows == pattern, axis=1))
    if decomposition is None:
        return found
    truth = {t.base_position for t in decomposition.towers}
    det = set(found.tolist())
    spurious = len(det - truth)
    return BaseDetection(
        true_bases=len(truth),
        detected=len(det),
        missed=len(truth - det),
        spurious=spurious,
        collision_rate=spurious / len(det) if det else 0.0,
    )
