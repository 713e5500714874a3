"""Pure-Python versions of the compiled kernels in ``_core.pyx``.

Outputs match the compiled versions exactly; they are slower by one to two
orders of magnitude and are used when the extension is not built or when
``ERGOLAB_BACKEND=python`` is set.
"""

from bisect import bisect_right

import numpy as np

_MASK128 = (1 << 128) - 1


def markov_walk(cum, init_cum, u):
    n = len(u)
    out = np.empty(n, dtype=np.int32)
    if n == 0:
        return out
    m = len(init_cum)
    rows = [list(row[: m - 1]) for row in np.asarray(cum)]
    s = bisect_right(list(init_cum[: m - 1]), float(u[0]))
    out[0] = s
    for i, x in enumerate(np.asarray(u)[1:].tolist(), start=1):
        s = bisect_right(rows[s], x)
        out[i] = s
    return out


def rotation_codes(x_hi, x_lo, a_hi, a_lo, bp_hi, bp_lo, symbols, n):
    x = (int(x_hi) << 64) | int(x_lo)
    a = (int(a_hi) << 64) | int(a_lo)
    bps = [(int(h) << 64) | int(l) for h, l in zip(bp_hi, bp_lo)]
    syms = [int(s) for s in symbols]
    out = bytearray(n)
    for i in range(n):
        out[i] = syms[bisect_right(bps, x) - 1]
        x = (x + a) & _MASK128
    return np.frombuffer(bytes(out), dtype=np.uint8).copy()


def lz78_phrase_count(w, r):
    trie = {}
    node = 0
    c = 0
    for sym in np.asarray(w).tolist():
        child = trie.get((node, sym))
        if child is not None:
            node = child
            continue
        trie[(node, sym)] = len(trie) + 1
        c += 1
        node = 0
    if node != 0:
        c += 1
    return c


def match_lengths(w, r, start):
    w = np.asarray(w).tolist()
    n = len(w)
    out = np.zeros(max(n - start, 0), dtype=np.int64)
    nxt = [{}]
    link = [-1]
    length = [0]
    last = 0
    st = 0
    ell = 0
    for i in range(n):
        if i >= start:
            while i + ell < n and w[i + ell] in nxt[st]:
                st = nxt[st][w[i + ell]]
                ell += 1
            out[i - start] = ell
        c = w[i]
        cur = len(nxt)
        nxt.append({})
        link.append(0)
        length.append(length[last] + 1)
        p = last
        while p != -1 and c not in nxt[p]:
            nxt[p][c] = cur
            p = link[p]
        if p != -1:
            q = nxt[p][c]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = len(nxt)
                nxt.append(dict(nxt[q]))
                link.append(link[q])
                length.append(length[p] + 1)
                while p != -1 and nxt[p].get(c) == q:
                    nxt[p][c] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
                if i >= start and st == q and ell <= length[clone]:
                    st = clone
        last = cur
        if i >= start and ell > 0:
            ell -= 1
            if ell <= length[link[st]]:
                st = link[st]
    return out
