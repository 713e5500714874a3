# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every function here has a pure-Python twin in :mod:`ergolab._fallback` with
identical signature and output; :mod:`ergolab._backend` picks one at import.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset

cnp.import_array()

cdef extern from *:
    """
    typedef unsigned __int128 ergo_u128;
    """
    ctypedef unsigned long long ergo_u128


def markov_walk(double[:, ::1] cum, double[::1] init_cum, double[::1] u):
    """Walk a chain driven by uniforms ``u``; state i+1 = #{cum[s] <= u[i+1]}."""
    cdef Py_ssize_t n = u.shape[0], m = init_cum.shape[0]
    cdef Py_ssize_t i, j, s
    out = np.empty(n, dtype=np.int32)
    cdef int[::1] res = out
    if n == 0:
        return out
    with nogil:
        s = 0
        while s < m - 1 and init_cum[s] <= u[0]:
            s += 1
        res[0] = <int>s
        for i in range(1, n):
            j = 0
            while j < m - 1 and cum[s, j] <= u[i]:
                j += 1
            s = j
            res[i] = <int>s
    return out


def rotation_codes(unsigned long long x_hi, unsigned long long x_lo,
                   unsigned long long a_hi, unsigned long long a_lo,
                   cnp.uint64_t[::1] bp_hi, cnp.uint64_t[::1] bp_lo,
                   cnp.uint8_t[::1] symbols, Py_ssize_t n):
    """Itinerary of x under x -> x + a (mod 2**128) through sorted interval starts."""
    cdef Py_ssize_t i, j, nb = bp_hi.shape[0]
    cdef ergo_u128 x = ((<ergo_u128>x_hi) << 64) | (<ergo_u128>x_lo)
    cdef ergo_u128 a = ((<ergo_u128>a_hi) << 64) | (<ergo_u128>a_lo)
    out = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] res = out
    cdef ergo_u128 *bps = <ergo_u128 *>malloc(nb * sizeof(ergo_u128))
    if bps == NULL:
        raise MemoryError()
    for j in range(nb):
        bps[j] = ((<ergo_u128>bp_hi[j]) << 64) | (<ergo_u128>bp_lo[j])
    with nogil:
        for i in range(n):
            j = nb - 1
            while j > 0 and bps[j] > x:
                j -= 1
            res[i] = symbols[j]
            x = x + a
    free(bps)
    return out


def lz78_phrase_count(cnp.uint8_t[::1] w, int r):
    """Number of phrases in the incremental parsing, partial last phrase included."""
    cdef Py_ssize_t n = w.shape[0], i
    cdef Py_ssize_t cap = 1024, nodes = 1, node = 0
    cdef long long c = 0
    cdef int sym, child
    cdef int *kids = <int *>malloc(cap * r * sizeof(int))
    cdef int *grown
    if kids == NULL:
        raise MemoryError()
    memset(kids, 0, cap * r * sizeof(int))
    try:
        with nogil:
            for i in range(n):
                sym = w[i]
                child = kids[node * r + sym]
                if child != 0:
                    node = child
                    continue
                if nodes == cap:
                    grown = <int *>realloc(kids, 2 * cap * r * sizeof(int))
                    if grown == NULL:
                        with gil:
                            raise MemoryError()
                    kids = grown
                    memset(kids + cap * r, 0, cap * r * sizeof(int))
                    cap *= 2
                kids[node * r + sym] = <int>nodes
                nodes += 1
                c += 1
                node = 0
            if node != 0:
                c += 1
    finally:
        free(kids)
    return c


def match_lengths(cnp.uint8_t[::1] w, int r, Py_ssize_t start):
    """For i in [start, n): longest prefix of w[i:] that occurs inside w[:i].

    Online suffix automaton of w[:i]; the current match is carried from probe
    to probe (drop first symbol, re-extend), so total work is linear.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t size = 2 * n + 2
    out = np.zeros(max(n - start, 0), dtype=np.int64)
    cdef long long[::1] res = out
    cdef int *nxt = <int *>malloc(size * r * sizeof(int))
    cdef int *link = <int *>malloc(size * sizeof(int))
    cdef long long *length = <long long *>malloc(size * sizeof(long long))
    if nxt == NULL or link == NULL or length == NULL:
        free(nxt); free(link); free(length)
        raise MemoryError()
    cdef Py_ssize_t i, p2, states = 1, last = 0, cur, p, q, clone, st = 0
    cdef long long ell = 0
    cdef int c
    with nogil:
        for i in range(size * r):
            nxt[i] = -1
        link[0] = -1
        length[0] = 0
        for i in range(n):
            if i >= start:
                while i + ell < n and nxt[st * r + w[i + ell]] != -1:
                    st = nxt[st * r + w[i + ell]]
                    ell += 1
                res[i - start] = ell
            # extend the automaton with w[i]
            c = w[i]
            cur = states
            states += 1
            length[cur] = length[last] + 1
            p = last
            while p != -1 and nxt[p * r + c] == -1:
                nxt[p * r + c] = <int>cur
                p = link[p]
            if p == -1:
                link[cur] = 0
            else:
                q = nxt[p * r + c]
                if length[p] + 1 == length[q]:
                    link[cur] = <int>q
                else:
                    clone = states
                    states += 1
                    length[clone] = length[p] + 1
                    for p2 in range(r):
                        nxt[clone * r + p2] = nxt[q * r + p2]
                    link[clone] = link[q]
                    while p != -1 and nxt[p * r + c] == q:
                        nxt[p * r + c] = <int>clone
                        p = link[p]
                    link[q] = <int>clone
                    link[cur] = <int>clone
                    if i >= start and st == q and ell <= length[clone]:
                        st = clone
            last = cur
            if i >= start and ell > 0:
                ell -= 1
                if ell <= length[link[st]]:
                    st = link[st]
    free(nxt); free(link); free(length)
    return out
