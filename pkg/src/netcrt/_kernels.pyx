# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled kernels for graph generation, rewiring and SI spreading.

Every kernel draws from the numpy bit generator with ``next_double`` only,
in exactly the order used by ``netcrt._fallback``, so the two backends give
identical output for identical generator state. A generator must not be
shared between threads while a kernel runs.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport floor, log1p, sqrt
from libc.stdint cimport int8_t, int32_t, int64_t, uint64_t
from libcpp.vector cimport vector
from numpy.random cimport bitgen_t

import numpy as np

cimport numpy as cnp

cnp.import_array()

# rewire() status codes, shared with the fallback
cdef enum:
    ST_OK = 0
    ST_EXHAUSTED = 1
    ST_TOO_MANY_FAILURES = 2
    ST_NO_VALID_SWAP = 3
    ST_BELOW_TARGET = 4
    ST_TOO_FEW_WITHIN = 5

REWIRE_OK = ST_OK
REWIRE_EXHAUSTED = ST_EXHAUSTED
REWIRE_TOO_MANY_FAILURES = ST_TOO_MANY_FAILURES
REWIRE_NO_VALID_SWAP = ST_NO_VALID_SWAP
REWIRE_BELOW_TARGET = ST_BELOW_TARGET
REWIRE_TOO_FEW_WITHIN = ST_TOO_FEW_WITHIN

cdef enum:
    ENUM_AFTER = 64
    ENUM_LIMIT = 4000000


cdef inline bitgen_t* _bitgen(object rng) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(rng.bit_generator.capsule, "BitGenerator")


cdef inline double _u(bitgen_t* bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef inline int64_t _pick(bitgen_t* bg, int64_t k) noexcept nogil:
    cdef int64_t j = <int64_t>(bg.next_double(bg.state) * k)
    if j >= k:
        j = k - 1
    return j


cdef struct IntSet:
    int64_t* table
    int64_t mask


cdef enum:
    SLOT_EMPTY = -1
    SLOT_GONE = -2


cdef inline uint64_t _mix(int64_t key) noexcept nogil:
    cdef uint64_t h = <uint64_t>key * 0x9E3779B97F4A7C15ULL
    return h ^ (h >> 29)


cdef inline void _set_init(IntSet* st, vector[int64_t]& storage, int64_t expected) noexcept nogil:
    cdef int64_t size = 16
    while size < 4 * expected:
        size *= 2
    storage.assign(size, SLOT_EMPTY)
    st.table = storage.data()
    st.mask = size - 1


cdef inline bint _set_has(IntSet* st, int64_t key) noexcept nogil:
    cdef uint64_t i = _mix(key) & st.mask
    while st.table[i] != SLOT_EMPTY:
        if st.table[i] == key:
            return True
        i = (i + 1) & st.mask
    return False


cdef inline void _set_add(IntSet* st, int64_t key) noexcept nogil:
    cdef uint64_t i = _mix(key) & st.mask
    cdef int64_t gone = -1
    while st.table[i] != SLOT_EMPTY:
        if st.table[i] == key:
            return
        if st.table[i] == SLOT_GONE and gone < 0:
            gone = <int64_t>i
        i = (i + 1) & st.mask
    if gone >= 0:
        st.table[gone] = key
    else:
        st.table[i] = key


cdef inline void _set_remove(IntSet* st, int64_t key) noexcept nogil:
    cdef uint64_t i = _mix(key) & st.mask
    while st.table[i] != SLOT_EMPTY:
        if st.table[i] == key:
            st.table[i] = SLOT_GONE
            return
        i = (i + 1) & st.mask


cdef object _pairs_to_array(vector[int64_t]& flat):
    cdef Py_ssize_t m = flat.size() // 2
    out = np.empty((m, 2), dtype=np.int64)
    cdef int64_t[:, ::1] view = out
    cdef Py_ssize_t i
    for i in range(m):
        view[i, 0] = flat[2 * i]
        view[i, 1] = flat[2 * i + 1]
    return out


cdef void _er_into(bitgen_t* bg, int64_t n, double p, int64_t offset,
                   vector[int64_t]& out) noexcept nogil:
    cdef int64_t v, w
    cdef double lp, skip
    if n < 2 or p <= 0.0:
        return
    if p >= 1.0:
        for v in range(1, n):
            for w in range(v):
                out.push_back(w + offset)
                out.push_back(v + offset)
        return
    lp = log1p(-p)
    v = 1
    w = -1
    while v < n:
        skip = floor(log1p(-_u(bg)) / lp)
        if skip >= <double>n * <double>n:
            break
        w = w + 1 + <int64_t>skip
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            out.push_back(w + offset)
            out.push_back(v + offset)


def er_edges(int64_t n, double p, rng, int64_t offset=0):
    """G(n, p) edges by geometric skipping over the lower triangle."""
    cdef vector[int64_t] out
    cdef bitgen_t* bg = _bitgen(rng)
    with nogil:
        _er_into(bg, n, p, offset, out)
    return _pairs_to_array(out)


cdef void _floyd(bitgen_t* bg, int64_t total, int64_t m,
                 vector[int64_t]& chosen) noexcept nogil:
    """m distinct values from [0, total), in Floyd insertion order."""
    cdef vector[int64_t] storage
    cdef IntSet seen
    cdef int64_t j, t
    _set_init(&seen, storage, m)
    chosen.reserve(m)
    for j in range(total - m, total):
        t = _pick(bg, j + 1)
        if _set_has(&seen, t):
            t = j
        _set_add(&seen, t)
        chosen.push_back(t)


def gnm_edges(int64_t n, int64_t m, rng, int64_t offset=0):
    """G(n, m) edges: Floyd's sampling of m distinct lower-triangle slots.

    Slot ``v*(v-1)/2 + w`` is the pair ``(w, v)``, ``w < v``.
    """
    cdef int64_t total = n * (n - 1) // 2
    if m < 0 or m > total:
        raise ValueError(f"cannot place {m} edges on {n} nodes")
    cdef vector[int64_t] chosen, out
    cdef bitgen_t* bg = _bitgen(rng)
    cdef int64_t k, idx, v
    with nogil:
        _floyd(bg, total, m, chosen)
        out.reserve(2 * m)
        for k in range(m):
            idx = chosen[k]
            v = <int64_t>floor((1.0 + sqrt(1.0 + 8.0 * <double>idx)) / 2.0)
            while v * (v - 1) // 2 > idx:
                v -= 1
            while (v + 1) * v // 2 <= idx:
                v += 1
            out.push_back(idx - v * (v - 1) // 2 + offset)
            out.push_back(v + offset)
    return _pairs_to_array(out)


def rect_m_edges(int64_t n1, int64_t n2, int64_t m, int64_t off1, int64_t off2, rng):
    """Exactly m distinct edges between two disjoint node ranges."""
    cdef int64_t total = n1 * n2
    if m < 0 or m > total:
        raise ValueError(f"cannot place {m} edges on a {n1}x{n2} block")
    cdef vector[int64_t] chosen, out
    cdef bitgen_t* bg = _bitgen(rng)
    cdef int64_t k
    with nogil:
        _floyd(bg, total, m, chosen)
        out.reserve(2 * m)
        for k in range(m):
            out.push_back(off1 + chosen[k] // n2)
            out.push_back(off2 + chosen[k] % n2)
    return _pairs_to_array(out)


def block_edges(int64_t s, const int64_t[::1] counts, const int64_t[:, ::1] pairs, rng):
    """Blockmodel placement with blocks of ``s`` nodes: ``counts[i]`` distinct
    edges between blocks ``pairs[i]``, or inside one block when they agree.
    Same draws as calling ``gnm_edges``/``rect_m_edges`` slot by slot."""
    cdef int64_t P = pairs.shape[0]
    cdef int64_t i, k, a, b, idx, v, total
    cdef vector[int64_t] chosen, out
    cdef bitgen_t* bg = _bitgen(rng)
    for i in range(P):
        a = pairs[i, 0]
        b = pairs[i, 1]
        total = s * (s - 1) // 2 if a == b else s * s
        if counts[i] < 0 or counts[i] > total:
            raise ValueError(f"cannot place {counts[i]} edges in block pair {a}, {b}")
    with nogil:
        for i in range(P):
            a = pairs[i, 0]
            b = pairs[i, 1]
            chosen.clear()
            if a == b:
                _floyd(bg, s * (s - 1) // 2, counts[i], chosen)
                for k in range(counts[i]):
                    idx = chosen[k]
                    v = <int64_t>floor((1.0 + sqrt(1.0 + 8.0 * <double>idx)) / 2.0)
                    while v * (v - 1) // 2 > idx:
                        v -= 1
                    while (v + 1) * v // 2 <= idx:
                        v += 1
                    out.push_back(idx - v * (v - 1) // 2 + a * s)
                    out.push_back(v + a * s)
            else:
                _floyd(bg, s * s, counts[i], chosen)
                for k in range(counts[i]):
                    out.push_back(a * s + chosen[k] // s)
                    out.push_back(b * s + chosen[k] % s)
    return _pairs_to_array(out)


def ba_edges(int64_t n, int64_t m_attach, rng):
    """Preferential attachment from a complete seed graph on m_attach + 1 nodes."""
    cdef vector[int64_t] out
    cdef vector[int64_t] repeated
    cdef vector[int64_t] targets
    cdef int64_t u, v, t, k
    cdef bint seen
    cdef bitgen_t* bg = _bitgen(rng)
    if m_attach < 1 or n <= m_attach:
        raise ValueError("need 1 <= m_attach < n")
    with nogil:
        for v in range(1, m_attach + 1):
            for u in range(v):
                out.push_back(u)
                out.push_back(v)
                repeated.push_back(u)
                repeated.push_back(v)
        for v in range(m_attach + 1, n):
            targets.clear()
            while <int64_t>targets.size() < m_attach:
                t = repeated[_pick(bg, repeated.size())]
                seen = False
                for k in range(<int64_t>targets.size()):
                    if targets[k] == t:
                        seen = True
                        break
                if not seen:
                    targets.push_back(t)
            for k in range(m_attach):
                out.push_back(targets[k])
                out.push_back(v)
                repeated.push_back(targets[k])
                repeated.push_back(v)
    return _pairs_to_array(out)


cdef inline int64_t _key(int64_t a, int64_t b, int64_t nn) noexcept nogil:
    if a < b:
        return a * nn + b
    return b * nn + a


cdef void _shuffle_move(bitgen_t* bg, vector[int64_t]& w0, vector[int64_t]& w1,
                        vector[int64_t]& cross, const int8_t[::1] arm, IntSet* present,
                        int64_t nn) noexcept nogil:
    """One attempt at a degree- and γ-preserving exchange: within edge (a, b)
    of arm r and cross edge (x, y), x in arm r, become (x, b) and (a, y) or
    (x, a) and (b, y)."""
    cdef int64_t r = _pick(bg, 2)
    cdef vector[int64_t]* w = &w0 if r == 0 else &w1
    cdef int64_t iw = _pick(bg, w[0].size() // 2)
    cdef int64_t ic = _pick(bg, cross.size() // 2)
    cdef double u = _u(bg)
    cdef int64_t a = w[0][2 * iw], b = w[0][2 * iw + 1]
    cdef int64_t x = cross[2 * ic], y = cross[2 * ic + 1]
    if arm[x] != r:
        x, y = y, x
    if u >= 0.5:
        a, b = b, a
    if x == a or x == b:
        return
    if _set_has(present, _key(x, b, nn)) or _set_has(present, _key(a, y, nn)):
        return
    _set_remove(present, _key(w[0][2 * iw], w[0][2 * iw + 1], nn))
    _set_remove(present, _key(x, y, nn))
    _set_add(present, _key(x, b, nn))
    _set_add(present, _key(a, y, nn))
    w[0][2 * iw] = x
    w[0][2 * iw + 1] = b
    cross[2 * ic] = a
    cross[2 * ic + 1] = y


def rewire(const int64_t[:, ::1] edges, const int8_t[::1] arm, double target_gamma,
           int64_t max_failures, rng):
    """Degree-preserving swaps turning within-arm edge pairs into cross-arm
    edges, as many as needed to bring γ nearest ``target_gamma``.

    Returns ``(edges, status, failures, swaps)``. When swaps are made the edge
    array lists the remaining arm-0 edges, then the remaining arm-1 edges, then
    the cross edges; otherwise the input is returned unchanged. A negative
    ``max_failures`` means ``100 * m``.
    """
    cdef int64_t m = edges.shape[0]
    cdef int64_t nn = arm.shape[0]
    cdef vector[int64_t] w0, w1, cross, storage
    cdef IntSet present
    cdef int64_t i, a, b, c, d, ia, ib, x0, y0, x1, y1, count, chosen, done = 0
    cdef int64_t failures = 0, streak = 0, orient, status = ST_OK, n_swaps
    cdef bitgen_t* bg = _bitgen(rng)
    cdef double u3
    cdef bint ok
    cdef vector[int64_t] merged

    if max_failures < 0:
        max_failures = 100 * m
    with nogil:
        w0.reserve(2 * m)
        w1.reserve(2 * m)
        cross.reserve(2 * m)
        for i in range(m):
            a = edges[i, 0]
            b = edges[i, 1]
            if arm[a] != arm[b]:
                cross.push_back(a)
                cross.push_back(b)
            elif arm[a] == 0:
                w0.push_back(a)
                w0.push_back(b)
            else:
                w1.push_back(a)
                w1.push_back(b)
        n_swaps = <int64_t>floor((target_gamma * m - <double>(cross.size() // 2)) / 2.0 + 0.5)
        if n_swaps < 0:
            status = ST_BELOW_TARGET
        elif n_swaps > <int64_t>(w0.size() // 2) or n_swaps > <int64_t>(w1.size() // 2):
            status = ST_TOO_FEW_WITHIN
    if status != ST_OK or n_swaps == 0:
        return np.asarray(edges), status, 0, n_swaps

    with nogil:
        _set_init(&present, storage, m)
        for i in range(m):
            _set_add(&present, _key(edges[i, 0], edges[i, 1], nn))
        while done < n_swaps:
            if w0.size() == 0 or w1.size() == 0:
                status = ST_EXHAUSTED
                break
            if streak >= ENUM_AFTER and (w0.size() // 2) * (w1.size() // 2) <= ENUM_LIMIT:
                # rejection is starving: choose uniformly among all valid swaps
                count = 0
                for ia in range(<int64_t>w0.size() // 2):
                    for ib in range(<int64_t>w1.size() // 2):
                        a = w0[2 * ia]; b = w0[2 * ia + 1]
                        c = w1[2 * ib]; d = w1[2 * ib + 1]
                        if (not _set_has(&present, _key(a, c, nn))
                                and not _set_has(&present, _key(b, d, nn))):
                            count += 1
                        if (not _set_has(&present, _key(a, d, nn))
                                and not _set_has(&present, _key(b, c, nn))):
                            count += 1
                if count == 0:
                    # every pairing collides: trade endpoints between a within
                    # edge and a cross edge (γ unchanged), then look again
                    if cross.size() == 0:
                        status = ST_NO_VALID_SWAP
                        break
                    failures += 1
                    if failures > max_failures:
                        status = ST_TOO_MANY_FAILURES
                        break
                    _shuffle_move(bg, w0, w1, cross, arm, &present, nn)
                    continue
                chosen = _pick(bg, count)
                count = 0
                ok = False
                for ia in range(<int64_t>w0.size() // 2):
                    for ib in range(<int64_t>w1.size() // 2):
                        a = w0[2 * ia]; b = w0[2 * ia + 1]
                        c = w1[2 * ib]; d = w1[2 * ib + 1]
                        for orient in range(2):
                            if orient == 0:
                                x0 = a; y0 = c; x1 = b; y1 = d
                            else:
                                x0 = a; y0 = d; x1 = b; y1 = c
                            if (not _set_has(&present, _key(x0, y0, nn))
                                    and not _set_has(&present, _key(x1, y1, nn))):
                                if count == chosen:
                                    ok = True
                                    break
                                count += 1
                        if ok:
                            break
                    if ok:
                        break
            else:
                ia = _pick(bg, w0.size() // 2)
                ib = _pick(bg, w1.size() // 2)
                u3 = _u(bg)
                a = w0[2 * ia]; b = w0[2 * ia + 1]
                c = w1[2 * ib]; d = w1[2 * ib + 1]
                if u3 < 0.5:
                    x0 = a; y0 = c; x1 = b; y1 = d
                else:
                    x0 = a; y0 = d; x1 = b; y1 = c
                if (_set_has(&present, _key(x0, y0, nn))
                        or _set_has(&present, _key(x1, y1, nn))):
                    failures += 1
                    streak += 1
                    if failures > max_failures:
                        status = ST_TOO_MANY_FAILURES
                        break
                    continue
            _set_remove(&present, _key(a, b, nn))
            _set_remove(&present, _key(c, d, nn))
            _set_add(&present, _key(x0, y0, nn))
            _set_add(&present, _key(x1, y1, nn))
            w0[2 * ia] = w0[w0.size() - 2]
            w0[2 * ia + 1] = w0[w0.size() - 1]
            w0.pop_back(); w0.pop_back()
            w1[2 * ib] = w1[w1.size() - 2]
            w1[2 * ib + 1] = w1[w1.size() - 1]
            w1.pop_back(); w1.pop_back()
            cross.push_back(x0); cross.push_back(y0)
            cross.push_back(x1); cross.push_back(y1)
            streak = 0
            done += 1

        merged.reserve(2 * m)
        merged.insert(merged.end(), w0.begin(), w0.end())
        merged.insert(merged.end(), w1.begin(), w1.end())
        merged.insert(merged.end(), cross.begin(), cross.end())
    return _pairs_to_array(merged), status, failures, n_swaps


def csr(int64_t n_nodes, const int64_t[:, ::1] edges):
    """Adjacency in CSR form; neighbours appear in edge-list order."""
    cdef int64_t m = edges.shape[0]
    indptr_arr = np.zeros(n_nodes + 1, dtype=np.int64)
    indices_arr = np.empty(2 * m, dtype=np.int64)
    cdef int64_t[::1] indptr = indptr_arr
    cdef int64_t[::1] indices = indices_arr
    cdef vector[int64_t] fill
    cdef int64_t i, a, b
    for i in range(m):
        indptr[edges[i, 0] + 1] += 1
        indptr[edges[i, 1] + 1] += 1
    for i in range(n_nodes):
        indptr[i + 1] += indptr[i]
    fill.assign(indptr.shape[0] - 1, 0)
    for i in range(n_nodes):
        fill[i] = indptr[i]
    for i in range(m):
        a = edges[i, 0]
        b = edges[i, 1]
        indices[fill[a]] = b
        fill[a] += 1
        indices[fill[b]] = a
        fill[b] += 1
    return indptr_arr, indices_arr


def spread(const int64_t[::1] indptr, const int64_t[::1] indices, const int8_t[::1] arm,
           double p0, double p1, bint degree_mode, const int64_t[::1] seeds,
           int64_t stop_count, int64_t max_steps, rng):
    """Synchronous discrete-time SI spreading.

    Returns ``(infected_at, end_time, reached)``: infection step per node
    (-1 if never infected), the last simulated step, and whether the
    infected count reached ``stop_count``.
    """
    cdef int64_t nn = arm.shape[0]
    out = np.full(nn, -1, dtype=np.int32)
    cdef int32_t[::1] at = out
    cdef int64_t i, s, j, lo, deg, t = 0, total = 0
    cdef double p
    cdef bint reached = False
    cdef bitgen_t* bg = _bitgen(rng)
    for i in range(seeds.shape[0]):
        if at[seeds[i]] < 0:
            at[seeds[i]] = 0
            total += 1
    with nogil:
        if total >= stop_count:
            reached = True
        while not reached and t < max_steps:
            for i in range(nn):
                if at[i] < 0 or at[i] > t:
                    continue
                lo = indptr[i]
                deg = indptr[i + 1] - lo
                if deg == 0:
                    continue
                p = p1 if arm[i] else p0
                if degree_mode:
                    for s in range(lo, lo + deg):
                        j = indices[s]
                        if _u(bg) < p and at[j] < 0:
                            at[j] = <int32_t>(t + 1)
                            total += 1
                else:
                    j = indices[lo + _pick(bg, deg)]
                    if _u(bg) < p and at[j] < 0:
                        at[j] = <int32_t>(t + 1)
                        total += 1
            t += 1
            if total >= stop_count:
                reached = True
    return out, t, bool(reached)
