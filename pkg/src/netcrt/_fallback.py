"""Pure-Python kernels, used when the compiled extension is unavailable.

Each function mirrors its counterpart in ``_kernels.pyx`` draw for draw:
only ``rng.random`` is used, and batched draws are laid out in the same
order the compiled loop consumes them.
"""
from __future__ import annotations

import math

import numpy as np

REWIRE_OK = 0
REWIRE_EXHAUSTED = 1
REWIRE_TOO_MANY_FAILURES = 2
REWIRE_NO_VALID_SWAP = 3
REWIRE_BELOW_TARGET = 4
REWIRE_TOO_FEW_WITHIN = 5

ENUM_AFTER = 64
ENUM_LIMIT = 4_000_000


def _pick(rng, k):
    j = int(rng.random() * k)
    return j if j < k else k - 1


def _as_pairs(flat):
    return np.asarray(flat, dtype=np.int64).reshape(-1, 2)


def er_edges(n, p, rng, offset=0):
    out = []
    if n < 2 or p <= 0.0:
        return _as_pairs(out)
    if p >= 1.0:
        rows, cols = np.tril_indices(n, -1)
        return np.column_stack((cols, rows)).astype(np.int64) + offset
    lp = math.log1p(-p)
    v, w = 1, -1
    limit = float(n) * float(n)
    while v < n:
        skip = math.floor(math.log1p(-rng.random()) / lp)
        if skip >= limit:
            break
        w = w + 1 + int(skip)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            out.append(w + offset)
            out.append(v + offset)
    return _as_pairs(out)


def _floyd(rng, total, m):
    """m distinct values from [0, total), in Floyd insertion order."""
    u = rng.random(m).tolist()
    seen = set()
    out = []
    for i, j in enumerate(range(total - m, total)):
        t = int(u[i] * (j + 1))
        if t > j:
            t = j
        if t in seen:
            t = j
        seen.add(t)
        out.append(t)
    return np.asarray(out, dtype=np.int64)


def _triangle_pairs(idx):
    """Slot ``v*(v-1)/2 + w`` to the pair ``(w, v)``."""
    v = np.floor((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(np.float64))) / 2.0).astype(np.int64)
    while True:
        high = v * (v - 1) // 2 > idx
        if not high.any():
            break
        v[high] -= 1
    while True:
        low = (v + 1) * v // 2 <= idx
        if not low.any():
            break
        v[low] += 1
    return np.column_stack((idx - v * (v - 1) // 2, v))


def gnm_edges(n, m, rng, offset=0):
    total = n * (n - 1) // 2
    if m < 0 or m > total:
        raise ValueError(f"cannot place {m} edges on {n} nodes")
    return _triangle_pairs(_floyd(rng, total, m)) + offset


def rect_m_edges(n1, n2, m, off1, off2, rng):
    total = n1 * n2
    if m < 0 or m > total:
        raise ValueError(f"cannot place {m} edges on a {n1}x{n2} block")
    idx = _floyd(rng, total, m).astype(np.int64)
    return np.column_stack((off1 + idx // n2, off2 + idx % n2))


def block_edges(s, counts, pairs, rng):
    parts = [np.zeros((0, 2), dtype=np.int64)]
    for c, (a, b) in zip(np.asarray(counts).tolist(), np.asarray(pairs).tolist()):
        if a == b:
            parts.append(gnm_edges(s, c, rng, a * s))
        else:
            parts.append(rect_m_edges(s, s, c, a * s, b * s, rng))
    return np.concatenate(parts)


def ba_edges(n, m_attach, rng):
    if m_attach < 1 or n <= m_attach:
        raise ValueError("need 1 <= m_attach < n")
    out = []
    repeated = []
    for v in range(1, m_attach + 1):
        for u in range(v):
            out += (u, v)
            repeated += (u, v)
    for v in range(m_attach + 1, n):
        targets = []
        while len(targets) < m_attach:
            t = repeated[_pick(rng, len(repeated))]
            if t not in targets:
                targets.append(t)
        for t in targets:
            out += (t, v)
            repeated += (t, v)
    return _as_pairs(out)


def _key(a, b):
    return (a, b) if a < b else (b, a)


def _shuffle_move(rng, w0, w1, cross, arm, present):
    r = _pick(rng, 2)
    w = w0 if r == 0 else w1
    iw = _pick(rng, len(w))
    ic = _pick(rng, len(cross))
    u = rng.random()
    a, b = w[iw]
    x, y = cross[ic]
    if arm[x] != r:
        x, y = y, x
    if u >= 0.5:
        a, b = b, a
    if x in (a, b) or _key(x, b) in present or _key(a, y) in present:
        return
    present.discard(_key(*w[iw]))
    present.discard(_key(*cross[ic]))
    present.add(_key(x, b))
    present.add(_key(a, y))
    w[iw] = (x, b)
    cross[ic] = (a, y)


def rewire(edges, arm, target_gamma, max_failures, rng):
    edges = np.asarray(edges)
    arm = np.asarray(arm)
    m = edges.shape[0]
    if max_failures < 0:
        max_failures = 100 * m
    w0, w1, cross = [], [], []
    for a, b in edges.tolist():
        if arm[a] != arm[b]:
            cross.append((a, b))
        elif arm[a] == 0:
            w0.append((a, b))
        else:
            w1.append((a, b))
    n_swaps = math.floor((target_gamma * m - float(len(cross))) / 2.0 + 0.5)
    if n_swaps < 0:
        return edges, REWIRE_BELOW_TARGET, 0, n_swaps
    if n_swaps > len(w0) or n_swaps > len(w1):
        return edges, REWIRE_TOO_FEW_WITHIN, 0, n_swaps
    if n_swaps == 0:
        return edges, REWIRE_OK, 0, 0
    present = {_key(a, b) for a, b in edges.tolist()}

    done = failures = streak = 0
    status = REWIRE_OK
    while done < n_swaps:
        if not w0 or not w1:
            status = REWIRE_EXHAUSTED
            break
        if streak >= ENUM_AFTER and len(w0) * len(w1) <= ENUM_LIMIT:
            valid = []
            for ia, (a, b) in enumerate(w0):
                for ib, (c, d) in enumerate(w1):
                    for x0, y0, x1, y1 in ((a, c, b, d), (a, d, b, c)):
                        if _key(x0, y0) not in present and _key(x1, y1) not in present:
                            valid.append((ia, ib, x0, y0, x1, y1))
            if not valid:
                if not cross:
                    status = REWIRE_NO_VALID_SWAP
                    break
                failures += 1
                if failures > max_failures:
                    status = REWIRE_TOO_MANY_FAILURES
                    break
                _shuffle_move(rng, w0, w1, cross, arm, present)
                continue
            ia, ib, x0, y0, x1, y1 = valid[_pick(rng, len(valid))]
        else:
            ia = _pick(rng, len(w0))
            ib = _pick(rng, len(w1))
            u3 = rng.random()
            (a, b), (c, d) = w0[ia], w1[ib]
            if u3 < 0.5:
                x0, y0, x1, y1 = a, c, b, d
            else:
                x0, y0, x1, y1 = a, d, b, c
            if _key(x0, y0) in present or _key(x1, y1) in present:
                failures += 1
                streak += 1
                if failures > max_failures:
                    status = REWIRE_TOO_MANY_FAILURES
                    break
                continue
        present.discard(_key(*w0[ia]))
        present.discard(_key(*w1[ib]))
        present.add(_key(x0, y0))
        present.add(_key(x1, y1))
        w0[ia] = w0[-1]
        w0.pop()
        w1[ib] = w1[-1]
        w1.pop()
        cross += [(x0, y0), (x1, y1)]
        streak = 0
        done += 1

    merged = np.asarray(w0 + w1 + cross, dtype=np.int64).reshape(-1, 2)
    return merged, status, failures, n_swaps


def csr(n_nodes, edges):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    directed = np.column_stack((edges, edges[:, ::-1])).reshape(-1, 2)
    order = np.argsort(directed[:, 0], kind="stable")
    indices = directed[order, 1].copy()
    counts = np.bincount(directed[:, 0], minlength=n_nodes)
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, indices


def spread(indptr, indices, arm, p0, p1, degree_mode, seeds, stop_count, max_steps, rng):
    indptr = np.asarray(indptr)
    indices = np.asarray(indices)
    arm = np.asarray(arm)
    nn = arm.shape[0]
    at = np.full(nn, -1, dtype=np.int32)
    at[np.asarray(seeds, dtype=np.int64)] = 0
    total = int((at == 0).sum())
    prob = np.where(arm != 0, p1, p0)
    t = 0
    reached = total >= stop_count
    while not reached and t < max_steps:
        active = np.flatnonzero((at >= 0) & (at <= t))
        lo = indptr[active]
        deg = indptr[active + 1] - lo
        keep = deg > 0
        active, lo, deg = active[keep], lo[keep], deg[keep]
        if degree_mode:
            slots = np.repeat(lo - np.cumsum(deg) + deg, deg) + np.arange(deg.sum())
            src = np.repeat(active, deg)
            u = rng.random(slots.shape[0])
            targets = indices[slots]
            hit = u < prob[src]
        else:
            u = rng.random(2 * active.shape[0]).reshape(-1, 2)
            targets = indices[lo + np.minimum((u[:, 0] * deg).astype(np.int64), deg - 1)]
            hit = u[:, 1] < prob[active]
        new = np.unique(targets[hit & (at[targets] < 0)])
        at[new] = t + 1
        total += new.shape[0]
        t += 1
        reached = total >= stop_count
    return at, t, bool(reached)
