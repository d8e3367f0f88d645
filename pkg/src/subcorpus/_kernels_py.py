"""Pure-Python timing kernels.

Reference implementation of the hot loops used by :mod:`subcorpus.sync`;
``_kernels_ext`` is a compiled drop-in with identical results. Inputs are
integer sequences (``array('q')`` in practice) sorted by start time.
"""

from __future__ import annotations

from bisect import bisect_left


def _shifted(t, delta):
    v = t + delta
    return v if v > 0 else 0


def match_chain(a_start, a_end, b_start, b_end, delta, eps):
    """Maximum monotone matching of ``a`` against ``b`` shifted by ``delta``.

    Returns ``(pairs, residual)`` where ``residual`` sums the absolute start
    and end discrepancies over the chosen pairs.
    """
    n = len(a_start)
    m = len(b_start)
    # candidate pairs from a band sweep over the start-sorted lists
    cand_i = []
    cand_j = []
    lo = 0
    for i in range(n):
        s = a_start[i]
        e = a_end[i]
        while lo < m and _shifted(b_start[lo], delta) < s - eps:
            lo += 1
        j = lo
        first = len(cand_j)
        while j < m:
            bs = _shifted(b_start[j], delta)
            if bs > s + eps:
                break
            be = b_end[j] + delta
            if be < 0:
                be = 0
            if -eps <= be - e <= eps:
                cand_i.append(i)
                cand_j.append(j)
            j += 1
        # descending j within one i keeps a chain from using i twice
        if len(cand_j) - first > 1:
            cand_i[first:] = cand_i[first:][::-1]
            cand_j[first:] = cand_j[first:][::-1]

    tails = []
    tail_ids = []
    parent = [-1] * len(cand_j)
    for k, j in enumerate(cand_j):
        p = bisect_left(tails, j)
        if p == len(tails):
            tails.append(j)
            tail_ids.append(k)
        else:
            tails[p] = j
            tail_ids[p] = k
        parent[k] = tail_ids[p - 1] if p > 0 else -1

    pairs = []
    residual = 0
    k = tail_ids[-1] if tail_ids else -1
    while k >= 0:
        i = cand_i[k]
        j = cand_j[k]
        pairs.append((i, j))
        residual += abs(a_start[i] - _shifted(b_start[j], delta))
        residual += abs(a_end[i] - _shifted(b_end[j], delta))
        k = parent[k]
    pairs.reverse()
    return pairs, residual


def match_score(a_start, a_end, b_start, b_end, delta, eps):
    pairs, residual = match_chain(a_start, a_end, b_start, b_end, delta, eps)
    return len(pairs), residual


def offset_candidates(a_start, b_start, max_shift, step):
    """Start differences ``a - b`` within ``max_shift``, rounded to the ``step`` grid."""
    out = []
    m = len(b_start)
    lo = 0
    half = step // 2
    for x in a_start:
        while lo < m and b_start[lo] < x - max_shift:
            lo += 1
        j = lo
        while j < m and b_start[j] <= x + max_shift:
            d = x - b_start[j]
            q = (d + half) // step * step
            if q > max_shift:
                q -= step
            elif q < -max_shift:
                q += step
            out.append(q)
            j += 1
    return out


def _better(count, residual, delta, best):
    bc, br, bd = best
    if count != bc:
        return count > bc
    if residual != br:
        return residual < br
    if abs(delta) != abs(bd):
        return abs(delta) < abs(bd)
    return delta < bd


def best_of(a_start, a_end, b_start, b_end, deltas, eps):
    """Score every delta exactly; return the best ``(delta, count, residual)``."""
    best = None
    for d in deltas:
        count, residual = match_score(a_start, a_end, b_start, b_end, d, eps)
        if best is None or _better(count, residual, d, best):
            best = (count, residual, d)
    if best is None:
        raise ValueError("no deltas to score")
    return best[2], best[0], best[1]


def grid_scan(a_start, a_end, b_start, b_end, max_shift, step, eps):
    """Exhaustive scan of every grid offset in ``[-max_shift, max_shift]``."""
    k = max_shift // step
    return best_of(a_start, a_end, b_start, b_end, range(-k * step, k * step + 1, step), eps)
