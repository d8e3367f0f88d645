# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled timing kernels; same contracts as ``_kernels_py``."""

from libc.stdlib cimport malloc, free


cdef inline long long _shifted(long long t, long long delta) nogil:
    cdef long long v = t + delta
    return v if v > 0 else 0


cdef inline long long _abs(long long v) nogil:
    return v if v >= 0 else -v


cdef inline long long _floordiv(long long a, long long b) nogil:
    cdef long long q = a / b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


cdef class _Buf:
    cdef long long *data
    cdef Py_ssize_t size, cap

    def __cinit__(self, Py_ssize_t cap=64):
        self.cap = cap if cap > 0 else 1
        self.size = 0
        self.data = <long long *>malloc(self.cap * sizeof(long long))
        if self.data == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.data)

    cdef int push(self, long long v) except -1:
        cdef long long *grown
        if self.size == self.cap:
            grown = <long long *>malloc(2 * self.cap * sizeof(long long))
            if grown == NULL:
                raise MemoryError()
            for k in range(self.size):
                grown[k] = self.data[k]
            free(self.data)
            self.data = grown
            self.cap *= 2
        self.data[self.size] = v
        self.size += 1
        return 0


cdef long long _chain(const long long[:] a_start, const long long[:] a_end,
                      const long long[:] b_start, const long long[:] b_end,
                      long long delta, long long eps,
                      _Buf out_i, _Buf out_j, long long *residual_out) except -1:
    cdef Py_ssize_t n = a_start.shape[0]
    cdef Py_ssize_t m = b_start.shape[0]
    cdef _Buf ci = _Buf(n + 1)
    cdef _Buf cj = _Buf(n + 1)
    cdef Py_ssize_t i, j, lo = 0, first, left, right, k, p, mid, length = 0
    cdef long long s, e, bs, be, tmp, residual = 0
    cdef long long *tails
    cdef long long *tail_ids
    cdef long long *parent

    for i in range(n):
        s = a_start[i]
        e = a_end[i]
        while lo < m and _shifted(b_start[lo], delta) < s - eps:
            lo += 1
        j = lo
        first = ci.size
        while j < m:
            bs = _shifted(b_start[j], delta)
            if bs > s + eps:
                break
            be = _shifted(b_end[j], delta)
            if _abs(be - e) <= eps:
                ci.push(i)
                cj.push(j)
            j += 1
        left = first
        right = ci.size - 1
        while left < right:
            tmp = cj.data[left]
            cj.data[left] = cj.data[right]
            cj.data[right] = tmp
            left += 1
            right -= 1

    k = cj.size
    tails = <long long *>malloc((k + 1) * sizeof(long long))
    tail_ids = <long long *>malloc((k + 1) * sizeof(long long))
    parent = <long long *>malloc((k + 1) * sizeof(long long))
    if tails == NULL or tail_ids == NULL or parent == NULL:
        free(tails)
        free(tail_ids)
        free(parent)
        raise MemoryError()
    try:
        for p in range(k):
            j = cj.data[p]
            left = 0
            right = length
            while left < right:
                mid = (left + right) >> 1
                if tails[mid] < j:
                    left = mid + 1
                else:
                    right = mid
            tails[left] = j
            tail_ids[left] = p
            if left == length:
                length += 1
            parent[p] = tail_ids[left - 1] if left > 0 else -1

        p = tail_ids[length - 1] if length > 0 else -1
        while p >= 0:
            i = ci.data[p]
            j = cj.data[p]
            out_i.push(i)
            out_j.push(j)
            residual += _abs(a_start[i] - _shifted(b_start[j], delta))
            residual += _abs(a_end[i] - _shifted(b_end[j], delta))
            p = parent[p]
    finally:
        free(tails)
        free(tail_ids)
        free(parent)
    residual_out[0] = residual
    return length


def match_chain(const long long[:] a_start, const long long[:] a_end,
                const long long[:] b_start, const long long[:] b_end,
                long long delta, long long eps):
    cdef _Buf oi = _Buf(64)
    cdef _Buf oj = _Buf(64)
    cdef long long residual = 0
    cdef long long length = _chain(a_start, a_end, b_start, b_end, delta, eps, oi, oj, &residual)
    cdef Py_ssize_t k
    pairs = [(oi.data[k], oj.data[k]) for k in range(length - 1, -1, -1)]
    return pairs, residual


def match_score(const long long[:] a_start, const long long[:] a_end,
                const long long[:] b_start, const long long[:] b_end,
                long long delta, long long eps):
    cdef _Buf oi = _Buf(64)
    cdef _Buf oj = _Buf(64)
    cdef long long residual = 0
    cdef long long length = _chain(a_start, a_end, b_start, b_end, delta, eps, oi, oj, &residual)
    return length, residual


def offset_candidates(const long long[:] a_start, const long long[:] b_start,
                      long long max_shift, long long step):
    cdef Py_ssize_t n = a_start.shape[0]
    cdef Py_ssize_t m = b_start.shape[0]
    cdef Py_ssize_t i, j, lo = 0
    cdef long long x, d, q, half = step // 2
    cdef _Buf out = _Buf(n * 4 + 1)
    for i in range(n):
        x = a_start[i]
        while lo < m and b_start[lo] < x - max_shift:
            lo += 1
        j = lo
        while j < m and b_start[j] <= x + max_shift:
            d = x - b_start[j]
            q = _floordiv(d + half, step) * step
            if q > max_shift:
                q -= step
            elif q < -max_shift:
                q += step
            out.push(q)
            j += 1
    return [out.data[i] for i in range(out.size)]


cdef inline bint _better(long long count, long long residual, long long delta,
                         long long bc, long long br, long long bd) nogil:
    if count != bc:
        return count > bc
    if residual != br:
        return residual < br
    if _abs(delta) != _abs(bd):
        return _abs(delta) < _abs(bd)
    return delta < bd


def best_of(const long long[:] a_start, const long long[:] a_end,
            const long long[:] b_start, const long long[:] b_end,
            deltas, long long eps):
    cdef _Buf oi = _Buf(64)
    cdef _Buf oj = _Buf(64)
    cdef long long residual = 0, count, d
    cdef long long bc = -1, br = 0, bd = 0
    cdef bint seen = False
    for d in deltas:
        oi.size = 0
        oj.size = 0
        count = _chain(a_start, a_end, b_start, b_end, d, eps, oi, oj, &residual)
        if not seen or _better(count, residual, d, bc, br, bd):
            bc = count
            br = residual
            bd = d
            seen = True
    if not seen:
        raise ValueError("no deltas to score")
    return bd, bc, br


def grid_scan(const long long[:] a_start, const long long[:] a_end,
              const long long[:] b_start, const long long[:] b_end,
              long long max_shift, long long step, long long eps):
    cdef long long k = max_shift // step
    return best_of(a_start, a_end, b_start, b_end, range(-k * step, k * step + 1, step), eps)
