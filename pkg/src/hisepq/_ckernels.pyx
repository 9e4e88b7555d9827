# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled versions of the functions in ``_pykernels``."""

EMPTY = (1 << 63) - 1

BACKEND = "cython"


def scan_heads(const long long[:] heads, long long clock):
    cdef Py_ssize_t q, n = heads.shape[0]
    cdef long long missed = -1
    cdef long long t
    due = []
    for q in range(n):
        t = heads[q]
        if t == clock:
            due.append(q)
        elif t < clock and missed < 0:
            missed = q
    return due, missed


def min_head(const long long[:] heads):
    cdef Py_ssize_t q, n = heads.shape[0]
    cdef long long best = EMPTY
    for q in range(n):
        if heads[q] < best:
            best = heads[q]
    return best


def scatter_mask(unsigned char[:] codes, const unsigned char[:] mask_bytes, Py_ssize_t base,
                 unsigned char code):
    cdef Py_ssize_t n = codes.shape[0], nb = mask_bytes.shape[0]
    cdef Py_ssize_t i, q
    cdef int bit
    cdef unsigned char byte
    for i in range(nb):
        byte = mask_bytes[i]
        if byte == 0:
            continue
        for bit in range(8):
            if (byte >> bit) & 1:
                q = base + 8 * i + bit
                if q >= n:
                    return 1
                if codes[q]:
                    return 2
    for i in range(nb):
        byte = mask_bytes[i]
        if byte == 0:
            continue
        for bit in range(8):
            if (byte >> bit) & 1:
                codes[base + 8 * i + bit] = code
    return 0


def merge_codes(unsigned char[:] dst, const unsigned char[:] src):
    cdef Py_ssize_t q, n = src.shape[0]
    for q in range(n):
        if src[q] and dst[q]:
            return q
    for q in range(n):
        if src[q]:
            dst[q] = src[q]
    return -1


def sorter_update(long long[:] sorter, Py_ssize_t size, const long long[:] counts, long long entry):
    cdef Py_ssize_t m = sorter.shape[0]
    cdef Py_ssize_t i, pos = -1
    cdef long long c, lc, last, prev, pc
    if m == 0:
        return 0
    for i in range(size):
        if sorter[i] == entry:
            pos = i
            break
    if pos < 0:
        if size < m:
            pos = size
            size += 1
        else:
            last = sorter[m - 1]
            c = counts[entry]
            lc = counts[last]
            if c > lc or (c == lc and entry < last):
                pos = m - 1
            else:
                return size
        sorter[pos] = entry
    c = counts[entry]
    while pos > 0:
        prev = sorter[pos - 1]
        pc = counts[prev]
        if pc > c or (pc == c and prev < entry):
            break
        sorter[pos] = prev
        pos -= 1
    sorter[pos] = entry
    return size
