"""Pure-Python reference versions of the hot simulator kernels.

``_ckernels.pyx`` implements the same functions with identical signatures and
results; ``hisepq._kernels`` picks one at import time.
"""

EMPTY = (1 << 63) - 1  # head timestamp of an empty FIFO

BACKEND = "python"


def scan_heads(heads, clock):
    """Return ``(due, missed)`` for one clock edge.

    ``due`` lists the qubits whose FIFO head is stamped exactly ``clock``;
    ``missed`` is the first qubit whose head is already in the past, or -1.
    """
    due = []
    missed = -1
    for q, t in enumerate(heads):
        if t == clock:
            due.append(q)
        elif t < clock and missed < 0:
            missed = q
    return due, missed


def min_head(heads):
    return min(heads) if len(heads) else EMPTY


def scatter_mask(codes, mask_bytes, base, code):
    """Write ``code`` at ``base + k`` for every set bit k of the little-endian mask.

    Returns 0 on success, 1 if a position falls outside ``codes`` and 2 if a
    position already holds a non-zero code.  ``codes`` is left untouched on
    failure.
    """
    n = len(codes)
    hits = []
    for byte_index, byte in enumerate(mask_bytes):
        if not byte:
            continue
        for bit in range(8):
            if byte >> bit & 1:
                q = base + 8 * byte_index + bit
                if q >= n:
                    return 1
                if codes[q]:
                    return 2
                hits.append(q)
    for q in hits:
        codes[q] = code
    return 0


def merge_codes(dst, src):
    """OR ``src`` into ``dst``; return the first overlapping qubit or -1.

    On overlap ``dst`` is left untouched.
    """
    for q in range(len(src)):
        if src[q] and dst[q]:
            return q
    for q in range(len(src)):
        if src[q]:
            dst[q] = src[q]
    return -1


def sorter_update(sorter, size, counts, entry):
    """Fold one count increment of ``entry`` into the top-M sorter.

    ``sorter`` holds entry ids ranked by (count desc, id asc); ids are
    assigned in first-seen order so the id doubles as the tie-breaker.
    Returns the new number of occupied slots.
    """
    m = len(sorter)
    if m == 0:
        return 0
    pos = -1
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
            c, lc = counts[entry], counts[last]
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
