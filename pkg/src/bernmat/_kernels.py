# Compiled inner loops. Everything here works on int64 and is exact as long as
# the callers respect the documented magnitude bounds.
import numpy as np
from numba import njit

# Mersenne prime 2^31 - 1: products of two residues fit in int64.
MODP = 2147483647


@njit(cache=True, nogil=True)
def bareiss_det_i64(a):
    """Fraction-free determinant of a square int64 matrix (copied).

    Exact provided every product of two minors of ``a`` fits in int64; callers
    check this with a Hadamard bound.
    """
    m = a.copy()
    n = m.shape[0]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k, k] == 0:
            piv = -1
            for i in range(k + 1, n):
                if m[i, k] != 0:
                    piv = i
                    break
            if piv < 0:
                return 0
            for j in range(n):
                t = m[k, j]
                m[k, j] = m[piv, j]
                m[piv, j] = t
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i, j] = (m[i, j] * m[k, k] - m[i, k] * m[k, j]) // prev
        prev = m[k, k]
    return sign * m[n - 1, n - 1]


@njit(cache=True, nogil=True)
def dets_i64(mats):
    out = np.empty(mats.shape[0], dtype=np.int64)
    for s in range(mats.shape[0]):
        out[s] = bareiss_det_i64(mats[s])
    return out


@njit(cache=True, nogil=True)
def _modinv(a, p):
    # a^(p-2) mod p
    result = 1
    base = a % p
    e = p - 2
    while e > 0:
        if e & 1:
            result = (result * base) % p
        base = (base * base) % p
        e >>= 1
    return result


@njit(cache=True, nogil=True)
def rank_rows_modp(a, p):
    """Rank of ``a`` over GF(p) and a mask of greedily chosen independent rows.

    Rows independent mod p are independent over Q, so a full-row-rank answer
    here is exact; a deficient answer must be confirmed over the integers.
    """
    rows, cols = a.shape
    basis = np.zeros((min(rows, cols), cols), dtype=np.int64)
    pivcol = np.empty(min(rows, cols), dtype=np.int64)
    chosen = np.zeros(rows, dtype=np.bool_)
    r = 0
    work = np.empty(cols, dtype=np.int64)
    for i in range(rows):
        if r == cols:
            break
        for j in range(cols):
            work[j] = a[i, j] % p
        for b in range(r):
            c = work[pivcol[b]]
            if c != 0:
                for j in range(cols):
                    work[j] = (work[j] - c * basis[b, j]) % p
        lead = -1
        for j in range(cols):
            if work[j] != 0:
                lead = j
                break
        if lead < 0:
            continue
        inv = _modinv(work[lead], p)
        for j in range(cols):
            basis[r, j] = (work[j] * inv) % p
        # keep the stored basis fully reduced on pivot columns
        for b in range(r):
            c = basis[b, lead]
            if c != 0:
                for j in range(cols):
                    basis[b, j] = (basis[b, j] - c * basis[r, j]) % p
        pivcol[r] = lead
        chosen[i] = True
        r += 1
    return r, chosen


@njit(cache=True, nogil=True)
def ranks_modp(mats, p):
    out = np.empty(mats.shape[0], dtype=np.int64)
    for s in range(mats.shape[0]):
        r, _ = rank_rows_modp(mats[s], p)
        out[s] = r
    return out


@njit(cache=True, nogil=True)
def enum_chunk(n, start, stop, normalized, hist):
    """Accumulate the signed-determinant histogram over matrix indices [start, stop).

    Index bits fill the free entries row-major (bit set means -1). With
    ``normalized`` the first row and column are fixed to +1 and only the
    (n-1)^2 inner entries are free. ``hist`` is offset by its centre.
    Returns the number of matrices having two equal-or-opposite rows or columns.
    """
    centre = (hist.shape[0] - 1) // 2
    mask = (1 << n) - 1
    m = np.empty((n, n), dtype=np.int64)
    rowbits = np.empty(n, dtype=np.int64)
    colbits = np.empty(n, dtype=np.int64)
    count = 0
    for idx in range(start, stop):
        if normalized:
            for j in range(n):
                m[0, j] = 1
            bit = 0
            for i in range(1, n):
                m[i, 0] = 1
                for j in range(1, n):
                    m[i, j] = 1 - 2 * ((idx >> bit) & 1)
                    bit += 1
        else:
            bit = 0
            for i in range(n):
                for j in range(n):
                    m[i, j] = 1 - 2 * ((idx >> bit) & 1)
                    bit += 1
        for i in range(n):
            rowbits[i] = 0
            colbits[i] = 0
        for i in range(n):
            for j in range(n):
                if m[i, j] < 0:
                    rowbits[i] |= 1 << j
                    colbits[j] |= 1 << i
        collide = False
        for i in range(n):
            for k in range(i + 1, n):
                x = rowbits[i] ^ rowbits[k]
                y = colbits[i] ^ colbits[k]
                if x == 0 or x == mask or y == 0 or y == mask:
                    collide = True
                    break
            if collide:
                break
        if collide:
            count += 1
        d = bareiss_det_i64(m)
        hist[centre + d] += 1
    return count
