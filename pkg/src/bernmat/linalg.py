"""Exact and floating linear algebra for sign matrices.

Conventions
-----------
Sign data is bit-packed: bit ``j`` of a row encodes the entry ``1 - 2*b`` at
column ``j``, so a clear bit is +1 and a set bit is -1. With this encoding the
inner product of two rows of length n is ``n - 2*popcount(r ^ s)``.

Rows are stored as Python ints, which covers every n with one representation;
for n <= 64 a row also fits one machine word, which is what the samplers use.

Every zero test (singularity, membership in a subspace) is done in integer
arithmetic. Floating paths exist for speed and report their own error bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import permutations
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DimensionTooLarge, IllConditionedBasis

ORTHO_TOL = 1e-10
DEFECT_FALLBACK = 1e-8


# --------------------------------------------------------------------------
# sign data
# --------------------------------------------------------------------------

def _bits_from_signs(signs) -> int:
    bits = 0
    for j, s in enumerate(signs):
        if s == -1:
            bits |= 1 << j
        elif s != 1:
            raise ValueError(f"entry {s!r} is not +1 or -1")
    return bits


@dataclass(frozen=True)
class SignVector:
    n: int
    bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError("bits out of range for dimension")

    @classmethod
    def from_signs(cls, signs) -> SignVector:
        signs = list(signs)
        return cls(len(signs), _bits_from_signs(signs))

    def to_list(self) -> list[int]:
        return [1 - 2 * ((self.bits >> j) & 1) for j in range(self.n)]

    def to_array(self, dtype=np.int64) -> np.ndarray:
        return np.array(self.to_list(), dtype=dtype)

    def dot(self, other: SignVector) -> int:
        return self.n - 2 * (self.bits ^ other.bits).bit_count()


@dataclass(frozen=True)
class SignMatrix:
    """An n x n matrix with entries in {-1, +1}, one packed int per row."""

    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        if len(self.rows) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(self.rows)}")
        top = 1 << self.n
        for r in self.rows:
            if not 0 <= r < top:
                raise ValueError("row bits out of range for dimension")

    @classmethod
    def from_array(cls, a) -> SignMatrix:
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        return cls(a.shape[0], tuple(_bits_from_signs(row.tolist()) for row in a))

    def to_list(self) -> list[list[int]]:
        n = self.n
        return [[1 - 2 * ((r >> j) & 1) for j in range(n)] for r in self.rows]

    def to_array(self, dtype=np.int64) -> np.ndarray:
        return np.array(self.to_list(), dtype=dtype)

    def row(self, i: int) -> SignVector:
        return SignVector(self.n, self.rows[i])

    def entry(self, i: int, j: int) -> int:
        return 1 - 2 * ((self.rows[i] >> j) & 1)

    def row_dot(self, i: int, k: int) -> int:
        return self.n - 2 * (self.rows[i] ^ self.rows[k]).bit_count()

    def transpose(self) -> SignMatrix:
        n = self.n
        cols = []
        for j in range(n):
            c = 0
            for i, r in enumerate(self.rows):
                c |= ((r >> j) & 1) << i
            cols.append(c)
        return SignMatrix(n, tuple(cols))

    def swap_rows(self, i: int, k: int) -> SignMatrix:
        rows = list(self.rows)
        rows[i], rows[k] = rows[k], rows[i]
        return SignMatrix(self.n, tuple(rows))

    def negate_row(self, i: int) -> SignMatrix:
        rows = list(self.rows)
        rows[i] ^= (1 << self.n) - 1
        return SignMatrix(self.n, tuple(rows))


def _int_matrix(m) -> list[list[int]]:
    if isinstance(m, SignMatrix):
        return m.to_list()
    rows = [[int(x) for x in row] for row in m]
    for row in rows:
        if len(row) != len(rows):
            raise ValueError("expected a square matrix")
    return rows


# --------------------------------------------------------------------------
# determinants
# --------------------------------------------------------------------------

def bareiss(rows: list[list[int]]) -> int:
    """Fraction-free elimination on a square integer matrix; modifies ``rows``."""
    n = len(rows)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            for i in range(k + 1, n):
                if rows[i][k] != 0:
                    rows[k], rows[i] = rows[i], rows[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = rows[k][k]
        rk = rows[k]
        for i in range(k + 1, n):
            ri = rows[i]
            f = ri[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * pivot - f * rk[j]) // prev
        prev = pivot
    return sign * rows[n - 1][n - 1]


def det_bareiss(m) -> int:
    """Exact determinant of a SignMatrix (or any square integer matrix)."""
    return bareiss(_int_matrix(m))


def det_cofactor(m) -> int:
    """Determinant by Laplace expansion along the first row. Oracle only, n <= 8."""
    a = _int_matrix(m)
    n = len(a)
    if n > 8:
        raise DimensionTooLarge(f"cofactor expansion limited to n <= 8, got {n}")

    def expand(rows: tuple[int, ...], cols: tuple[int, ...]) -> int:
        if len(rows) == 1:
            return a[rows[0]][cols[0]]
        r0, rest = rows[0], rows[1:]
        total = 0
        for k, c in enumerate(cols):
            if a[r0][c] == 0:
                continue
            minor = expand(rest, cols[:k] + cols[k + 1:])
            total += (-1) ** k * a[r0][c] * minor
        return total

    return expand(tuple(range(n)), tuple(range(n)))


def det_leibniz(m) -> int:
    """Sum over permutations. Slow; kept for cross-checks of tiny matrices."""
    a = _int_matrix(m)
    n = len(a)
    total = 0
    for perm in permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1 if inversions % 2 else 1
        for i, p in enumerate(perm):
            term *= a[i][p]
        total += term
    return total


def hadamard_log2(a: np.ndarray) -> float:
    """log2 of the product of row norms (each floored at 1): bounds every minor."""
    norms = np.sqrt((np.asarray(a, dtype=np.float64) ** 2).sum(axis=-1))
    return float(np.log2(np.maximum(norms, 1.0)).sum(axis=-1).max()) if norms.size else 0.0


def int64_bareiss_safe(mats: np.ndarray) -> bool:
    # products of two minors must stay below 2^62
    return hadamard_log2(mats) < 30.5


def dets_exact(mats: np.ndarray) -> list[int]:
    """Exact determinants of a stack of square integer matrices."""
    mats = np.asarray(mats)
    if mats.dtype.kind in "iu" and int64_bareiss_safe(mats):
        return [int(d) for d in _kernels.dets_i64(mats.astype(np.int64))]
    return [bareiss([[int(x) for x in row] for row in m]) for m in mats]


def singular_mask(mats: np.ndarray) -> np.ndarray:
    """Exact singularity flags for a stack of square integer matrices.

    Small entries go through the int64 Bareiss kernel. Otherwise a matrix
    nonsingular mod p is certainly nonsingular; the rest are decided by
    Python-integer elimination.
    """
    mats = np.asarray(mats)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError("expected a stack of square matrices")
    if mats.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if mats.dtype.kind in "iu" and int64_bareiss_safe(mats):
        return _kernels.dets_i64(mats.astype(np.int64)) == 0
    n = mats.shape[1]
    red = _reduce_modp(mats)
    out = _kernels.ranks_modp(red, _kernels.MODP) < n
    for s in np.flatnonzero(out):
        out[s] = bareiss([[int(x) for x in row] for row in mats[s]]) == 0
    return out


def _reduce_modp(a: np.ndarray) -> np.ndarray:
    if a.dtype.kind in "iu":
        return np.mod(a.astype(np.int64), _kernels.MODP)
    return np.vectorize(lambda x: int(x) % _kernels.MODP, otypes=[np.int64])(a)


# --------------------------------------------------------------------------
# exact rank, row selection and nullspace
# --------------------------------------------------------------------------

def _as_int_rows(vectors) -> list[list[int]]:
    """Scale each (possibly rational) vector by its denominator lcm."""
    out = []
    for v in vectors:
        fr = [Fraction(x) for x in v]
        den = math.lcm(*(f.denominator for f in fr)) if fr else 1
        out.append([int(f * den) for f in fr])
    return out


def _independent_rows_exact(rows: list[list[int]]) -> list[int]:
    """Greedy earliest independent rows, by incremental rational reduction."""
    basis: list[tuple[int, list[Fraction]]] = []  # (pivot column, row with pivot 1)
    chosen = []
    for idx, row in enumerate(rows):
        w = [Fraction(x) for x in row]
        for piv, b in basis:
            c = w[piv]
            if c:
                w = [wi - c * bi for wi, bi in zip(w, b)]
        lead = next((j for j, x in enumerate(w) if x), None)
        if lead is None:
            continue
        inv = 1 / w[lead]
        w = [x * inv for x in w]
        basis = [(p, [bi - b[lead] * wi for bi, wi in zip(b, w)]) for p, b in basis]
        basis.append((lead, w))
        chosen.append(idx)
    return chosen


def independent_rows(rows: list[list[int]]) -> list[int]:
    """Indices of a maximal set of linearly independent rows (exact)."""
    if not rows or not rows[0]:
        return []
    try:
        arr = np.array(rows, dtype=np.int64)
    except OverflowError:
        arr = np.array(rows, dtype=object)
    r, _ = _kernels.rank_rows_modp(_reduce_modp(arr), _kernels.MODP)
    if r == len(rows):
        return list(range(len(rows)))
    return _independent_rows_exact(rows)


def rank_exact(b) -> int:
    """Exact rank of a SubspaceBasis or of a list of integer/rational vectors."""
    if isinstance(b, SubspaceBasis):
        return b.rank
    return len(independent_rows(_as_int_rows(b)))


def ranks_exact(mats: np.ndarray) -> np.ndarray:
    """Exact ranks of a stack of integer matrices (rows as vectors)."""
    mats = np.asarray(mats)
    red = _reduce_modp(mats)
    out = _kernels.ranks_modp(red, _kernels.MODP)
    full = min(mats.shape[1], mats.shape[2])
    for s in np.flatnonzero(out < full):
        out[s] = len(_independent_rows_exact([[int(x) for x in row] for row in mats[s]]))
    return out


def integer_nullspace(rows: list[list[int]], n: int) -> list[list[int]]:
    """Primitive integer vectors spanning {x : row . x = 0 for every row}."""
    rref: list[list[Fraction]] = []
    pivots: list[int] = []
    for row in rows:
        w = [Fraction(x) for x in row]
        for p, b in zip(pivots, rref):
            c = w[p]
            if c:
                w = [wi - c * bi for wi, bi in zip(w, b)]
        lead = next((j for j, x in enumerate(w) if x), None)
        if lead is None:
            continue
        inv = 1 / w[lead]
        w = [x * inv for x in w]
        rref = [[bi - b[lead] * wi for bi, wi in zip(b, w)] for b in rref]
        rref.append(w)
        pivots.append(lead)
    free = [j for j in range(n) if j not in pivots]
    out = []
    for f in free:
        vec = [Fraction(0)] * n
        vec[f] = Fraction(1)
        for p, b in zip(pivots, rref):
            vec[p] = -b[f]
        den = math.lcm(*(x.denominator for x in vec))
        ints = [int(x * den) for x in vec]
        g = math.gcd(*ints)
        out.append([x // g for x in ints])
    return out


# --------------------------------------------------------------------------
# subspaces
# --------------------------------------------------------------------------

def _orthonormalize(rows: np.ndarray) -> tuple[np.ndarray, float]:
    """Modified Gram-Schmidt with one full re-orthogonalization pass per vector."""
    k, n = rows.shape
    q = np.zeros((k, n))
    for i in range(k):
        v = rows[i].astype(np.float64).copy()
        for _ in range(2):
            for j in range(i):
                v -= (q[j] @ v) * q[j]
        nv = np.linalg.norm(v)
        if nv == 0.0:
            raise IllConditionedBasis("vector collapsed during orthogonalization")
        q[i] = v / nv
    defect = float(np.abs(q @ q.T - np.eye(k)).max()) if k else 0.0
    return q, defect


@dataclass(frozen=True)
class SubspaceBasis:
    """A spanning list for a subspace W of R^n, with exact rank.

    ``vectors`` hold ints or Fractions. Derived data (rank, independent rows,
    orthonormal basis, integer complement) is computed lazily and cached; the
    object is otherwise immutable.
    """

    ambient_dim: int
    vectors: tuple[tuple, ...]

    def __post_init__(self):
        vecs = tuple(tuple(v) for v in self.vectors)
        for v in vecs:
            if len(v) != self.ambient_dim:
                raise ValueError(f"vector of length {len(v)} in ambient dimension {self.ambient_dim}")
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def of(cls, vectors, ambient_dim: int | None = None) -> SubspaceBasis:
        vecs = [tuple(int(x) if isinstance(x, (int, np.integer)) else Fraction(x) for x in v)
                for v in (vectors.tolist() if isinstance(vectors, np.ndarray) else vectors)]
        if ambient_dim is None:
            if not vecs:
                raise ValueError("ambient_dim required for an empty basis")
            ambient_dim = len(vecs[0])
        return cls(ambient_dim, tuple(vecs))

    @cached_property
    def int_vectors(self) -> list[list[int]]:
        return _as_int_rows(self.vectors)

    @cached_property
    def independent(self) -> tuple[int, ...]:
        return tuple(independent_rows(self.int_vectors))

    @cached_property
    def rank(self) -> int:
        return len(self.independent)

    @cached_property
    def basis_rows(self) -> list[list[int]]:
        """Independent integer rows spanning the same subspace."""
        iv = self.int_vectors
        return [iv[i] for i in self.independent]

    @cached_property
    def gram(self) -> list[list[int]]:
        rows = self.basis_rows
        return [[sum(a * b for a, b in zip(r, s)) for s in rows] for r in rows]

    @cached_property
    def _ortho(self) -> tuple[np.ndarray, float]:
        if self.rank == 0:
            return np.zeros((0, self.ambient_dim)), 0.0
        return _orthonormalize(np.array(self.basis_rows, dtype=np.float64))

    @property
    def ortho(self) -> np.ndarray:
        """Orthonormal rows spanning W (float)."""
        return self._ortho[0]

    @property
    def ortho_defect(self) -> float:
        """max |Q Q^T - I| of the floating orthonormal basis."""
        return self._ortho[1]

    @cached_property
    def complement(self) -> list[list[int]]:
        """Primitive integer vectors spanning the orthogonal complement."""
        return integer_nullspace(self.basis_rows, self.ambient_dim)

    def with_vector(self, x) -> SubspaceBasis:
        return SubspaceBasis(self.ambient_dim, self.vectors + (tuple(x),))


def _vector_entries(x) -> list:
    if isinstance(x, SignVector):
        return x.to_list()
    return [int(v) if isinstance(v, (int, np.integer)) else Fraction(v) for v in x]


def _bordered_bareiss(gram: list[list[int]], r: list[int]) -> tuple[int, int]:
    """Return (det G, det [[G, r], [r^T, 0]]) by one fraction-free pass.

    G is a Gram matrix of independent vectors, so its leading minors are
    positive and no pivoting is needed; det G is the pivot preceding the last.
    """
    k = len(gram)
    a = [list(row) + [ri] for row, ri in zip(gram, r)]
    a.append(list(r) + [0])
    prev = 1
    for p in range(k):
        piv = a[p][p]
        for i in range(p + 1, k + 1):
            f = a[i][p]
            ai = a[i]
            ap = a[p]
            for j in range(p + 1, k + 1):
                ai[j] = (ai[j] * piv - f * ap[j]) // prev
        prev = piv
    return prev, a[k][k]


def projection_sq_exact(x, b: SubspaceBasis) -> Fraction:
    """|P x|^2 for the orthogonal projection P onto span(b), exactly."""
    xs = _vector_entries(x)
    if len(xs) != b.ambient_dim:
        raise ValueError("dimension mismatch")
    if b.rank == 0:
        return Fraction(0)
    den = math.lcm(*(Fraction(v).denominator for v in xs))
    xi = [int(Fraction(v) * den) for v in xs]
    r = [sum(a * c for a, c in zip(row, xi)) for row in b.basis_rows]
    det_g, det_k = _bordered_bareiss(b.gram, r)
    # r^T G^{-1} r = -det K / det G
    return Fraction(-det_k, det_g) / (den * den)


def dist_exact(x, b: SubspaceBasis) -> Fraction:
    """Squared distance from x to span(b), as an exact rational."""
    xs = _vector_entries(x)
    norm_sq = sum(Fraction(v) ** 2 for v in xs)
    return norm_sq - projection_sq_exact(xs, b)


def dist_float(x, b: SubspaceBasis, fallback: bool = True) -> float:
    """Distance (not squared) from x to span(b) by orthonormal projection.

    The residual is re-projected once, so the absolute error stays near
    machine precision times |x| even for x inside W. If the orthonormal basis
    has defect above 1e-8 the exact path is used, or IllConditionedBasis is
    raised when ``fallback`` is false.
    """
    if b.ortho_defect > DEFECT_FALLBACK:
        if not fallback:
            raise IllConditionedBasis(f"orthogonality defect {b.ortho_defect:.3g}")
        return math.sqrt(dist_exact(x, b))
    xv = np.array([float(v) for v in _vector_entries(x)], dtype=np.float64)
    q = b.ortho
    res = xv - q.T @ (q @ xv)
    res -= q.T @ (q @ res)
    return float(np.linalg.norm(res))


def dist_float_batch(xs: np.ndarray, b: SubspaceBasis) -> np.ndarray:
    """Distances for many row vectors at once (same method as dist_float)."""
    if b.ortho_defect > DEFECT_FALLBACK:
        raise IllConditionedBasis(f"orthogonality defect {b.ortho_defect:.3g}")
    xs = np.asarray(xs, dtype=np.float64)
    q = b.ortho
    res = xs - (xs @ q.T) @ q
    res -= (res @ q.T) @ q
    return np.sqrt((res * res).sum(axis=1))


class ProjectionDiagnostics(NamedTuple):
    trace: float
    offdiag_frobenius_sq: float
    rank: int


def projection_diagnostics(b: SubspaceBasis) -> ProjectionDiagnostics:
    """tr(P) and tr(A^2) for P the projection onto span(b), A = P - diag(P).

    Expected: tr(P) = rank and tr(A^2) <= min(d, n - d).
    """
    if b.ortho_defect > DEFECT_FALLBACK:
        raise IllConditionedBasis(f"orthogonality defect {b.ortho_defect:.3g}")
    q = b.ortho
    p = q.T @ q
    off = p - np.diag(np.diag(p))
    return ProjectionDiagnostics(float(np.trace(p)), float((off * off).sum()), b.rank)
