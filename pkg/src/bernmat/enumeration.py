"""Exhaustive enumeration of small sign matrices and sign vectors.

Two matrix enumerators are provided. ``enumerate_full`` visits all 2^(n^2)
matrices. ``enumerate_normalized`` visits only matrices whose first row and
first column are all +1: negating rows and columns preserves |det| and
singularity, every orbit has exactly 2^(2n-1) elements and exactly one
normalized member, and half of each orbit has each determinant sign. Counts
are therefore weighted by 2^(2n-1) (split evenly between +det and -det).
Permutations are not quotiented.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import DimensionTooLarge, InvariantViolation
from .linalg import SubspaceBasis
from .rng import map_chunks

ENUM_CHUNK = 1 << 20


@dataclass(frozen=True)
class EnumStats:
    n: int
    total_weight: int
    singular_count: int
    det_sq_sum: int
    det_abs_histogram: dict[int, int]
    det_histogram: dict[int, int] = field(default_factory=dict, compare=False)
    pair_collision_count: int = field(default=0, compare=False)

    @property
    def singular_probability(self) -> Fraction:
        return Fraction(self.singular_count, self.total_weight)

    @property
    def second_moment(self) -> Fraction:
        return Fraction(self.det_sq_sum, self.total_weight)

    def check(self) -> None:
        """Raise InvariantViolation unless every structural identity holds."""
        n = self.n
        problems = []
        if self.total_weight != 2 ** (n * n):
            problems.append("total weight is not 2^(n^2)")
        if sum(self.det_abs_histogram.values()) != self.total_weight:
            problems.append("histogram does not sum to total weight")
        if self.det_abs_histogram.get(0, 0) != self.singular_count:
            problems.append("histogram mass at 0 differs from singular count")
        if self.det_sq_sum != math.factorial(n) * self.total_weight:
            problems.append(f"E det^2 = {self.second_moment}, expected {math.factorial(n)}")
        if self.pair_collision_count > self.singular_count:
            problems.append("more pair collisions than singular matrices")
        for d, c in self.det_histogram.items():
            if self.det_histogram.get(-d, 0) != c:
                problems.append(f"signed histogram asymmetric at {d}")
                break
        if problems:
            raise InvariantViolation("; ".join(problems))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "total_weight": str(self.total_weight),
            "singular_count": str(self.singular_count),
            "det_sq_sum": str(self.det_sq_sum),
            "histogram": {str(k): str(v) for k, v in sorted(self.det_abs_histogram.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> EnumStats:
        hist = {int(k): int(v) for k, v in data["histogram"].items()}
        return cls(n=int(data["n"]), total_weight=int(data["total_weight"]),
                   singular_count=int(data["singular_count"]),
                   det_sq_sum=int(data["det_sq_sum"]), det_abs_histogram=hist)


def hadamard_bound(n: int) -> int:
    """floor(n^(n/2)), an upper bound on |det| of an n x n sign matrix."""
    return math.isqrt(n ** n)


def _run(n: int, normalized: bool, workers: int) -> EnumStats:
    free = (n - 1) ** 2 if normalized else n * n
    total = 1 << free
    h = hadamard_bound(n)

    def chunk(a: int, b: int):
        hist = np.zeros(2 * h + 1, dtype=np.int64)
        coll = _kernels.enum_chunk(n, a, b, normalized, hist)
        return hist, coll

    parts = map_chunks(chunk, total, workers=workers, chunk=ENUM_CHUNK)
    hist = np.zeros(2 * h + 1, dtype=object)
    coll = 0
    for ph, pc in parts:
        hist += ph.astype(object)
        coll += int(pc)
    weight = 1 << (2 * n - 1) if normalized else 1
    signed: dict[int, int] = {}
    for offset in np.flatnonzero(hist):
        d = int(offset) - h
        c = int(hist[offset])
        if normalized and d != 0:
            # half of each orbit carries each sign
            signed[d] = signed.get(d, 0) + c * weight // 2
            signed[-d] = signed.get(-d, 0) + c * weight // 2
        else:
            signed[d] = signed.get(d, 0) + c * weight
    absolute: dict[int, int] = {}
    for d, c in signed.items():
        absolute[abs(d)] = absolute.get(abs(d), 0) + c
    return EnumStats(
        n=n,
        total_weight=sum(signed.values()),
        singular_count=signed.get(0, 0),
        det_sq_sum=sum(d * d * c for d, c in signed.items()),
        det_abs_histogram=dict(sorted(absolute.items())),
        det_histogram=dict(sorted(signed.items())),
        pair_collision_count=coll * weight,
    )


def enumerate_full(n: int, workers: int = 1) -> EnumStats:
    """Exact statistics over all 2^(n^2) sign matrices, n <= 4."""
    if not 1 <= n <= 4:
        raise DimensionTooLarge(f"full enumeration supports 1 <= n <= 4, got {n}")
    return _run(n, False, workers)


def enumerate_normalized(n: int, workers: int = 1) -> EnumStats:
    """Same statistics via first-row/first-column normalization, n <= 6."""
    if not 1 <= n <= 6:
        raise DimensionTooLarge(f"normalized enumeration supports 1 <= n <= 6, got {n}")
    if n == 1:
        return _run(1, False, workers)
    return _run(n, True, workers)


def conjectured_singular_mass(n: int) -> float:
    """n^2 2^(1-n): the probability two rows or columns coincide up to sign."""
    return n * n * 2.0 ** (1 - n)


# --------------------------------------------------------------------------
# golden files
# --------------------------------------------------------------------------

def golden_path(n: int) -> Path:
    return Path(str(resources.files("bernmat") / "golden" / f"enum_n{n}.json"))


def load_golden(n: int) -> EnumStats:
    with open(golden_path(n)) as f:
        return EnumStats.from_json(json.load(f))


def write_golden(stats: EnumStats, path: Path | str) -> None:
    with open(path, "w") as f:
        json.dump(stats.to_json(), f, indent=2)
        f.write("\n")


# --------------------------------------------------------------------------
# sign vectors against a fixed subspace
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceEnumeration:
    n: int
    d: int
    total: int
    zero_count: int
    sum_dist_sq: Fraction
    tail_counts: dict[int, int]

    @property
    def zero_probability(self) -> Fraction:
        return Fraction(self.zero_count, self.total)

    @property
    def mean_dist_sq(self) -> Fraction:
        return self.sum_dist_sq / self.total

    def tail_table(self) -> list[tuple[int, Fraction]]:
        """(t, P(|dist - sqrt(n-d)| >= t + 2)) rows."""
        return [(t, Fraction(c, self.total)) for t, c in sorted(self.tail_counts.items())]


def all_sign_vectors(n: int, start: int, stop: int) -> np.ndarray:
    """Rows are the sign vectors with bit patterns start..stop-1."""
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int64)


def _fits_int64(rows: list[list[int]], n: int) -> bool:
    m = max((abs(x) for r in rows for x in r), default=0)
    return m * n < (1 << 40)


def enumerate_distance(b: SubspaceBasis, ts=(1, 2, 4), workers: int = 1) -> DistanceEnumeration:
    """Exact distance statistics of all 2^n sign vectors to span(b).

    Uses whichever of W or its complement has smaller dimension k: with C the
    k x n integer matrix and H = C C^T, the quadratic form y^T H^{-1} y (y = Cx)
    is |P x|^2 (C spans W) or dist^2 (C spans W-perp). Membership is the exact
    test "C_perp x == 0". The sum of dist^2 is assembled from sum y y^T exactly.
    """
    n = b.ambient_dim
    if n > 24:
        raise DimensionTooLarge(f"distance enumeration supports n <= 24, got {n}")
    d = b.rank
    if d >= n:
        raise ValueError("subspace must be proper (d <= n - 1)")
    perp = b.complement
    use_w = 0 < d < n - d
    c_rows = b.basis_rows if use_w else perp
    k = len(c_rows)
    if not (_fits_int64(c_rows, n) and _fits_int64(perp, n)):
        raise ValueError("basis entries too large for exact int64 enumeration")
    cmat = np.array(c_rows, dtype=np.int64).reshape(k, n)
    pmat = np.array(perp, dtype=np.int64).reshape(len(perp), n)
    if k:
        h = np.array([[sum(a * c for a, c in zip(r, s)) for s in c_rows] for r in c_rows],
                     dtype=np.float64)
        hinv = np.linalg.inv(h)
    root = math.sqrt(n - d)
    total = 1 << n

    def chunk(a: int, z: int):
        x = all_sign_vectors(n, a, z)
        zero = int(np.all(x @ pmat.T == 0, axis=1).sum())
        if k:
            y = x @ cmat.T
            s = [[int(v) for v in row] for row in (y.T @ y)]
            q = np.einsum("si,ij,sj->s", y.astype(np.float64), hinv, y.astype(np.float64))
            dsq = q if not use_w else n - q
        else:
            s = []
            dsq = np.full(z - a, float(n))
        dist = np.sqrt(np.maximum(dsq, 0.0))
        dev = np.abs(dist - root)
        tails = {t: int((dev >= t + 2).sum()) for t in ts}
        return zero, s, tails

    parts = map_chunks(chunk, total, workers=workers, chunk=1 << 16)
    zero = sum(p[0] for p in parts)
    tails = {t: sum(p[2][t] for p in parts) for t in ts}
    if k:
        s = [[sum(p[1][i][j] for p in parts) for j in range(k)] for i in range(k)]
        hq = [[Fraction(sum(a * c for a, c in zip(r, t))) for t in c_rows] for r in c_rows]
        quad = _trace_inv_times(hq, s)
        sum_dsq = quad if not use_w else Fraction(n * total) - quad
    else:
        sum_dsq = Fraction(n * total)
    return DistanceEnumeration(n, d, total, zero, sum_dsq, tails)


def _trace_inv_times(h: list[list[Fraction]], s: list[list[int]]) -> Fraction:
    """tr(H^{-1} S) by exact Gauss-Jordan on [H | S]."""
    k = len(h)
    a = [list(h[i]) + [Fraction(v) for v in s[i]] for i in range(k)]
    for col in range(k):
        piv = next(r for r in range(col, k) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(k):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return sum((a[i][k + i] for i in range(k)), Fraction(0))
