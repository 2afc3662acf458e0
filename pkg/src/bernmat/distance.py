"""Distance-to-subspace experiments: tails around sqrt(n - d), the 1/(4n)
small-distance event, typicality of hyperplanes, degenerate normals, and the
distance floor for general entries.

Events are decided in floating point only when the float value is far from
the threshold; anything within a relative band of 1e-9 is settled with exact
integer or rational arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import SubspaceBasis, dist_exact, dist_float_batch, ranks_exact
from .rng import EntryDistribution, RngSpec, bernoulli, map_chunks, sample_int_matrices
from .sampling import BoundComparison, McReport

BAND = 1e-9
MAX_RESAMPLE = 64


def talagrand_bound(t: float) -> float:
    return 4.0 * math.exp(-t * t / 16.0)


# --------------------------------------------------------------------------
# exact comparisons against sqrt thresholds
# --------------------------------------------------------------------------

def _ge_a_plus_b_sqrt_c(q: Fraction, a: Fraction, b: Fraction, c: int) -> bool:
    """q >= a + b sqrt(c), exactly, for b >= 0 and c >= 0."""
    lhs = q - a
    if b == 0 or c == 0:
        return lhs >= 0
    return lhs >= 0 and lhs * lhs >= b * b * c


def _le_a_minus_b_sqrt_c(q: Fraction, a: Fraction, b: Fraction, c: int) -> bool:
    """q <= a - b sqrt(c), exactly, for b >= 0."""
    rhs = a - q
    if b == 0 or c == 0:
        return rhs >= 0
    return rhs >= 0 and rhs * rhs >= b * b * c


def deviation_at_least(dsq: Fraction, k: int, s) -> bool:
    """|sqrt(dsq) - sqrt(k)| >= s, exactly (s a nonnegative rational)."""
    s = Fraction(s)
    # dist >= sqrt(k) + s  <=>  dsq >= k + s^2 + 2 s sqrt(k)
    if _ge_a_plus_b_sqrt_c(dsq, k + s * s, 2 * s, k):
        return True
    # dist <= sqrt(k) - s  <=>  s <= sqrt(k) and dsq <= k + s^2 - 2 s sqrt(k)
    if s * s > k:
        return False
    return _le_a_minus_b_sqrt_c(dsq, k + s * s, 2 * s, k)


# --------------------------------------------------------------------------
# sampling subspaces
# --------------------------------------------------------------------------

def sample_full_rank_rows(rng: RngSpec, index: int, rows: int, cols: int,
                          dist: EntryDistribution | None = None) -> tuple[np.ndarray, int]:
    """Integer rows (scaled by dist.denominator) of exact rank ``rows``; resample count."""
    dist = dist or bernoulli()
    for attempt in range(MAX_RESAMPLE):
        sub = rng.child(attempt)
        m = sample_int_matrices(sub, dist, index, index + 1, rows, cols)
        if ranks_exact(m)[0] == rows:
            return m[0], attempt
    raise RuntimeError(f"no rank-{rows} sample after {MAX_RESAMPLE} attempts")


def sample_full_rank_batch(rng: RngSpec, start: int, stop: int, rows: int, cols: int,
                           dist: EntryDistribution | None = None) -> tuple[np.ndarray, int]:
    """Batch version: sample i uses attempts rng.child(0), rng.child(1), ... until full rank."""
    dist = dist or bernoulli()
    out = sample_int_matrices(rng.child(0), dist, start, stop, rows, cols)
    bad = np.flatnonzero(ranks_exact(out) < rows)
    resamples = 0
    attempt = 0
    while len(bad):
        attempt += 1
        if attempt >= MAX_RESAMPLE:
            raise RuntimeError(f"no rank-{rows} sample after {MAX_RESAMPLE} attempts")
        resamples += len(bad)
        sub = rng.child(attempt)
        for i in bad:
            out[i] = sample_int_matrices(sub, dist, start + int(i), start + int(i) + 1, rows, cols)[0]
        bad = bad[ranks_exact(out[bad]) < rows]
    return out, resamples


# --------------------------------------------------------------------------
# tail table
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TailRow:
    t: float
    empirical: float
    bound: float
    count: int


@dataclass(frozen=True)
class TailTable:
    n: int
    d: int
    samples: int
    variant: str  # "deviation": |dist - sqrt(n-d)| >= t + 2; "remark": dist >= 3 + t
    rows: tuple[TailRow, ...]

    def within_3sigma(self) -> list[bool]:
        return [r.empirical <= r.bound + 3 * math.sqrt(r.bound / self.samples) for r in self.rows]


@dataclass
class DistExperiment:
    n: int
    d: int
    samples: int
    seed: int
    mean_sq: float
    mean_sq_stderr: float
    table: TailTable
    basis_resamples: int
    exact_resolutions: int
    extra: dict = field(default_factory=dict)


def dist_experiment(n: int, d: int, samples: int, rng: RngSpec, ts=(0, 1, 2, 4, 8),
                    basis: SubspaceBasis | None = None, workers: int = 1) -> DistExperiment:
    """Empirical E dist(X, W)^2 and tail masses against 4 exp(-t^2/16).

    W is the span of d independent sign vectors drawn once (rank-deficient
    draws are redrawn and counted) unless ``basis`` is given. For d <= n - 4
    the tail event is |dist - sqrt(n-d)| >= t + 2; for d >= n - 3 it is
    dist >= 3 + t.
    """
    if not (n >= 1 and 1 <= d <= n - 1):
        raise ValueError(f"need 1 <= d <= n - 1, got n={n}, d={d}")
    ts = tuple(sorted(ts))
    resamples = 0
    if basis is None:
        rows, resamples = sample_full_rank_rows(rng.child(1 << 32), 0, d, n)
        basis = SubspaceBasis.of(rows.tolist(), n)
    elif basis.ambient_dim != n or basis.rank != d:
        raise ValueError("basis does not have the requested shape")
    variant = "deviation" if d <= n - 4 else "remark"
    k = n - d
    root = math.sqrt(k)
    xs_rng = rng.child(0)

    def work(a: int, b: int):
        xs = xs_rng.signs(a, b, n).astype(np.int64)
        dist = dist_float_batch(xs, basis)
        dsq = dist * dist
        counts = []
        exact = 0
        for t in ts:
            if variant == "deviation":
                s = t + 2
                dev = np.abs(dist - root)
                hit = dev >= s
                close = np.abs(dev - s) <= BAND * max(1.0, s)
            else:
                s = 3 + t
                hit = dist >= s
                close = np.abs(dist - s) <= BAND * max(1.0, s)
            for i in np.flatnonzero(close):
                exact += 1
                q = dist_exact(xs[i].tolist(), basis)
                sr = Fraction(t).limit_denominator(10 ** 9)
                if variant == "deviation":
                    hit[i] = deviation_at_least(q, k, sr + 2)
                else:
                    hit[i] = q >= (3 + sr) ** 2
            counts.append(int(hit.sum()))
        return dsq, counts, exact

    parts = map_chunks(work, samples, workers=workers)
    dsq = np.concatenate([p[0] for p in parts])
    mean = math.fsum(dsq.tolist()) / samples
    var = math.fsum(((dsq - mean) ** 2).tolist()) / max(samples - 1, 1)
    rows = []
    for j, t in enumerate(ts):
        c = sum(p[1][j] for p in parts)
        rows.append(TailRow(float(t), c / samples, talagrand_bound(t), c))
    table = TailTable(n, d, samples, variant, tuple(rows))
    return DistExperiment(n, d, samples, rng.master_seed, mean, math.sqrt(var / samples), table,
                          resamples, sum(p[2] for p in parts))


# --------------------------------------------------------------------------
# small distances to random hyperplanes
# --------------------------------------------------------------------------

def _unit_normals(rows: np.ndarray) -> np.ndarray:
    """Unit normals of the hyperplanes spanned by each (n-1) x n stack entry."""
    _, _, vh = np.linalg.svd(rows.astype(np.float64), full_matrices=True)
    return vh[:, -1, :]


def _exact_normal(rows) -> list[int]:
    comp = SubspaceBasis.of([list(map(int, r)) for r in rows]).complement
    if len(comp) != 1:
        raise ValueError("rows do not span a hyperplane")
    return comp[0]


def small_dist_frequency(n: int, samples: int, rng: RngSpec, workers: int = 1) -> McReport:
    """Frequency of dist(X, W) <= 1/(4n), W spanned by n-1 fresh sign vectors.

    The event is dist^2 <= 1/(16 n^2). With v an integer normal of W this is
    16 n^2 (v.x)^2 <= |v|^2, decided exactly whenever the float distance is
    within the 1e-9 band of 1/(4n).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    thr = 1.0 / (4 * n)
    w_rng, x_rng = rng.child(1), rng.child(0)

    def work(a: int, b: int):
        ws, res = sample_full_rank_batch(w_rng, a, b, n - 1, n)
        xs = x_rng.signs(a, b, n).astype(np.float64)
        u = _unit_normals(ws)
        dist = np.abs(np.einsum("ij,ij->i", u, xs))
        hit = dist <= thr
        exact = 0
        for i in np.flatnonzero(np.abs(dist - thr) <= BAND * thr):
            exact += 1
            v = _exact_normal(ws[i])
            dot = sum(int(p) * int(q) for p, q in zip(v, xs[i]))
            hit[i] = 16 * n * n * dot * dot <= sum(p * p for p in v)
        return int(hit.sum()), res, exact

    parts = map_chunks(work, samples, workers=workers, chunk=2048)
    count = sum(p[0] for p in parts)
    rep = McReport.from_count("small-dist", n, count, samples, rng,
                              basis_resamples=sum(p[1] for p in parts),
                              exact_resolutions=sum(p[2] for p in parts),
                              threshold="1/(4n)")
    ref = 1 / math.sqrt(math.log(n)) if n > 2 else math.inf
    rep.bound_comparisons.append(BoundComparison.make(
        "small_distance_rate", "1/sqrt(ln n) (unknown constant, report only)", ref, rep.estimate))
    return rep


# --------------------------------------------------------------------------
# typicality and degeneracy
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TypicalityVerdict:
    l: int
    is_typical: bool
    large_coordinates: int
    normal: tuple[int, ...]
    witness: tuple[float, ...] | None
    threshold: float

    def to_json(self) -> dict:
        return {"l": self.l, "is_typical": self.is_typical,
                "large_coordinates": self.large_coordinates, "normal": list(self.normal),
                "witness": None if self.witness is None else list(self.witness),
                "threshold": self.threshold}


def count_large_coordinates(v, n: int) -> int:
    """Number of j with |v_j| / |v| >= 1/(2n), compared as 4 n^2 v_j^2 >= |v|^2."""
    v = [Fraction(x) for x in v]
    norm_sq = sum(x * x for x in v)
    return sum(1 for x in v if 4 * n * n * x * x >= norm_sq)


def typicality_check(b: SubspaceBasis, l: int) -> TypicalityVerdict:
    """Is the hyperplane span(b) l-typical (its unit normal has >= l coordinates >= 1/(2n))?"""
    n = b.ambient_dim
    if b.rank != n - 1:
        raise ValueError(f"typicality is decided only in codimension 1 (rank {b.rank}, n {n})")
    v = b.complement[0]
    big = count_large_coordinates(v, n)
    typical = big >= l
    norm = math.sqrt(sum(x * x for x in v))
    witness = None if typical else tuple(x / norm for x in v)
    return TypicalityVerdict(l, typical, big, tuple(v), witness, 1 / (2 * n))


def loglog_threshold(n: float, base: float = math.e) -> float:
    if n <= base:
        return float("-inf")
    return math.log(math.log(n, base), base)


def degeneracy_check(v, n: float, base: float = math.e) -> bool:
    """True when v has at most log log n nonzero coordinates (natural logs by default)."""
    nz = sum(1 for x in v if x != 0)
    if nz == 0:
        raise ValueError("zero vector has no hyperplane")
    return nz <= loglog_threshold(n, base)


# --------------------------------------------------------------------------
# distance floor for general entries
# --------------------------------------------------------------------------

FLOOR_BASES = (0.9, 0.95, 0.99)


def distance_floor_frequency(n: int, d: int, samples: int, rng: RngSpec,
                             dist: EntryDistribution | None = None, a=Fraction(1, 10),
                             basis: SubspaceBasis | None = None, workers: int = 1,
                             bases=FLOOR_BASES) -> McReport:
    """Frequency of dist(X, W) <= a / sqrt(n) for X with iid entries from ``dist``.

    W is ``basis`` if given, else the span of d rows drawn from ``dist``.
    Membership (dist = 0) is always decided exactly through the integer
    complement of W; other comparisons use the float distance with an exact
    fallback near the threshold. Curves b^(n-d) are attached for comparison.
    """
    dist = dist or bernoulli()
    a = Fraction(a)
    if a < 0:
        raise ValueError("a must be nonnegative")
    if basis is None:
        if not 1 <= d <= n - 1:
            raise ValueError("need 1 <= d <= n - 1")
        rows, _ = sample_full_rank_rows(rng.child(1 << 32), 0, d, n, dist)
        basis = SubspaceBasis.of(rows.tolist(), n)
    if basis.ambient_dim != n:
        raise ValueError("basis dimension mismatch")
    d = basis.rank
    comp = basis.complement
    den = dist.denominator
    xmax = int(np.abs(dist.scaled_values()).max())
    cmax = max((abs(x) for r in comp for x in r), default=0)
    big = cmax * xmax * n >= 1 << 62
    cmat = np.array(comp, dtype=object if big else np.int64).reshape(len(comp), n)
    thr_sq = a * a / n  # compare dist(x)^2 with D^2 scaling below
    thr_f = float(thr_sq)
    x_rng = rng.child(0)

    def work(lo: int, hi: int):
        xs = sample_int_matrices(x_rng, dist, lo, hi, 1, n)[:, 0, :]
        member = np.all((xs.astype(cmat.dtype) @ cmat.T) == 0, axis=1) if len(comp) else \
            np.ones(hi - lo, dtype=bool)
        if a == 0:
            return int(member.sum()), 0
        dsq = dist_float_batch(xs, basis) ** 2 / (den * den)
        hit = member | (dsq <= thr_f)
        exact = 0
        for i in np.flatnonzero(~member & (np.abs(dsq - thr_f) <= BAND * max(thr_f, 1e-300))):
            exact += 1
            hit[i] = dist_exact(xs[i].tolist(), basis) / (den * den) <= thr_sq
        return int(hit.sum()), exact

    parts = map_chunks(work, samples, workers=workers)
    count = sum(p[0] for p in parts)
    rep = McReport.from_count("distance-floor", n, count, samples, rng, d=d,
                              a=str(a), distribution=dist.spec(),
                              exact_resolutions=sum(p[1] for p in parts))
    for b in bases:
        rep.bound_comparisons.append(BoundComparison.make(
            f"floor_curve_b{b}", f"b^(n-d), b = {b} (constants unspecified, report only)",
            b ** (n - d), rep.estimate))
    if a == 0:
        rep.bound_comparisons.append(BoundComparison.make(
            "membership_bound", "2^(d-n)", 2.0 ** (d - n), rep.estimate))
    return rep

