"""Seeded Monte Carlo engines: singularity frequency, log|det| concentration,
and the distance-product form of the determinant.

Every engine draws sample ``i`` from the counter-based stream, processes
fixed chunks of the index range (optionally on several threads) and merges
integer counts or ordered arrays, so reports do not depend on ``workers``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import stats

from . import __version__
from .constants import solve_epsilon
from .errors import SingularMatrixError
from .linalg import bareiss, dets_exact, singular_mask, _int_matrix
from .rng import EntryDistribution, RngSpec, bernoulli, map_chunks, sample_int_matrices

PIVOT_REL = 1e-9
DET_FLOOR_CONSTANT = 29.0


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundComparison:
    name: str
    formula: str
    bound: float
    observed: float
    relation: str  # "<=": observed should not exceed bound; ">=": the reverse
    satisfied: bool
    asserted: bool = False

    @classmethod
    def make(cls, name, formula, bound, observed, relation="<=", asserted=False):
        ok = observed <= bound if relation == "<=" else observed >= bound
        return cls(name, formula, float(bound), float(observed), relation, bool(ok), asserted)


def clopper_pearson(k: int, n: int, level: float = 0.99) -> tuple[float, float]:
    """Exact binomial confidence interval for k successes in n trials."""
    a = (1 - level) / 2
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - a, k + 1, n - k))
    return lo, hi


def binomial_band(p: float, n: int, level: float = 0.999) -> tuple[float, float]:
    """Central interval for the frequency of a Binomial(n, p) count."""
    lo, hi = stats.binom.interval(level, n, float(p))
    return float(lo) / n, float(hi) / n


@dataclass
class McReport:
    kind: str
    n: int
    samples: int
    seed: int
    stream_id: int
    count: int
    estimate: float
    stderr: float
    exact_ci: tuple[float, float]
    ci_level: float = 0.99
    bound_comparisons: list[BoundComparison] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    tool_version: str = __version__

    @classmethod
    def from_count(cls, kind: str, n: int, count: int, samples: int, rng: RngSpec,
                   level: float = 0.99, **extra) -> McReport:
        p = count / samples
        return cls(kind, n, samples, rng.master_seed, rng.stream_id, count, p,
                   math.sqrt(p * (1 - p) / samples), clopper_pearson(count, samples, level),
                   level, extra=extra)

    def to_json(self) -> dict:
        d = asdict(self)
        d["exact_ci"] = list(self.exact_ci)
        return d


# --------------------------------------------------------------------------
# singularity
# --------------------------------------------------------------------------

def conjectured_singular_mass(n: int) -> float:
    return n * n * 2.0 ** (1 - n)


def singular_counts(n: int, samples: int, rng: RngSpec, dist: EntryDistribution | None = None,
                    workers: int = 1, chunk: int = 8192) -> list[int]:
    """Per-chunk counts of exactly singular samples."""
    dist = dist or bernoulli()

    def work(a: int, b: int) -> int:
        mats = sample_int_matrices(rng, dist, a, b, n, n)
        return int(singular_mask(mats).sum())

    return map_chunks(work, samples, workers=workers, chunk=chunk)


def mc_singular(n: int, samples: int, rng: RngSpec, dist: EntryDistribution | None = None,
                workers: int = 1) -> McReport:
    """Frequency of exactly singular n x n matrices with iid entries from ``dist``.

    Bound comparisons (never asserted): the conjectured asymptotic
    n^2 2^(1-n) and the upper bound (1 - eps)^n.
    """
    if n < 1 or samples < 1:
        raise ValueError("need n >= 1 and samples >= 1")
    dist = dist or bernoulli()
    count = sum(singular_counts(n, samples, rng, dist, workers))
    rep = McReport.from_count("mc-singular", n, count, samples, rng, distribution=dist.spec())
    eps = solve_epsilon().epsilon
    rep.bound_comparisons += [
        BoundComparison.make("conjectured_singular_mass", "n^2 * 2^(1-n)",
                             conjectured_singular_mass(n), rep.estimate, ">="),
        BoundComparison.make("epsilon_upper_bound", "(1 - eps)^n, eps = 0.0619169962...",
                             (1 - eps) ** n, rep.estimate, "<="),
    ]
    return rep


def singular_trend(ns, samples: int, rng: RngSpec, workers: int = 1) -> list[dict]:
    """p-hat(n) next to n^2 2^(1-n), one independent stream per n."""
    rows = []
    prev = None
    for n in ns:
        rep = mc_singular(n, samples, rng.child(n), workers=workers)
        conj = conjectured_singular_mass(n)
        row = {"n": n, "estimate": rep.estimate, "stderr": rep.stderr,
               "conjectured": conj, "ratio": rep.estimate / conj,
               "non_increasing_3sigma": True}
        if prev is not None:
            slack = 3 * math.hypot(prev["stderr"], rep.stderr)
            row["non_increasing_3sigma"] = rep.estimate <= prev["estimate"] + slack
        rows.append(row)
        prev = row
    return rows


# --------------------------------------------------------------------------
# log |det|
# --------------------------------------------------------------------------

@dataclass
class DetLogResult:
    n: int
    samples: int
    seed: int
    stream_id: int
    log_abs_det: np.ndarray       # -inf marks an exactly singular sample
    exact_rechecks: int
    summary: dict

    @property
    def singular(self) -> np.ndarray:
        return np.isneginf(self.log_abs_det)

    def rows(self):
        for i, v in enumerate(self.log_abs_det):
            yield i, float(v), bool(np.isneginf(v))


def _log_abs_int(d: int) -> float:
    return -math.inf if d == 0 else math.log(abs(d))


def _logdet_chunk(rng: RngSpec, n: int, a: int, b: int) -> tuple[np.ndarray, int]:
    mats = rng.sign_matrices(a, b, n)
    _, _, u = sla.lu(mats.astype(np.float64), p_indices=True, check_finite=False)
    piv = np.abs(np.diagonal(u, axis1=-2, axis2=-1))
    with np.errstate(divide="ignore"):
        logs = np.log(piv).sum(axis=-1)
    suspect = np.flatnonzero(piv.min(axis=-1) < n * PIVOT_REL)
    for s in suspect:
        # decide exactly; small pivots are either true zeros or rounding
        logs[s] = _log_abs_int(dets_exact(mats[s:s + 1].astype(np.int64))[0])
    return logs, len(suspect)


def mc_det_log(n: int, samples: int, rng: RngSpec, workers: int = 1,
               chunk: int = 2048) -> DetLogResult:
    """log|det| of random sign matrices by partial-pivoting LU.

    Samples whose smallest absolute pivot is below n * 1e-9 are re-evaluated
    with exact integer elimination, which either confirms singularity
    (recorded as -inf) or supplies the exact value.
    """
    if not 1 <= n <= 2000:
        raise ValueError("mc_det_log supports 1 <= n <= 2000")
    chunk = max(1, min(chunk, (1 << 24) // (n * n)))
    parts = map_chunks(lambda a, b: _logdet_chunk(rng, n, a, b), samples, workers, chunk)
    logs = np.concatenate([p[0] for p in parts])
    rechecks = sum(p[1] for p in parts)
    return DetLogResult(n, samples, rng.master_seed, rng.stream_id, logs, rechecks,
                        det_log_summary(n, logs))


def det_log_summary(n: int, logs: np.ndarray) -> dict:
    half_log_fact = 0.5 * math.lgamma(n + 1)
    sing = np.isneginf(logs)
    floor = half_log_fact - DET_FLOOR_CONSTANT * math.sqrt(n * math.log(n)) if n > 1 else -math.inf
    cheb = math.log(n) + half_log_fact  # omega(n) = n
    ratio = np.exp(2 * (logs - half_log_fact))  # det^2 / n!
    m = len(logs)
    mean = math.fsum(ratio.tolist()) / m
    var = math.fsum(((ratio - mean) ** 2).tolist()) / max(m - 1, 1)
    finite = logs[~sing]
    return {
        "singular_frequency": float(sing.mean()),
        "singular_count": int(sing.sum()),
        "half_log_factorial": half_log_fact,
        "det_floor_threshold": floor,
        "det_floor_event_frequency": float((logs >= floor).mean()),
        "chebyshev_omega": "n",
        "chebyshev_threshold": cheb,
        "chebyshev_event_frequency": float((logs <= cheb).mean()),
        "mean_det_sq_over_factorial": mean,
        "mean_det_sq_stderr": math.sqrt(var / m),
        "mean_log_abs_det_nonsingular": (math.fsum(finite.tolist()) / len(finite)
                                         if len(finite) else None),
    }


# --------------------------------------------------------------------------
# base times height
# --------------------------------------------------------------------------

def distance_factors(rows) -> np.ndarray:
    """dist(X_{j+1}, span(X_1..X_j)) for j = 0..n-1, by Gram-Schmidt with re-orthogonalization."""
    a = np.asarray(rows, dtype=np.float64)
    k, n = a.shape
    q = np.zeros((k, n))
    out = np.empty(k)
    for j in range(k):
        v = a[j].copy()
        for _ in range(2):
            v -= q[:j].T @ (q[:j] @ v)
        out[j] = np.linalg.norm(v)
        if out[j] > 0:
            q[j] = v / out[j]
    return out


def det_via_distance_product(m) -> float:
    """sum_j log dist(X_{j+1}, W_j) = log|det m|, W_j the span of the first j rows.

    Singularity is checked exactly first.
    """
    rows = _int_matrix(m)
    if bareiss([list(r) for r in rows]) == 0:
        raise SingularMatrixError("matrix is singular; some distance factor is 0")
    return math.fsum(np.log(distance_factors(rows)).tolist())


def d0(n: float) -> float:
    """n - ln(n)^(1/4), the last index where the gamma schedule is used."""
    if n <= 1:
        raise ValueError("d0 needs n > 1")
    return n - math.log(n) ** 0.25


def gamma_schedule(n: float, j: float) -> float:
    """gamma_j = 7 sqrt(ln(n - j) / (n - j)) for 0 <= j <= d0(n).

    Indices start at 0 (the first row). Real n and j are accepted so the
    formula can be probed at non-integer gaps such as n - j = e.
    """
    if j < 0 or j > d0(n):
        raise ValueError(f"j = {j} outside [0, d0(n) = {d0(n):.6g}]")
    gap = n - j
    if gap <= 1:
        raise ValueError("n - j must exceed 1")
    return 7.0 * math.sqrt(math.log(gap) / gap)


def gamma_schedule_report(n: float, j: float) -> dict:
    g = gamma_schedule(n, j)
    return {"n": n, "j": j, "gamma": g, "d0": d0(n), "below_half": g < 0.5}
