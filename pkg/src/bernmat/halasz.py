"""Atom probabilities of hyperplanes, their Fourier integrals, and small-ball oracles.

For an integer normal v, the atom P(eta . v = 0) of the lazy sign vector
eta (entries +-1 with probability mu/2 each, 0 otherwise) is computed exactly
by convolution over the achievable partial sums. The same numbers are also
integrals over [0, 1] of cosine products; those integrals are evaluated by
quadrature to check the identity and to exercise

    F(xi) = prod |cos(pi xi v_j)|,
    G(xi) = prod ((1 - mu) + mu cos(2 pi xi v_j)),

with the pointwise inequalities F <= G^4 and F(xi) F(xi') <= G(xi + xi')^2
(mu = 1/16, sums mod 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .distance import degeneracy_check, loglog_threshold
from .errors import InvariantViolation, NonConvergence

MU_HALASZ = Fraction(1, 16)
DP_MAX_WIDTH = 50_000_000
QUAD_TOL = 1e-9
MAX_DOUBLINGS = 20
SLACK = 1e-12
_EVAL_CHUNK = 1 << 16


def _int_vector(v) -> list[int]:
    out = [int(x) for x in v]
    if any(o != x for o, x in zip(out, v)):
        raise ValueError("normal vector must have integer coordinates")
    return out


# --------------------------------------------------------------------------
# exact atoms
# --------------------------------------------------------------------------

def atom_prob_dp(v: Sequence[int], mu=1) -> Fraction:
    """Exact P(sum eta_j v_j = 0) for iid lazy signs with parameter mu."""
    v = [abs(x) for x in _int_vector(v) if x != 0]
    mu = Fraction(mu)
    if not 0 <= mu <= 1:
        raise ValueError("mu must lie in [0, 1]")
    total = sum(v)
    if 2 * total + 1 > DP_MAX_WIDTH:
        raise MemoryError(f"DP table of width {2 * total + 1} exceeds limit")
    # integer weights over the common denominator 2q
    p, q = mu.numerator, mu.denominator
    w0, w1 = 2 * (q - p), p
    dp = np.zeros(2 * total + 1, dtype=object)
    dp[total] = 1
    for x in v:
        new = dp * w0 if w0 else np.zeros_like(dp)
        new[x:] = new[x:] + dp[:-x] * w1
        new[:-x] = new[:-x] + dp[x:] * w1
        dp = new
    return Fraction(int(dp[total]), (2 * q) ** len(v))


# --------------------------------------------------------------------------
# pointwise F and G
# --------------------------------------------------------------------------

def fourier_F(v, xi):
    """prod_j |cos(pi xi v_j)|; v may be (n,) or a batch (B, n) paired with xi (B,)."""
    v = np.asarray(v, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    return np.prod(np.abs(np.cos(np.pi * xi[..., None] * v)), axis=-1)


def fourier_G(v, mu, xi):
    """prod_j ((1 - mu) + mu cos(2 pi xi v_j)), broadcasting as fourier_F."""
    m = float(Fraction(mu))
    v = np.asarray(v, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    return np.prod((1.0 - m) + m * np.cos(2.0 * np.pi * xi[..., None] * v), axis=-1)


def fourier_signed(v, xi):
    """prod_j cos(2 pi xi v_j): the mu = 1 integrand."""
    v = np.asarray(v, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    return np.prod(np.cos(2.0 * np.pi * xi[..., None] * v), axis=-1)


def _require_halasz_mu(mu) -> None:
    if Fraction(mu) != MU_HALASZ:
        raise ValueError("the pointwise inequalities are only established for mu = 1/16")


def check_fag(v, mu, xi) -> bool:
    """F(xi) <= G(xi)^4 up to an additive 1e-12."""
    _require_halasz_mu(mu)
    return bool(np.all(fourier_F(v, xi) <= fourier_G(v, mu, xi) ** 4 + SLACK))


def check_ffg(v, mu, xi, xi2) -> bool:
    """F(xi) F(xi') <= G(xi + xi' mod 1)^2 up to an additive 1e-12."""
    _require_halasz_mu(mu)
    s = np.mod(np.asarray(xi, dtype=np.float64) + np.asarray(xi2, dtype=np.float64), 1.0)
    lhs = fourier_F(v, xi) * fourier_F(v, xi2)
    return bool(np.all(lhs <= fourier_G(v, mu, s) ** 2 + SLACK))


def pointwise_violations(vs: np.ndarray, xi: np.ndarray, xi2: np.ndarray) -> tuple[int, int]:
    """Count (fag, ffg) violations over a batch of rows vs[i] with points xi[i], xi2[i]."""
    f1 = fourier_F(vs, xi)
    f2 = fourier_F(vs, xi2)
    g1 = fourier_G(vs, MU_HALASZ, xi)
    g12 = fourier_G(vs, MU_HALASZ, np.mod(xi + xi2, 1.0))
    fag = int(np.count_nonzero(f1 > g1 ** 4 + SLACK))
    ffg = int(np.count_nonzero(f1 * f2 > g12 ** 2 + SLACK))
    return fag, ffg


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureResult:
    value: float
    grid_size: int
    refinement_delta: float


def _periodic_mean(f: Callable[[np.ndarray], np.ndarray], size: int) -> float:
    # rectangle rule on [0, 1) for a 1-periodic integrand; chunk sums combined
    # with fsum so the result does not depend on evaluation order
    parts = []
    for a in range(0, size, _EVAL_CHUNK):
        k = np.arange(a, min(a + _EVAL_CHUNK, size), dtype=np.float64)
        parts.append(float(np.sum(f(k / size))))
    return math.fsum(parts) / size


def _uniform_quadrature(f, initial: int) -> QuadratureResult:
    size = max(int(initial), 2)
    prev = _periodic_mean(f, size)
    for _ in range(MAX_DOUBLINGS):
        size *= 2
        cur = _periodic_mean(f, size)
        delta = abs(cur - prev)
        if delta < QUAD_TOL:
            return QuadratureResult(cur, size, delta)
        prev = cur
    raise NonConvergence(f"no convergence after {MAX_DOUBLINGS} doublings (grid {size})")


def _initial_grid(v: Sequence[int]) -> int:
    m = max((abs(x) for x in v), default=0)
    if m > 10 ** 6:
        raise ValueError("coordinates limited to |v_j| <= 10^6")
    return 64 * len(v) * max(m, 1)


def integrate_signed(v) -> QuadratureResult:
    """int_0^1 prod cos(2 pi xi v_j) dxi, which equals P(X . v = 0)."""
    v = _int_vector(v)
    return _uniform_quadrature(lambda x: fourier_signed(v, x), _initial_grid(v))


def integrate_G(v, mu=MU_HALASZ) -> QuadratureResult:
    """int_0^1 G(xi) dxi, which equals P(X^(mu) . v = 0)."""
    v = _int_vector(v)
    return _uniform_quadrature(lambda x: fourier_G(v, mu, x), _initial_grid(v))


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(m: int):
    if m not in _GL_CACHE:
        _GL_CACHE[m] = np.polynomial.legendre.leggauss(m)
    return _GL_CACHE[m]


def _piecewise_gauss(f, breaks: np.ndarray) -> QuadratureResult:
    """Composite Gauss-Legendre on the cells between ``breaks``.

    The cells are chosen so the integrand is analytic inside each one; the
    node count per cell doubles until successive totals agree to 1e-9.
    """
    a, b = breaks[:-1], breaks[1:]
    half, mid = (b - a) / 2, (b + a) / 2
    prev = None
    m = 4
    for _ in range(MAX_DOUBLINGS):
        x, w = _gauss_legendre(m)
        parts = []
        step = max(1, _EVAL_CHUNK // m)
        for s in range(0, len(a), step):
            pts = mid[s:s + step, None] + half[s:s + step, None] * x
            vals = f(pts.ravel()).reshape(pts.shape)
            parts.append(float(np.sum((vals * w).sum(axis=1) * half[s:s + step])))
        cur = math.fsum(parts)
        if prev is not None and abs(cur - prev) < QUAD_TOL:
            return QuadratureResult(cur, m * len(a), abs(cur - prev))
        prev = cur
        m *= 2
    raise NonConvergence("piecewise Gauss-Legendre did not converge")


def _cells(kinks: np.ndarray, lo: float, hi: float, base: int) -> np.ndarray:
    grid = np.linspace(lo, hi, base + 1)
    pts = np.concatenate([grid, kinks[(kinks > lo) & (kinks < hi)]])
    return np.unique(pts)


def integrate_F(v) -> QuadratureResult:
    """int_0^1 F(xi) dxi.

    F has kinks where some cos(pi xi v_j) vanishes, xi = (k + 1/2)/|v_j|; these
    points are added to a uniform base grid so each cell is smooth.
    """
    v = _int_vector(v)
    nz = sorted({abs(x) for x in v if x})
    kinks = [(k + 0.5) / a for a in nz for k in range(a)]
    if len(kinks) > 5_000_000:
        raise ValueError("too many kinks for piecewise quadrature")
    base = max(1, min(_initial_grid(v) // 64, 4096))
    breaks = _cells(np.array(kinks, dtype=np.float64), 0.0, 1.0, base)
    return _piecewise_gauss(lambda x: fourier_F(v, x), breaks)


# --------------------------------------------------------------------------
# Halasz ratio
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HalaszRatio:
    p1: Fraction
    p16: Fraction
    ratio: float
    ratio_exact: Fraction
    degenerate: bool
    loglog_threshold: float
    delta: float
    within_half_plus_delta: bool


def halasz_ratio(v, n: int | None = None, delta: float = 0.25) -> HalaszRatio:
    """Exact P(X in V) / P(X^(1/16) in V) for the hyperplane with normal v.

    The ratio never exceeds 1 (0 <= F <= G^4 <= G <= 1 and both integrals are
    the exact atoms); a larger value raises InvariantViolation.
    """
    v = _int_vector(v)
    if not any(v):
        raise ValueError("zero vector has no hyperplane")
    n = len(v) if n is None else n
    p1 = atom_prob_dp(v, 1)
    p16 = atom_prob_dp(v, MU_HALASZ)
    r = p1 / p16
    if r > 1:
        raise InvariantViolation(f"P(X in V) / P(X^(1/16) in V) = {r} exceeds 1 for v = {v}")
    return HalaszRatio(p1, p16, float(r), r, degeneracy_check(v, n), loglog_threshold(n),
                       delta, float(r) <= 0.5 + delta)


# --------------------------------------------------------------------------
# Littlewood-Offord and Esseen
# --------------------------------------------------------------------------

def middle_binomial(k: int) -> Fraction:
    """C(k, floor(k/2)) / 2^k, the extremal small-ball value."""
    return Fraction(math.comb(k, k // 2), 2 ** k)


def _sum_distribution(a: Sequence) -> tuple[np.ndarray, np.ndarray, int]:
    """Distinct values of sum a_i eps_i (scaled by the common denominator D) and counts."""
    fr = [Fraction(x) for x in a]
    if not fr:
        raise ValueError("need at least one coefficient")
    if any(abs(x) < 1 for x in fr):
        raise ValueError("coefficients must satisfy |a_i| >= 1")
    den = math.lcm(*(x.denominator for x in fr))
    ints = [int(x * den) for x in fr]
    if sum(abs(x) for x in ints) >= 1 << 62:
        raise ValueError("coefficients too large for the integer sum table")
    sums = np.zeros(1, dtype=np.int64)
    counts = np.ones(1, dtype=np.int64)
    for x in ints:
        sums = np.concatenate([sums + x, sums - x])
        counts = np.concatenate([counts, counts])
        sums, inv = np.unique(sums, return_inverse=True)
        merged = np.zeros(len(sums), dtype=np.int64)
        np.add.at(merged, inv.ravel(), counts)
        counts = merged
    return sums, counts, den


def littlewood_offord(a: Sequence, interval: tuple) -> Fraction:
    """Exact P(sum a_i eps_i in [lo, hi]) for rational a_i with |a_i| >= 1."""
    lo, hi = (Fraction(x) for x in interval)
    if hi < lo:
        raise ValueError("empty interval")
    if hi - lo > 1:
        raise ValueError("interval length must be at most 1")
    sums, counts, den = _sum_distribution(a)
    inside = (sums >= math.ceil(lo * den)) & (sums <= math.floor(hi * den))
    return Fraction(int(counts[inside].sum()), 2 ** len(a))


def littlewood_offord_sup(a: Sequence, length=1) -> tuple[Fraction, tuple[Fraction, Fraction]]:
    """Largest mass of a closed interval of the given length, and one such interval."""
    sums, counts, den = _sum_distribution(a)
    width = Fraction(length) * den
    csum = np.concatenate([[0], np.cumsum(counts)])
    right = np.searchsorted(sums, sums + math.floor(width), side="right")
    mass = csum[right] - csum[np.arange(len(sums))]
    best = int(np.argmax(mass))
    lo = Fraction(int(sums[best]), den)
    return Fraction(int(mass[best]), 2 ** len(a)), (lo, lo + Fraction(length))


@dataclass(frozen=True)
class EsseenResult:
    integral: QuadratureResult
    constant: float
    bound: float


def esseen_bound(a: Sequence, constant: float = 2.0) -> EsseenResult:
    """C * int_{|t| <= 1} prod |cos(t a_j)| dt, the Esseen-type small-ball bound.

    The absolute constant C is not pinned down by the inequality; 2 is a
    configurable default.
    """
    av = np.array([abs(float(x)) for x in a], dtype=np.float64)
    if av.size == 0:
        raise ValueError("need at least one coefficient")
    kinks = [(k + 0.5) * math.pi / x for x in av if x > 0
             for k in range(int(x / math.pi + 0.5) + 1)]
    breaks = _cells(np.array(kinks, dtype=np.float64), 0.0, 1.0, 8)

    def integrand(t):
        return np.prod(np.abs(np.cos(t[..., None] * av)), axis=-1)

    half = _piecewise_gauss(integrand, breaks)
    total = QuadratureResult(2 * half.value, 2 * half.grid_size, 2 * half.refinement_delta)
    return EsseenResult(total, constant, constant * total.value)
