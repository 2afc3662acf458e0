"""Entropy, the constant eps of h(eps) + eps / log2(16/15) = 1, discrete
codimension, gamma, and a numeric audit of the exponent chain.

The upper bound on the singularity probability has the shape (1 - eps + o(1))^n;
``exponent_audit`` checks that, over every discrete codimension d/n in (0, eps],
the exponent

    E(d/n) = h(min(eps, gamma)) + (d/n)(1/log2(16/15) - 1) - 1,
    gamma  = (d/n) / log2(16/15),

never exceeds -eps, with equality exactly at d/n = eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

LOG2_16_15 = math.log2(16 / 15)
PRINTED_EPSILON = 0.06191


def entropy(x: float) -> float:
    """Binary entropy in bits, h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"entropy needs 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def entropy_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
    return np.where((x == 0) | (x == 1), 0.0, h)


def _eps_equation(x: float) -> float:
    return entropy(x) + x / LOG2_16_15 - 1.0


@dataclass(frozen=True)
class EpsilonSolution:
    epsilon: float
    residual: float
    bracket: tuple[float, float]
    iterations: int


def solve_epsilon(lo: float = 0.0, hi: float = 0.5) -> EpsilonSolution:
    """Bisection for h(x) + x / log2(16/15) = 1 on (0, 1/2).

    The left side is increasing there (both terms are), equal to -1 at 0 and
    above 1 at 1/2, so the root is unique. The returned bracket is the final
    pair of points with opposite signs.
    """
    flo, fhi = _eps_equation(lo), _eps_equation(hi)
    if not flo < 0 < fhi:
        raise ValueError("bracket does not enclose a sign change")
    it = 0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = _eps_equation(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if fm < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    root = lo if abs(_eps_equation(lo)) <= abs(_eps_equation(hi)) else hi
    return EpsilonSolution(root, abs(_eps_equation(root)), (lo, hi), it)


def gamma_of(d_over_n: float) -> float:
    """(d/n) / log2(16/15)."""
    if d_over_n <= 0:
        raise ValueError("d/n must be positive")
    return d_over_n / LOG2_16_15


def discrete_codimension(p, n: int) -> Fraction:
    """d = m/n where 2^(-(m+1)/n) < p <= 2^(-m/n).

    Raising to the n-th power turns both comparisons into exact ones between
    p^n and powers of two: m is the largest integer with p^n * 2^m <= 1.
    """
    p = Fraction(p)
    if n < 1:
        raise ValueError("n must be positive")
    if p <= 0 or p > 1:
        raise ValueError("p must lie in (0, 1]")
    q = p ** n
    # 2^m <= 1/q; start from the bit length and correct by at most one
    inv = 1 / q
    m = inv.numerator // inv.denominator
    m = max(m.bit_length() - 1, 0)
    while Fraction(2) ** (m + 1) <= inv:
        m += 1
    while m > 0 and Fraction(2) ** m > inv:
        m -= 1
    return Fraction(m, n)


def exponent_values(x: np.ndarray, eps: float, clamp: bool = True) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    g = x / LOG2_16_15
    e_prime = np.minimum(eps, g) if clamp else g
    e_prime = np.clip(e_prime, 0.0, 1.0)
    return entropy_array(e_prime) + x * (1 / LOG2_16_15 - 1) - 1


@dataclass(frozen=True)
class ExponentAudit:
    epsilon: float
    grid: int
    clamp: bool
    max_exponent: float
    argmax: float
    argmax_index: int
    violations: int
    passed: bool


def exponent_audit(grid: int, clamp: bool = True, slack: float = 1e-12) -> ExponentAudit:
    """Evaluate E(d/n) at d/n = eps k / grid, k = 1..grid.

    Passes when every value is at most -eps + slack and the maximum sits at
    the right end d/n = eps. ``clamp=False`` replaces min(eps, gamma) by gamma,
    which should fail.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    eps = solve_epsilon().epsilon
    x = eps * np.arange(1, grid + 1, dtype=np.float64) / grid
    x[-1] = eps
    vals = exponent_values(x, eps, clamp)
    k = int(np.argmax(vals))
    viol = int(np.count_nonzero(vals > -eps + slack))
    at_end = vals[-1] >= vals.max() - slack
    return ExponentAudit(eps, grid, clamp, float(vals.max()), float(x[k]), k, viol,
                         viol == 0 and bool(at_end))


def constants_summary() -> dict:
    sol = solve_epsilon()
    return {
        "epsilon": sol.epsilon,
        "residual": sol.residual,
        "bracket": list(sol.bracket),
        "one_minus_epsilon": 1 - sol.epsilon,
        "log2_16_15": LOG2_16_15,
        "gamma_at_epsilon": gamma_of(sol.epsilon),
        "one_minus_entropy_at_epsilon": 1 - entropy(sol.epsilon),
    }
