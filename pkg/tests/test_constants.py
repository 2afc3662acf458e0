import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bernmat.constants import (
    LOG2_16_15, discrete_codimension, entropy, exponent_audit, exponent_values, gamma_of,
    solve_epsilon,
)
from scipy.optimize import brentq


def test_entropy_examples():
    assert entropy(0.5) == 1
    assert entropy(0) == 0 == entropy(1)
    assert abs(entropy(0.25) - (2 - 0.75 * math.log2(3))) < 1e-15
    with pytest.raises(ValueError):
        entropy(1.5)


def test_entropy_shape():
    x = np.linspace(0.001, 0.999, 999)
    h = np.array([entropy(t) for t in x])
    assert np.allclose(h, h[::-1], atol=1e-14)
    assert np.all(np.diff(h, 2) < 0)  # concave
    assert h.max() == entropy(0.5)


def test_epsilon_root():
    s = solve_epsilon()
    assert 0 < s.epsilon < 0.5
    assert s.residual < 1e-12
    lo, hi = s.bracket
    assert lo <= s.epsilon <= hi and hi - lo < 1e-15
    # independent root finder
    ref = brentq(lambda x: entropy(x) + x / LOG2_16_15 - 1, 1e-9, 0.5, xtol=1e-16)
    assert abs(s.epsilon - ref) < 1e-14
    # the printed value is the truncation of the root to five places
    assert math.floor(s.epsilon * 1e5) / 1e5 == 0.06191


def test_gamma():
    assert abs(gamma_of(LOG2_16_15) - 1) < 1e-15
    assert abs(LOG2_16_15 - 0.0931094) < 1e-7
    assert abs(gamma_of(0.06191) - 0.66492) < 1e-5
    eps = solve_epsilon().epsilon
    assert abs(gamma_of(eps) - (1 - entropy(eps))) < 1e-12
    assert gamma_of(1e-12) < 1e-10
    with pytest.raises(ValueError):
        gamma_of(0)


def brute_codim(p, n):
    # scan every m in 0..n^2 with exact comparisons of p^n against powers of two
    hits = [m for m in range(n * n + 1)
            if Fraction(1, 2 ** (m + 1)) < p ** n <= Fraction(1, 2 ** m)]
    return Fraction(hits[0], n) if hits else None


def test_discrete_codimension_examples():
    assert discrete_codimension(Fraction(1, 2), 7) == 1
    for n in range(1, 9):
        assert discrete_codimension(Fraction(1, 2 ** n), n) == n
    assert discrete_codimension(Fraction(3, 8), 4) == brute_codim(Fraction(3, 8), 4) == Fraction(5, 4)
    with pytest.raises(ValueError):
        discrete_codimension(0, 3)


@given(st.integers(1, 12), st.fractions(min_value=Fraction(1, 10 ** 4), max_value=1))
def test_discrete_codimension_brute(n, p):
    d = discrete_codimension(p, n)
    m = int(d * n)
    assert Fraction(1, 2 ** (m + 1)) < p ** n <= Fraction(1, 2 ** m)
    if m <= n * n:
        assert d == brute_codim(p, n)


def test_discrete_codimension_monotone_and_range():
    n = 6
    ps = sorted({Fraction(k, 997) for k in range(1, 998)})
    ds = [discrete_codimension(p, n) for p in ps]
    assert all(a >= b for a, b in zip(ds, ds[1:]))
    for p, d in zip(ps, ds):
        if Fraction(1, 2 ** n) <= p <= Fraction(1, 2):
            assert 1 <= d <= n


def test_exponent_audit():
    a = exponent_audit(10 ** 4)
    assert a.passed and a.violations == 0
    assert a.argmax_index == 10 ** 4 - 1
    eps = a.epsilon
    assert abs(exponent_values(np.array([eps]), eps)[0] + eps) < 1e-12
    assert exponent_values(np.array([eps / 2]), eps)[0] < -eps
    control = exponent_audit(10 ** 4, clamp=False)
    assert not control.passed and control.violations > 0
    with pytest.raises(ValueError):
        exponent_audit(1)
