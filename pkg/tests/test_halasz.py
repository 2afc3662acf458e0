import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from bernmat.errors import NonConvergence
from bernmat.halasz import (
    MU_HALASZ, atom_prob_dp, check_fag, check_ffg, esseen_bound, fourier_F, fourier_G,
    halasz_ratio, integrate_F, integrate_G, integrate_signed, littlewood_offord,
    littlewood_offord_sup, middle_binomial, pointwise_violations,
)

int_vectors = st.lists(st.integers(-20, 20), min_size=1, max_size=10).filter(any)


def brute_atom(v, mu):
    """Sum over all {-1, 0, 1}^n outcomes."""
    mu = Fraction(mu)
    w = {-1: mu / 2, 0: 1 - mu, 1: mu / 2}
    total = Fraction(0)
    for eta in itertools.product((-1, 0, 1), repeat=len(v)):
        if sum(e * x for e, x in zip(eta, v)) == 0:
            p = Fraction(1)
            for e in eta:
                p *= w[e]
            total += p
    return total


def brute_small_ball(a, lo, hi):
    hits = sum(lo <= sum(s * x for s, x in zip(eps, a)) <= hi
               for eps in itertools.product((-1, 1), repeat=len(a)))
    return Fraction(hits, 2 ** len(a))


# --------------------------------------------------------------------------
# atoms
# --------------------------------------------------------------------------

@pytest.mark.parametrize("v, mu, p", [((1, 1), 1, Fraction(1, 2)),
                                      ((1, 1), Fraction(1, 16), Fraction(451, 512)),
                                      ((1, 1, 1, 1), 1, Fraction(3, 8)),
                                      ((1, 0, 0), 1, Fraction(0))])
def test_atom_examples(v, mu, p):
    assert atom_prob_dp(v, mu) == p


def test_atom_against_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(25):
        v = rng.integers(-4, 5, int(rng.integers(1, 7))).tolist()
        for mu in (1, Fraction(1, 16), Fraction(2, 3)):
            assert atom_prob_dp(v, mu) == brute_atom(v, mu)


@given(int_vectors, st.randoms(use_true_random=False))
def test_atom_symmetries(v, rnd):
    w = [x * rnd.choice((-1, 1)) for x in v]
    rnd.shuffle(w)
    for mu in (1, MU_HALASZ):
        assert atom_prob_dp(v, mu) == atom_prob_dp(w, mu)


def test_atom_monotone_in_mu():
    v = [1] * 9
    grid = [Fraction(k, 20) for k in range(21)]
    vals = [atom_prob_dp(v, m) for m in grid]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[0] == 1


def test_atom_memory_guard():
    with pytest.raises(MemoryError):
        atom_prob_dp([10 ** 6] * 30, 1)


# --------------------------------------------------------------------------
# F and G pointwise
# --------------------------------------------------------------------------

def test_pointwise_examples():
    assert fourier_F([3, -2], 0.0) == 1.0
    assert fourier_G([3, -2], Fraction(1, 7), 0.0) == 1.0
    assert fourier_F([1], 0.5) < 1e-16
    assert abs(fourier_G([1, 1], Fraction(1, 16), 0.5) - 49 / 64) < 1e-15
    assert check_fag([1, 1], MU_HALASZ, 0.0)
    assert check_fag([1], MU_HALASZ, 0.5)


def test_pointwise_requires_one_sixteenth():
    with pytest.raises(ValueError):
        check_fag([1], Fraction(1, 8), 0.3)


@given(st.lists(st.integers(-50, 50), min_size=1, max_size=32),
       st.floats(0, 1), st.floats(0, 1))
def test_fag_ffg_property(v, xi, xi2):
    assert check_fag(v, MU_HALASZ, xi)
    assert check_ffg(v, MU_HALASZ, xi, xi2)


def test_pointwise_batch_campaign():
    rng = np.random.default_rng(1)
    vs = rng.integers(-50, 51, (20000, 32))
    vs[rng.random(vs.shape) < 0.3] = 0
    assert pointwise_violations(vs, rng.random(20000), rng.random(20000)) == (0, 0)


def test_g_factor_range():
    xi = np.linspace(0, 1, 1001)
    g = fourier_G([1], MU_HALASZ, xi)
    assert g.min() >= 7 / 8 - 1e-15 and g.max() <= 1


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

def test_quadrature_examples():
    assert abs(integrate_F([1, 1]).value - 0.5) < 1e-12
    assert abs(integrate_G([1, 1]).value - 451 / 512) < 1e-12
    assert abs(integrate_signed([1, 1, 1, 1]).value - 3 / 8) < 1e-12
    r = integrate_signed([3, 5, -7])
    assert r.refinement_delta < 1e-9 and r.grid_size >= 64 * 3 * 7


def test_identities_random():
    rng = np.random.default_rng(2)
    for _ in range(30):
        v = rng.integers(-20, 21, int(rng.integers(1, 25)))
        if not v.any():
            continue
        assert abs(integrate_signed(v).value - float(atom_prob_dp(v, 1))) < 1e-8
        mu = Fraction(int(rng.integers(1, 10)), 10)
        assert abs(integrate_G(v, mu).value - float(atom_prob_dp(v, mu))) < 1e-8


def test_integrate_F_against_mpmath():
    mpmath.mp.dps = 30
    for v in ([1, 2], [3, -1, 2], [5, 7, 1, 2]):
        kinks = sorted({mpmath.mpf(2 * k + 1) / (2 * abs(a)) for a in v for k in range(abs(a))})
        pts = [0] + kinks + [1]
        ref = mpmath.quad(lambda x: mpmath.fprod(abs(mpmath.cos(mpmath.pi * x * a)) for a in v), pts)
        assert abs(integrate_F(v).value - float(ref)) < 1e-10


def test_F_integral_below_G_integral():
    rng = np.random.default_rng(3)
    for _ in range(20):
        v = rng.integers(1, 20, 12)
        assert integrate_F(v).value <= integrate_G(v).value + 1e-12


def test_G_integral_decay_all_ones():
    vals = [integrate_G([1] * k).value for k in (2, 8, 32, 128)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - float(atom_prob_dp([1] * 128, MU_HALASZ))) < 1e-8


def test_nonconvergence_reported(monkeypatch):
    import bernmat.halasz as h
    monkeypatch.setattr(h, "MAX_DOUBLINGS", 1)
    monkeypatch.setattr(h, "QUAD_TOL", 0.0)
    with pytest.raises(NonConvergence):
        h.integrate_signed([1, 2, 3])


# --------------------------------------------------------------------------
# ratio
# --------------------------------------------------------------------------

def test_ratio_examples():
    r = halasz_ratio([1, 1])
    assert r.ratio_exact == Fraction(256, 451)
    assert abs(r.ratio - 0.5676) < 1e-4
    assert halasz_ratio([1] + [0] * 9).ratio == 0
    r20 = halasz_ratio([1] * 20)
    assert r20.ratio <= 1
    with pytest.raises(ValueError):
        halasz_ratio([0, 0])


@given(int_vectors)
def test_ratio_at_most_one(v):
    assert halasz_ratio(v).ratio_exact <= 1


# --------------------------------------------------------------------------
# Littlewood-Offord and Esseen
# --------------------------------------------------------------------------

def test_lo_examples():
    half = (Fraction(-1, 2), Fraction(1, 2))
    assert littlewood_offord([1, 1], half) == Fraction(1, 2)
    assert littlewood_offord([1] * 4, half) == Fraction(3, 8) == middle_binomial(4)
    assert middle_binomial(12) == Fraction(924, 4096)
    with pytest.raises(ValueError):
        littlewood_offord([Fraction(1, 2)], half)
    with pytest.raises(ValueError):
        littlewood_offord([1], (0, 2))


def test_lo_against_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(40):
        k = int(rng.integers(1, 9))
        a = [Fraction(int(rng.integers(2, 30)), int(rng.integers(1, 3))) * int(rng.choice([-1, 1]))
             for _ in range(k)]
        a = [x if abs(x) >= 1 else Fraction(1) for x in a]
        lo = Fraction(int(rng.integers(-20, 20)), 4)
        hi = lo + Fraction(int(rng.integers(0, 5)), 4)
        assert littlewood_offord(a, (lo, hi)) == brute_small_ball(a, lo, hi)
        sup, (slo, shi) = littlewood_offord_sup(a, 1)
        assert brute_small_ball(a, slo, shi) == sup <= middle_binomial(k)


def test_esseen_examples():
    e = esseen_bound([1])
    assert abs(e.integral.value - 2 * math.sin(1)) < 1e-12
    assert e.bound == 2 * e.integral.value
    vals = [esseen_bound([1] * k).integral.value for k in (4, 16, 64)]
    assert vals[0] > vals[1] > vals[2]
    # decay like 1/sqrt(k): quadrupling k roughly halves the integral
    assert 0.4 < vals[2] / vals[1] < 0.6


def test_esseen_against_mpmath():
    a = [1.5, 2.0, 3.25]
    mpmath.mp.dps = 25
    ref = mpmath.quad(lambda t: mpmath.fprod(abs(mpmath.cos(t * x)) for x in a),
                      [-1, -math.pi / 4, -math.pi / 6.5, 0, math.pi / 6.5, math.pi / 4, 1])
    assert abs(esseen_bound(a).integral.value - float(ref)) < 1e-9
