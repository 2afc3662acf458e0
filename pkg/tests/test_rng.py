from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bernmat.errors import InvalidDistribution
from bernmat.rng import (
    RngSpec, bernoulli, bounded_custom, discrete, lazy, map_chunks, parse_distribution,
    sample_int_matrices,
)


@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 2 ** 64 - 1), st.integers(1, 200),
       st.integers(1, 40))
def test_chunking_invariance(seed, stream, n, total):
    r = RngSpec(seed, stream)
    whole = r.signs(0, total, n)
    split = np.concatenate([r.signs(a, min(a + 7, total), n) for a in range(0, total, 7)])
    assert (whole == split).all()


def test_streams_differ_and_repeat():
    a, b = RngSpec(1, 0), RngSpec(1, 1)
    assert not (a.sign_matrices(0, 10, 8) == b.sign_matrices(0, 10, 8)).all()
    assert (a.sign_matrices(0, 10, 8) == RngSpec(1, 0).sign_matrices(0, 10, 8)).all()
    assert a.child(3) == a.child(3) and a.child(3) != a.child(4)


def test_signs_are_balanced():
    s = RngSpec(5).signs(0, 20000, 64)
    assert set(np.unique(s)) == {-1, 1}
    assert abs(s.mean()) < 0.01


def test_uniforms_range():
    u = RngSpec(2).uniforms(0, 1000, 3)
    assert u.min() >= 0 and u.max() < 1


def test_map_chunks_order_and_workers():
    f = lambda a, b: list(range(a, b))
    assert map_chunks(f, 10, 1, 3) == map_chunks(f, 10, 4, 3) == [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9]]


def test_lazy_probabilities():
    d = lazy(Fraction(1, 16))
    assert dict(d.support) == {-1: Fraction(1, 32), 0: Fraction(15, 16), 1: Fraction(1, 32)}
    assert d.rho == Fraction(1, 32) and d.c == 1


def test_validation():
    with pytest.raises(InvalidDistribution):
        discrete([(1, Fraction(1, 2)), (-1, Fraction(1, 3))])
    with pytest.raises(InvalidDistribution):
        discrete([(1, Fraction(1, 2)), (-1, Fraction(1, 2))], c=1, rho=Fraction(3, 4))
    with pytest.raises(InvalidDistribution):
        discrete([(2, Fraction(1, 2)), (-1, Fraction(1, 2))], c=2, rho=Fraction(1, 4))
    with pytest.raises(InvalidDistribution):
        bounded_custom([(2, Fraction(1, 2)), (-2, Fraction(1, 2))], 3)  # variance 4
    b = bounded_custom([(2, Fraction(1, 8)), (-2, Fraction(1, 8)), (0, Fraction(3, 4))], 2)
    assert b.rho == Fraction(1, 8)


def test_parse_round_trip():
    for text in ["bernoulli", "lazy:1/16", "discrete:-1@1/4,0@1/2,1@1/4",
                 "bounded:2:-2@1/8,0@3/4,2@1/8"]:
        d = parse_distribution(text)
        assert parse_distribution(d.spec()) == d
    with pytest.raises(InvalidDistribution):
        parse_distribution("gauss")
    with pytest.raises(InvalidDistribution):
        parse_distribution("discrete:1@x")


def test_sample_frequencies_match_law():
    d = discrete([(Fraction(-3, 2), Fraction(1, 4)), (Fraction(1, 2), Fraction(3, 4))])
    m = sample_int_matrices(RngSpec(9), d, 0, 2000, 4, 5)
    assert d.denominator == 2
    vals, counts = np.unique(m, return_counts=True)
    assert vals.tolist() == [-3, 1]
    assert abs(counts[0] / m.size - 0.25) < 0.02


def test_bernoulli_rectangular():
    m = sample_int_matrices(RngSpec(1), bernoulli(), 0, 5, 3, 70)
    assert m.shape == (5, 3, 70) and set(np.unique(m)) == {-1, 1}
