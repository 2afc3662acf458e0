import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from bernmat.distance import (
    count_large_coordinates, degeneracy_check, deviation_at_least, dist_experiment,
    distance_floor_frequency, loglog_threshold, small_dist_frequency, talagrand_bound,
    typicality_check,
)
from bernmat.enumeration import enumerate_distance
from bernmat.linalg import SubspaceBasis, dist_exact
from bernmat.rng import RngSpec, lazy


def test_deviation_exact_comparison():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        q = Fraction(int(rng.integers(0, 400)), int(rng.integers(1, 5)))
        k = int(rng.integers(1, 60))
        s = Fraction(int(rng.integers(0, 12)), 2)
        lhs = sympy.Abs(sympy.sqrt(sympy.Rational(q.numerator, q.denominator)) - sympy.sqrt(k))
        assert deviation_at_least(q, k, s) == bool(lhs >= sympy.Rational(s.numerator, s.denominator))


def test_fixed_basis_mean_matches_enumeration():
    b = SubspaceBasis.of([[1, 1, 1, 1]])
    assert enumerate_distance(b).mean_dist_sq == 3
    e = dist_experiment(4, 1, 20000, RngSpec(1), basis=b)
    assert abs(e.mean_sq - 3) < 4 * e.mean_sq_stderr
    assert e.table.variant == "remark"


def test_tail_table_rows():
    e = dist_experiment(30, 10, 2000, RngSpec(2))
    t0 = e.table.rows[0]
    assert t0.t == 0 and t0.bound == 4
    assert [r.t for r in e.table.rows] == sorted(r.t for r in e.table.rows)
    assert all(0 <= r.empirical <= 1 for r in e.table.rows)
    assert e.table.variant == "deviation"
    with pytest.raises(ValueError):
        dist_experiment(5, 5, 10, RngSpec(0))


def test_tail_events_against_exact_distances():
    n, d = 12, 5
    e = dist_experiment(n, d, 400, RngSpec(3), ts=(0, 1))
    # rebuild W and X from the same streams and decide events exactly
    from bernmat.distance import sample_full_rank_rows
    rows, _ = sample_full_rank_rows(RngSpec(3).child(1 << 32), 0, d, n)
    b = SubspaceBasis.of(rows.tolist(), n)
    xs = RngSpec(3).child(0).signs(0, 400, n)
    dsq = [dist_exact(x.tolist(), b) for x in xs]
    for row in e.table.rows:
        want = sum(deviation_at_least(q, n - d, Fraction(row.t) + 2) for q in dsq)
        assert row.count == want
    assert abs(e.mean_sq - float(sum(dsq)) / 400) < 1e-9


def test_tail_bound_with_slack_large_codim():
    e = dist_experiment(60, 20, 3000, RngSpec(4), ts=(2, 4, 8))
    assert all(e.table.within_3sigma())
    assert talagrand_bound(8) == pytest.approx(4 * math.exp(-4))


def test_small_dist_n2():
    rep = small_dist_frequency(2, 20000, RngSpec(5))
    assert abs(rep.estimate - 0.5) < 4 * math.sqrt(0.25 / 20000)


def test_small_dist_trend():
    a = small_dist_frequency(10, 20000, RngSpec(6))
    b = small_dist_frequency(30, 20000, RngSpec(6))
    assert a.estimate < 1
    assert b.estimate <= a.estimate + 3 * math.hypot(a.stderr, b.stderr)


def test_small_dist_against_exact_decisions():
    n, samples = 6, 300
    rep = small_dist_frequency(n, samples, RngSpec(7))
    from bernmat.distance import sample_full_rank_batch
    ws, _ = sample_full_rank_batch(RngSpec(7).child(1), 0, samples, n - 1, n)
    xs = RngSpec(7).child(0).signs(0, samples, n)
    hits = sum(dist_exact(x.tolist(), SubspaceBasis.of(w.tolist())) <= Fraction(1, 16 * n * n)
               for w, x in zip(ws, xs))
    assert rep.count == hits


@pytest.mark.parametrize("vecs, l, typical, big", [([[1, 1]], 2, True, 2),
                                                   ([[1, 1, 1], [1, 1, -1]], 3, False, 2)])
def test_typicality_examples(vecs, l, typical, big):
    v = typicality_check(SubspaceBasis.of(vecs), l)
    assert v.is_typical == typical and v.large_coordinates == big
    assert (v.witness is None) == typical


def test_typicality_random_against_sympy():
    rng = np.random.default_rng(8)
    n = 12
    for _ in range(10):
        rows = rng.choice([-1, 1], (n - 1, n))
        b = SubspaceBasis.of(rows.tolist())
        if b.rank != n - 1:
            continue
        normal = sympy.Matrix(rows.tolist()).nullspace()[0]
        unit = [abs(float(x)) / float(normal.norm()) for x in normal]
        want = sum(u >= 1 / (2 * n) - 1e-15 for u in unit)
        for l in (want, want + 1):
            verdict = typicality_check(b, l)
            assert verdict.is_typical == (want >= l)
            assert verdict.large_coordinates == want
        # scaling the normal does not change the count
        assert count_large_coordinates([7 * x for x in verdict.normal], n) == want


def test_typicality_requires_codimension_one():
    with pytest.raises(ValueError):
        typicality_check(SubspaceBasis.of([[1, 1, 1]]), 1)


def test_degeneracy_examples():
    assert degeneracy_check([5] + [0] * 9, 10 ** 6)
    assert abs(loglog_threshold(10 ** 6) - 2.6258) < 1e-4
    assert not degeneracy_check([1] * 5, 5)
    assert abs(loglog_threshold(math.e ** math.e) - 1) < 1e-12
    assert not degeneracy_check([1, 1, 0], math.e ** math.e)
    with pytest.raises(ValueError):
        degeneracy_check([0, 0], 10)
    # the base is configurable
    assert degeneracy_check([1, 1, 0], 2 ** 16, base=2)


def test_distance_floor_zero_is_membership():
    b = SubspaceBasis.of([[1, 1, 1, 1, 1, 1]])
    rep = distance_floor_frequency(6, 1, 20000, RngSpec(9), a=0, basis=b)
    exact = float(enumerate_distance(b).zero_probability)
    assert abs(rep.estimate - exact) < 4 * math.sqrt(exact / 20000)


def test_distance_floor_forced_membership():
    # W is all of R^6, so every X lies in it
    b = SubspaceBasis.of(np.eye(6, dtype=int).tolist())
    rep = distance_floor_frequency(6, 6, 500, RngSpec(1), a=0, basis=b)
    assert rep.estimate == 1
    rep = distance_floor_frequency(6, 6, 500, RngSpec(1), a=Fraction(1, 2), basis=b)
    assert rep.estimate == 1


def test_distance_floor_general_entries_and_curves():
    rep = distance_floor_frequency(12, 6, 20000, RngSpec(10), a=Fraction(1, 10))
    assert 0 <= rep.exact_ci[0] <= rep.estimate <= rep.exact_ci[1]
    assert {c.name for c in rep.bound_comparisons} == {"floor_curve_b0.9", "floor_curve_b0.95",
                                                        "floor_curve_b0.99"}
    rep2 = distance_floor_frequency(8, 3, 2000, RngSpec(10), dist=lazy(Fraction(1, 3)), a=1)
    assert rep2.extra["distribution"] == "lazy:1/3"
