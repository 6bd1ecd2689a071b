import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bihom.forms import (BidegreeError, Monomial, VectorTuple, eval_form, full_difference,
                         gamma_i, iterated_difference, jacobian_rank, make_system,
                         multilinear_eval, parse_monomial_records, sys_a, sys_b, zero_system)
from helpers import random_system, random_vector


def test_single_diagonal_monomial_tensor():
    s = make_system([[(1, [2, 0], [1, 0])]], 1, 2, 2, 2, 1)
    t = s.forms[0].tensor
    assert t[0, 0, 0] == 1
    assert sum(1 for v in t.ravel() if v != 0) == 1


def test_symmetrisation_splits_coefficient():
    s = make_system([[(1, [1, 1], [1, 0])]], 1, 2, 2, 2, 1)
    t = s.forms[0].tensor
    assert t[0, 1, 0] == t[1, 0, 0] == Fraction(1, 2)


def test_bidegree_mismatch():
    with pytest.raises(BidegreeError, match="bidegree mismatch"):
        make_system([[(1, [1, 0], [1, 0])], [(1, [2, 0], [1, 0])]], 2, 2, 2, 1, 1)


def test_empty_form_rejected():
    with pytest.raises(ValueError, match="empty form"):
        make_system([[]], 1, 2, 2, 1, 1)


def test_fraction_coefficients_parse():
    recs = parse_monomial_records([(0, "3/4", [1, 0], [0, 1]), (0, "1", [0, 1], [1, 0])])
    s = make_system(recs, 1, 2, 2, 1, 1)
    assert eval_form(s, 0, (1, 2), (3, 4)) == Fraction(3, 4) * 4 + 2 * 3
    assert not s.is_integral and s.cleared().is_integral


def test_eval_examples():
    b = sys_b()
    assert eval_form(b, 0, (1, 2), (3, 4)) == 19
    assert eval_form(b, 0, (2, 4), (3, 4)) == 76
    assert eval_form(b, 0, (0, 0), (3, 4)) == 0
    with pytest.raises(IndexError):
        eval_form(b, 1, (1, 2), (3, 4))


def test_gamma_examples():
    b, a = sys_b(), sys_a()
    assert gamma_i(b, 0, VectorTuple([(1, 0), (1, 0)], [(1, 0)])) == 2
    assert gamma_i(a, 0, VectorTuple([(0, 1, 0)], [(0, 1, 0)])) == 1
    assert gamma_i(b, 0, VectorTuple([(1, 2), (1, 2)], [(3, 4)])) == 38
    with pytest.raises(ValueError, match="shape mismatch"):
        gamma_i(b, 0, VectorTuple([(1, 2)], [(3, 4)]))


def test_iterated_difference_examples():
    assert iterated_difference(lambda y: y[0] ** 2, []) == 0
    assert abs(iterated_difference(lambda y: y[0] ** 2, [(1,), (1,)])) == 2
    a = sys_a()
    assert abs(full_difference(a, [1], VectorTuple([(1, 0, 0)], [(1, 0, 0)]))) == 1


def test_jacobian_rank_examples():
    b, a = sys_b(), sys_a()
    assert jacobian_rank(b, (1, 0), (0, 1), "x") == 0
    assert jacobian_rank(b, (1, 1), (1, 1), "x") == 1
    assert jacobian_rank(a, (1, 2, 3), (0, 0, 0), "x") == 0
    assert jacobian_rank(zero_system(2, 2, 1, 1), (1, 2), (3, 4), "xy") == 0


def test_tensor_symmetry_random():
    rng = random.Random(0)
    for _ in range(1000):
        s = random_system(rng)
        for f in s.forms:
            t = f.tensor
            for idx in np.ndindex(*t.shape):
                j, k = idx[:s.d1], idx[s.d1:]
                assert t[tuple(sorted(j)) + tuple(sorted(k))] == t[idx]


def test_contraction_matches_monomials_and_bihomogeneity():
    rng = random.Random(1)
    for _ in range(300):
        s = random_system(rng)
        x, y = random_vector(rng, s.n1), random_vector(rng, s.n2)
        lam, mu = rng.randint(-3, 3), rng.randint(-3, 3)
        for i in range(s.R):
            f = eval_form(s, i, x, y)
            tup = VectorTuple([x] * s.d1, [y] * s.d2)
            assert gamma_i(s, i, tup) == math.factorial(s.d1) * math.factorial(s.d2) * f
            scaled = eval_form(s, i, tuple(lam * v for v in x), tuple(mu * v for v in y))
            assert scaled == lam ** s.d1 * mu ** s.d2 * f


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_gamma_multilinear(seed):
    rng = random.Random(seed)
    s = random_system(rng)
    xs = [random_vector(rng, s.n1, 3) for _ in range(s.d1)]
    ys = [random_vector(rng, s.n2, 3) for _ in range(s.d2)]
    extra = random_vector(rng, s.n1, 3)
    c = rng.randint(-4, 4)
    base = gamma_i(s, 0, VectorTuple(xs, ys))
    xs2 = [tuple(a + b for a, b in zip(xs[0], extra))] + xs[1:]
    add = gamma_i(s, 0, VectorTuple([extra] + xs[1:], ys))
    assert gamma_i(s, 0, VectorTuple(xs2, ys)) == base + add
    xs3 = [tuple(c * a for a in xs[0])] + xs[1:]
    assert gamma_i(s, 0, VectorTuple(xs3, ys)) == c * base


def test_multilinear_eval_sums_forms():
    rng = random.Random(3)
    s = random_system(rng, max_R=2)
    while s.R < 2:
        s = random_system(rng, max_R=2)
    tup = VectorTuple([random_vector(rng, s.n1) for _ in range(s.d1)],
                      [random_vector(rng, s.n2) for _ in range(s.d2)])
    alpha = [0.25, -1.5]
    expect = sum(a * float(gamma_i(s, i, tup)) for i, a in enumerate(alpha))
    assert multilinear_eval(s, alpha, tup) == pytest.approx(expect, rel=1e-15)


def test_compiled_matches_exact():
    rng = random.Random(4)
    for _ in range(50):
        s = random_system(rng).cleared()
        X = np.array([random_vector(rng, s.n1) for _ in range(4)])
        Y = np.array([random_vector(rng, s.n2) for _ in range(3)])
        vals = s.compiled.values(X, Y)
        for r in range(s.R):
            for a, x in enumerate(X):
                for b, y in enumerate(Y):
                    assert vals[r, a, b] == eval_form(s, r, x, y)


def test_monomial_exponent_validation():
    with pytest.raises(ValueError):
        Monomial(1, [-1, 2], [1])
