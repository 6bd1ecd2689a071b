import random
from fractions import Fraction

import numpy as np
import pytest

from bihom.lattice import (LinearSystem, batch_csv, batch_maxima, check_shrinking_lemma,
                           count_U, davenport_lattice, mahler_batch, shrinking_batch,
                           successive_minima)

SAMPLE = LinearSystem(((Fraction(1, 3), Fraction(-3, 4)), (Fraction(5, 8), 1),
                       (0, Fraction(1, 2))), Fraction(5, 2))


def test_decoupled_count():
    assert count_U(LinearSystem(((0,),), 2), 1) == 3
    assert count_U(LinearSystem(((0.0,),), 2.0), 1.0) == 3


def test_count_monotone_in_Z():
    zs = [Fraction(1, 8), Fraction(1, 2), 1, 2, 4]
    counts = [count_U(SAMPLE, z) for z in zs]
    assert counts == sorted(counts)
    tcounts = [count_U(SAMPLE, z, transposed=True) for z in zs]
    assert tcounts == sorted(tcounts)


def test_count_grows_like_volume():
    ls = LinearSystem(((Fraction(1, 3),),), 2)
    for Z in (4, 8):
        vol = (2 * 2 * Z) * (2 * Z / 2)
        assert count_U(ls, Z) == pytest.approx(vol, rel=0.3)


def test_count_equivariant_under_relabelling():
    perm = LinearSystem((SAMPLE.lam[2], SAMPLE.lam[0], SAMPLE.lam[1]), SAMPLE.a)
    assert count_U(perm, 1) == count_U(SAMPLE, 1)


def test_davenport_examples():
    d = davenport_lattice(LinearSystem(((0,),), 2))
    assert np.allclose(d.lam.matrix, np.diag([0.5, 2.0]))
    sym = davenport_lattice(LinearSystem(((1, 2), (3, 4)), 3))
    assert sym.scale == 1
    assert np.allclose(sym.lam_nor.matrix, sym.lam.matrix)


def test_davenport_determinants_and_adjointness():
    d = davenport_lattice(SAMPLE)
    E = np.array(d.lam.exact, dtype=object)
    A = np.array(d.adjoint.exact, dtype=object)
    assert (E.T.dot(A) == np.eye(5, dtype=int)).all()
    assert d.lam.det == pytest.approx(2.5 ** (3 - 2))
    assert abs(np.linalg.det(d.lam_nor.matrix)) == pytest.approx(1.0)


def test_similar_adjoint_has_same_minima():
    d = davenport_lattice(SAMPLE)
    assert successive_minima(d.adjoint) == pytest.approx(successive_minima(d.adjoint_similar))


def test_minima_examples():
    assert successive_minima(np.eye(3)) == pytest.approx((1, 1, 1))
    assert successive_minima(np.diag([0.5, 2])) == pytest.approx((0.5, 2))
    rng = np.random.default_rng(2)
    for _ in range(5):
        diag = rng.uniform(0.2, 3, 3)
        assert successive_minima(np.diag(diag)) == pytest.approx(sorted(diag))


def test_minima_sorted_on_random_basis():
    rng = np.random.default_rng(3)
    for _ in range(5):
        B = rng.integers(-3, 4, (4, 4)).astype(float)
        if abs(np.linalg.det(B)) < 0.5:
            continue
        m = successive_minima(B)
        assert list(m) == sorted(m)


def test_shrinking_equal_Z():
    c = check_shrinking_lemma(SAMPLE, Fraction(1, 2), Fraction(1, 2))
    assert c.ratio <= 1


def test_shrinking_precondition():
    with pytest.raises(ValueError):
        check_shrinking_lemma(SAMPLE, Fraction(1, 2), Fraction(1, 4))


def test_decoupled_ratio_tends_to_one():
    zero = ((0, 0), (0, 0))
    for Z1 in (Fraction(1, 4), Fraction(1, 2)):
        ratios = [check_shrinking_lemma(LinearSystem(zero, a), Z1, 1).ratio for a in (20, 60, 200)]
        assert ratios == sorted(ratios, reverse=True)
        assert ratios[-1] <= 1.02


def test_batch_stability_and_csv():
    batch = shrinking_batch(200, seed=0)
    ratios = [b.check.ratio for b in batch]
    assert all(np.isfinite(ratios))
    assert max(ratios) <= 2 * max(ratios[:100])
    header = batch_csv(batch[:2]).splitlines()[0]
    assert header == "instance,n1,n2,a,Z1,Z2,U_Z2,bound,ratio"
    per_shape = batch_maxima(batch)
    assert max(per_shape.values()) == max(ratios)


def test_mahler_products_bounded():
    products = mahler_batch(10, seed=1)
    flat = [v for row in products for v in row]
    assert min(flat) >= 1 / 8 and max(flat) <= 8
