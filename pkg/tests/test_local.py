from fractions import Fraction

import pytest

from bihom.expsum import BudgetExceeded
from bihom.forms import diagonal_system, sys_a, sys_b, zero_system
from bihom.local import (count_mod_q, euler_product, factorize, find_nonsingular_padic_zero,
                         local_density, local_factor, primes_up_to, series_term,
                         singular_series_partial)


def test_series_examples():
    assert singular_series_partial(sys_a(), 1) == 1
    assert singular_series_partial(sys_a(), 2) == Fraction(9, 8)


def test_count_mod_q_examples():
    assert count_mod_q(sys_a(), 1) == 1
    assert count_mod_q(sys_a(), 2) == 36
    assert count_mod_q(zero_system(3, 3, 1, 1), 3) == 3 ** 6


def test_local_factor_examples():
    assert local_factor(sys_a(), 2, 1).partial == Fraction(9, 8)
    assert local_factor(sys_b(), 7, 0).partial == 1
    with pytest.raises(ValueError):
        local_factor(sys_a(), 4, 1)


@pytest.mark.parametrize("system", [sys_a(), sys_b()], ids=["sys_a", "sys_b"])
@pytest.mark.parametrize("p,l", [(2, 1), (2, 2), (3, 1), (3, 2)])
def test_depth_consistency(system, p, l):
    assert local_factor(system, p, l).partial == local_density(system, p, l)


def test_multiplicative_assembly_matches_direct():
    for q in (6, 10, 12):
        for s in (sys_a(), sys_b()):
            assert series_term(s, q) == series_term(s, q, multiplicative=False)


def test_series_matches_totient_formula_for_sys_a():
    # for x . y the q-th term is phi(q) / q^3
    from math import gcd
    expect = sum(Fraction(sum(1 for k in range(1, q + 1) if gcd(k, q) == 1), q ** 3)
                 for q in range(1, 21))
    assert singular_series_partial(sys_a(), 20) == expect


def test_series_and_euler_product_agree():
    s = singular_series_partial(sys_a(), 30)
    e = euler_product(sys_a(), 30)
    assert float(abs(s - e)) < 2e-2


def test_convergence_telemetry_decreases():
    vals = [singular_series_partial(sys_a(), Q) for Q in (4, 8, 16, 32)]
    gaps = [abs(b - a) for a, b in zip(vals, vals[1:])]
    assert gaps == sorted(gaps, reverse=True)


def test_budget():
    with pytest.raises(BudgetExceeded):
        count_mod_q(sys_a(), 50, budget=1000)


def test_number_theory_helpers():
    assert factorize(360) == {2: 3, 3: 2, 5: 1}
    assert primes_up_to(13) == [2, 3, 5, 7, 11, 13]


def test_padic_witnesses():
    for p in primes_up_to(13):
        w = find_nonsingular_padic_zero(sys_a(), p)
        assert w.status == "certified" and w.minor_valuation == 0
    assert find_nonsingular_padic_zero(sys_b(), 3).status == "certified"
    assert find_nonsingular_padic_zero(zero_system(2, 2, 1, 1), 3) is None


def test_padic_singular_only_is_inconclusive():
    w = find_nonsingular_padic_zero(diagonal_system(2, 2, 2), 2, search_depth=2)
    assert w is not None and w.status == "inconclusive"
