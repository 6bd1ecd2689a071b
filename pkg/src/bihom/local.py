"""Singular series, local densities and p-adic nonsingular zeros."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .counting import grid
from .expsum import DEFAULT_BUDGET, BudgetExceeded, coprime_sum
from .forms import FormSystem


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == {n: 1}


def primes_up_to(n: int) -> list[int]:
    return [p for p in range(2, n + 1) if is_prime(p)]


def _n(system: FormSystem) -> int:
    return system.n1 + system.n2


def series_term(system: FormSystem, q: int, budget: int = DEFAULT_BUDGET,
                multiplicative: bool = True) -> Fraction:
    """``A(q) = q^-(n1+n2) sum_{a: gcd(q,a)=1} S_{a,q}`` exactly.

    ``A`` is multiplicative in ``q``; with ``multiplicative=True`` composite
    moduli are assembled from their prime-power parts.
    """
    if multiplicative:
        return _series_term_mult(system, q, budget)
    return Fraction(coprime_sum(system, q, budget), q ** _n(system))


def _series_term_mult(system, q, budget):
    value = Fraction(1)
    for p, k in factorize(q).items():
        value *= _prime_power_term(system, p ** k, budget)
    return value


# cached on the (immutable, hashable) system
@lru_cache(maxsize=4096)
def _prime_power_term(system: FormSystem, q: int, budget: int) -> Fraction:
    return Fraction(coprime_sum(system, q, budget), q ** _n(system))


def singular_series_partial(system: FormSystem, Q: int, budget: int = DEFAULT_BUDGET,
                            multiplicative: bool = True) -> Fraction:
    """``S(Q) = sum_{q <= Q} A(q)`` as an exact rational."""
    if Q < 1:
        raise ValueError("Q must be at least 1")
    return sum((series_term(system, q, budget, multiplicative) for q in range(1, Q + 1)),
               Fraction(0))


def count_mod_q(system: FormSystem, q: int, budget: int = DEFAULT_BUDGET,
                chunk: int = 1 << 22) -> int:
    """``#{(x, y) mod q : F_i(x; y) = 0 mod q for all i}`` by direct enumeration."""
    if not system.is_integral:
        raise ValueError("count_mod_q needs integer coefficients; use system.cleared()")
    n = _n(system)
    if q ** n > budget:
        raise BudgetExceeded(f"budget exceeded: {q}^{n} residue pairs")
    if q == 1:
        return 1
    if system.has_zero_form and system.R == 1:
        return q ** n
    comp = system.compiled
    X = grid([(0, q - 1)] * system.n1)
    Y = grid([(0, q - 1)] * system.n2)
    dtype = comp._dtype_for(comp.bound(q - 1, q - 1))
    coeffs = comp.coeffs_f if dtype is np.float64 else comp.coeffs_obj.astype(dtype)
    ym = comp.ymon(Y, dtype)
    B = [coeffs[r] @ ym.T for r in range(system.R)]
    step = max(1, chunk // len(Y))
    total = 0
    for start in range(0, len(X), step):
        xm = comp.xmon(X[start:start + step], dtype)
        mask = np.remainder(xm @ B[0], q) == 0
        for r in range(1, system.R):
            mask &= np.remainder(xm @ B[r], q) == 0
        total += int(np.count_nonzero(mask))
    return total


@dataclass(frozen=True)
class LocalFactor:
    p: int
    l: int
    partial: Fraction

    @property
    def value(self) -> float:
        return float(self.partial)


def local_factor(system: FormSystem, p: int, l: int, budget: int = DEFAULT_BUDGET) -> LocalFactor:
    """Euler factor through depth ``l``: ``1 + sum_{l' <= l} A(p^l')``."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if l < 0:
        raise ValueError("depth must be non-negative")
    partial = Fraction(1) + sum((_prime_power_term(system, p ** k, budget) for k in range(1, l + 1)),
                                Fraction(0))
    return LocalFactor(p, l, partial)


def local_density(system: FormSystem, p: int, l: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    """``p^(-l (n1 + n2 - R)) #{solutions mod p^l}``."""
    q = p ** l
    return Fraction(count_mod_q(system, q, budget), q ** (_n(system) - system.R))


def euler_product(system: FormSystem, Q: int, depth: int = 1,
                  budget: int = DEFAULT_BUDGET) -> Fraction:
    """``prod_{p <= Q} local_factor(p, l_p)`` with ``l_p`` the largest depth with ``p^l <= Q``
    (at least ``depth``)."""
    value = Fraction(1)
    for p in primes_up_to(Q):
        l = max(depth, int(math.floor(math.log(Q, p) + 1e-12)))
        value *= local_factor(system, p, l, budget).partial
    return value


# ---------------------------------------------------------------------------
# p-adic nonsingular zeros


def _valuation(n: int, p: int) -> int:
    if n == 0:
        return math.inf
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rank_mod_p(matrix: Sequence[Sequence[int]], p: int) -> int:
    rows = [[int(v) % p for v in r] for r in matrix]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rows[rank] = [(v * inv) % p for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col]
                rows[r] = [(a - f * b) % p for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _det(m: list[list[int]]) -> int:
    """Integer determinant by fraction-free elimination."""
    n = len(m)
    a = [row[:] for row in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class PadicWitness:
    p: int
    modulus: int
    x: tuple[int, ...]
    y: tuple[int, ...]
    minor_columns: tuple[int, ...]
    minor_valuation: int
    status: str          # "certified" or "inconclusive"

    def as_dict(self) -> dict:
        return {"p": self.p, "modulus": self.modulus, "x": list(self.x), "y": list(self.y),
                "minor_columns": list(self.minor_columns),
                "minor_valuation": self.minor_valuation, "status": self.status}


def _integer_jacobian(system: FormSystem, x, y) -> list[list[int]]:
    from .forms import jacobian
    J = jacobian(system, x, y, "xy")
    return [[int(v) for v in row] for row in J]


def _best_minor(J: list[list[int]], R: int, p: int):
    best = None
    for cols in itertools.combinations(range(len(J[0])), R):
        d = _det([[row[c] for c in cols] for row in J])
        v = _valuation(d, p)
        if best is None or v < best[1]:
            best = (cols, v)
            if v == 0:
                break
    return best


def find_nonsingular_padic_zero(system: FormSystem, p: int, search_depth: int = 1,
                                budget: int = 10**7, chunk: int = 1 << 20) -> PadicWitness | None:
    """Search residues for a common zero that Hensel's lemma lifts to a p-adic zero.

    At depth 1 a zero mod p whose Jacobian has rank R mod p is certified.  At
    depth k > 1 zeros mod p^k are scanned and certified when some R x R minor
    has valuation e with ``2 e + 1 <= k`` (the multivariable Hensel condition
    ``v(F) > 2 v(det)``).  Returns the first witness in lexicographic order,
    or None; absence proves nothing.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if not system.is_integral:
        system = system.cleared()
    if system.has_zero_form:
        return None
    R = system.R
    comp = system.compiled
    fallback = None
    for depth in range(1, search_depth + 1):
        q = p ** depth
        if q ** _n(system) > budget:
            break
        X = grid([(0, q - 1)] * system.n1)
        Y = grid([(0, q - 1)] * system.n2)
        step = max(1, chunk // len(Y))
        for start in range(0, len(X), step):
            Xc = X[start:start + step]
            vals = comp.values(Xc, Y)
            zero = np.ones(vals.shape[1:], dtype=bool)
            for r in range(R):
                zero &= np.remainder(vals[r], q) == 0
            for xi, yi in zip(*np.nonzero(zero)):
                x = tuple(int(v) for v in Xc[xi])
                y = tuple(int(v) for v in Y[yi])
                J = _integer_jacobian(system, x, y)
                cols, e = _best_minor(J, R, p)
                if e != math.inf and 2 * e + 1 <= depth:
                    return PadicWitness(p, q, x, y, cols, e, "certified")
                if fallback is None:
                    fallback = PadicWitness(p, q, x, y, cols, -1 if e == math.inf else e,
                                            "inconclusive")
    return fallback
