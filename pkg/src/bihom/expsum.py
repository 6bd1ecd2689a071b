"""Exponential sums over boxes, complete sums modulo q, and near-solution counters."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Sequence

import numpy as np

from .counting import BoxPair, grid
from .forms import EXACT_INT64, FormSystem

DEFAULT_BUDGET = 10**9
GUARD = 1e-12


class BudgetExceeded(RuntimeError):
    pass


class AmbiguousThreshold(ArithmeticError):
    """A tested value sits within the guard band of the near-integrality threshold."""


def _split_alpha(alpha, R: int):
    """Return ``(numerators, q)`` when every entry is a Fraction or int, else None."""
    if len(alpha) != R:
        raise ValueError(f"alpha must have length R={R}")
    if all(isinstance(a, (int, Fraction, np.integer)) for a in alpha):
        fr = [Fraction(int(a)) if isinstance(a, np.integer) else Fraction(a) for a in alpha]
        q = math.lcm(*(f.denominator for f in fr))
        return [int(f * q) for f in fr], q
    return None


def _phase_mod1(alpha, exact_split, values, denom: int) -> np.ndarray:
    """``alpha . F mod 1`` from exact cleared values ``D F`` stacked as (R, ...)."""
    if exact_split is not None:
        nums, q = exact_split
        modulus = q * denom
        wide = values.dtype == object or modulus >= 2**31
        acc = np.zeros(values.shape[1:], dtype=object if wide else np.int64)
        for r, a in enumerate(nums):
            v = values[r]
            if wide:
                v = v.astype(object) if v.dtype != object else v
                v = np.vectorize(int, otypes=[object])(v) if v.size else v
            else:
                v = np.remainder(v.astype(np.int64), modulus)
            acc = (acc + (a % modulus) * (v % modulus)) % modulus
        return np.asarray(acc, dtype=np.float64) / modulus
    acc = np.zeros(values.shape[1:])
    for r, a in enumerate(alpha):
        # reduce the exact integer before scaling so large |F| loses no phase
        v = values[r]
        if v.dtype == object:
            v = np.array([int(t) for t in v.ravel()], dtype=object).reshape(v.shape)
        acc = acc + np.remainder(float(a) / denom * np.asarray(v, dtype=np.float64), 1.0)
    return np.remainder(acc, 1.0)


def _e(phase: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * phase)


def dirichlet_sum(beta: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """``sum_{lo <= y <= hi} e(beta y)`` in closed form (``beta`` any real array)."""
    m = hi - lo + 1
    if m <= 0:
        return np.zeros_like(beta, dtype=complex)
    b = beta - np.round(beta)
    return np.exp(1j * np.pi * b * (lo + hi)) * m * np.sinc(b * m) / np.sinc(b)


def weyl_sum(system: FormSystem, alpha: Sequence, boxes: BoxPair, method: str = "auto",
             chunk: int = 1 << 21) -> complex:
    """``S(alpha) = sum_x sum_y e(alpha . F(x; y))`` over the scaled boxes.

    ``alpha`` entries that are ints or Fractions give exact phases.  With
    ``method='fibered'`` (default when the system is linear in one block) the
    inner sum over the linear block is evaluated in closed form.
    """
    split = _split_alpha(alpha, system.R)
    if method == "auto":
        method = "fibered" if system.linear_block() else "direct"
    if method == "fibered":
        block = system.linear_block()
        if block is None:
            raise ValueError("fibered weyl_sum needs a system linear in one block")
        sys_, xr, yr = (system, boxes.ranges(1), boxes.ranges(2)) if block == "y" else (
            system.swapped(), boxes.ranges(2), boxes.ranges(1))
        return _weyl_fibered(sys_, alpha, split, xr, yr, chunk)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    comp = system.compiled
    X, Y = grid(boxes.ranges(1)), grid(boxes.ranges(2))
    if len(X) == 0 or len(Y) == 0:
        return 0j
    step = max(1, chunk // len(Y))
    parts = []
    for start in range(0, len(X), step):
        vals = comp.values(X[start:start + step], Y)
        parts.append(_e(_phase_mod1(alpha, split, vals, comp.denominator)).sum())
    return complex(np.sum(parts))


def _weyl_fibered(system, alpha, split, xr, yr, chunk) -> complex:
    comp = system.compiled
    X = grid(xr)
    if len(X) == 0 or any(hi < lo for lo, hi in yr):
        return 0j
    parts = []
    for start in range(0, len(X), chunk):
        C = comp.linear_coeffs(X[start:start + chunk])            # (B, R, n2) exact cleared
        vals = np.moveaxis(C, 1, 0)                               # (R, B, n2)
        beta = _phase_mod1(alpha, split, vals, comp.denominator)  # (B, n2)
        prod = np.ones(len(beta), dtype=complex)
        for k, (lo, hi) in enumerate(yr):
            prod *= dirichlet_sum(beta[:, k], lo, hi)
        parts.append(prod.sum())
    return complex(np.sum(parts))


# ---------------------------------------------------------------------------
# complete sums


@dataclass(frozen=True)
class CompleteSum:
    value: complex
    histogram: np.ndarray   # histogram[m] = #{(x, y) mod q : a . F = m mod q}, Python ints
    q: int
    a: tuple[int, ...]


def _require_integral(system: FormSystem):
    if not system.is_integral:
        raise ValueError("complete sums need integer coefficients; use system.cleared()")


def residue_histogram(system: FormSystem, a: Sequence[int], q: int,
                      budget: int = DEFAULT_BUDGET, method: str = "auto") -> np.ndarray:
    """Exact counts of ``a . F mod q`` over all residue pairs ``(x, y)``."""
    _require_integral(system)
    if q < 1:
        raise ValueError("q must be positive")
    if len(a) != system.R or any(not 0 <= ai < q for ai in a):
        raise ValueError("need 0 <= a_i < q for R entries")
    if method == "auto":
        method = "fibered" if system.linear_block() else "direct"
    if method == "fibered":
        block = system.linear_block()
        if block is None:
            raise ValueError("fibered histogram needs a system linear in one block")
        s = system if block == "y" else system.swapped()
        if q ** s.n1 > budget:
            raise BudgetExceeded(f"budget exceeded: {q}^{s.n1} residues")
        return _histogram_fibered(s, a, q)
    if q ** (system.n1 + system.n2) > budget:
        raise BudgetExceeded(f"budget exceeded: {q}^{system.n1 + system.n2} residue pairs")
    return _histogram_direct(system, a, q)


def _histogram_direct(system, a, q, chunk: int = 1 << 21) -> np.ndarray:
    comp = system.compiled
    X = grid([(0, q - 1)] * system.n1)
    Y = grid([(0, q - 1)] * system.n2)
    hist = np.zeros(q, dtype=np.int64)
    step = max(1, chunk // len(Y))
    for start in range(0, len(X), step):
        vals = comp.values(X[start:start + step], Y)
        acc = np.zeros(vals.shape[1:], dtype=object if vals.dtype == object else np.int64)
        for r, ar in enumerate(a):
            v = vals[r] if vals.dtype == object else vals[r].astype(np.int64)
            acc = (acc + ar * (v % q)) % q
        hist += np.bincount(np.asarray(acc, dtype=np.int64).ravel(), minlength=q)
    return np.array([int(c) for c in hist], dtype=object)


def _histogram_fibered(system, a, q, chunk: int = 1 << 20) -> np.ndarray:
    """For fixed x, ``y -> L(x) . y mod q`` hits each multiple of ``g = gcd(L, q)``
    exactly ``q^(n2-1) g`` times."""
    comp = system.compiled
    X = grid([(0, q - 1)] * system.n1)
    base = q ** (system.n2 - 1)
    per_g = np.zeros(q + 1, dtype=np.int64)   # number of x with gcd(L(x), q) = g
    for start in range(0, len(X), chunk):
        C = comp.linear_coeffs(X[start:start + chunk], dtype=np.int64 if q < 2**20 else object)
        L = np.zeros(C.shape[::2], dtype=C.dtype)
        for r, ar in enumerate(a):
            L = (L + ar * (C[:, r, :] % q)) % q
        g = np.full(len(L), q, dtype=np.int64)
        for k in range(L.shape[1]):
            g = np.gcd(g, L[:, k].astype(np.int64))
        per_g += np.bincount(g, minlength=q + 1)
    hist = [0] * q
    for g in range(1, q + 1):
        cnt = int(per_g[g])
        if cnt:
            for m in range(0, q, g):
                hist[m] += cnt * base * g
    return np.array(hist, dtype=object)


def histogram_value(hist: Sequence[int], q: int) -> complex:
    m = np.arange(q)
    return complex(np.dot(np.asarray(hist, dtype=np.float64), np.exp(2j * np.pi * m / q)))


def complete_sum(system: FormSystem, a: Sequence[int], q: int,
                 budget: int = DEFAULT_BUDGET, method: str = "auto") -> CompleteSum:
    """``S_{a,q} = sum_{x, y mod q} e(a . F(x; y) / q)`` with its exact residue histogram."""
    hist = residue_histogram(system, a, q, budget, method)
    return CompleteSum(histogram_value(hist, q), hist, q, tuple(int(v) for v in a))


def coprime_residues(q: int, R: int):
    """All ``a`` in ``[0, q)^R`` with ``gcd(q, a_1, ..., a_R) = 1``."""
    for a in itertools.product(range(q), repeat=R):
        if math.gcd(q, *a) == 1:
            yield a


def mobius(n: int) -> int:
    result, m, p = 1, n, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    return -result if m > 1 else result


def coprime_sum(system: FormSystem, q: int, budget: int = DEFAULT_BUDGET,
                method: str = "auto") -> Fraction:
    """Exact ``sum_{a: gcd(q, a) = 1} S_{a,q}`` as a rational (in fact an integer).

    The summed histogram ``H[m]`` is constant on each class ``gcd(m, q) = g``
    because multiplying ``a`` by a unit permutes the index set; the sum is then
    ``sum_g H[g] mu(q/g)`` by the Ramanujan-sum value at 1.
    """
    total = np.zeros(q, dtype=object)
    total[...] = 0
    for a in coprime_residues(q, system.R):
        total = total + residue_histogram(system, a, q, budget, method)
    by_class: dict[int, int] = {}
    for m in range(q):
        g = math.gcd(m, q)
        prev = by_class.setdefault(g, int(total[m]))
        if prev != int(total[m]):
            raise AssertionError(f"histogram not constant on gcd class {g} (q={q})")
    exact = sum(by_class[g] * mobius(q // g) for g in by_class)
    approx = sum(histogram_value(residue_histogram(system, a, q, budget, method), q)
                 for a in coprime_residues(q, system.R)) if q <= 12 else None
    if approx is not None and abs(approx - exact) > 1e-10 * max(1.0, abs(exact)):
        raise AssertionError(f"exact and float coprime sums disagree at q={q}")
    return Fraction(exact)


# ---------------------------------------------------------------------------
# near-solution counters


def _open_range(P) -> int:
    """Largest integer c with |c| < P."""
    return math.ceil(P) - 1


def _slot_vectors(n: int, P) -> np.ndarray:
    c = _open_range(P)
    return grid([(-c, c)] * n)


def count_near_solutions(system: FormSystem, alpha: Sequence, P1, P2, bound, axis: str,
                         guard: float = GUARD) -> int:
    """``M1`` (axis X) or ``M2`` (axis Y): tuples with ``||Gamma(..., e_l, ...)|| < 1/bound`` for all l.

    Axis X ranges over ``(x^(1..d1-1), y^(1..d2))`` and puts the unit vector in
    the last x-slot; axis Y ranges over ``(x^(1..d1), y^(1..d2-1))``.
    """
    axis = axis.upper()
    s = system
    if len(alpha) != s.R:
        raise ValueError(f"alpha must have length R={s.R}")
    T = s.scaled_tensor                                   # (R, n1^d1, n2^d2), D d1! d2! F
    if axis == "X":
        # move the free x-slot (the last x index) to the end
        T = np.moveaxis(T, s.d1, -1)
        slots = [(s.n1, P1)] * (s.d1 - 1) + [(s.n2, P2)] * s.d2
    elif axis == "Y":
        slots = [(s.n1, P1)] * s.d1 + [(s.n2, P2)] * (s.d2 - 1)
    else:
        raise ValueError(f"unknown axis {axis!r}")
    big = max(abs(int(v)) for v in T.ravel()) if T.size else 0
    width = max((_open_range(P) for _, P in slots), default=0)
    use_int = big * max(1, width) ** len(slots) * max(s.n1, s.n2) ** len(slots) < EXACT_INT64
    cur = T.astype(np.int64) if use_int else T
    cur = cur[None, ...]                                   # leading tuple axis
    for n, P in slots:
        V = _slot_vectors(n, P)
        if not use_int:
            V = V.astype(object)
        # contract the first remaining index (axis 2) with every slot vector
        cur = _contract_first(cur, V)
    # cur: (tuples, R, n_free) exact Gamma_i(..., e_l, ...) times D
    gam = cur
    thresh = 1.0 / float(bound)
    split = _split_alpha(alpha, s.R)
    if split is not None:
        nums, q = split
        modulus = q * s.denominator
        acc = np.zeros(gam.shape[::2], dtype=object if gam.dtype == object else np.int64)
        for r, a in enumerate(nums):
            acc = (acc + (a % modulus) * (gam[:, r, :] % modulus)) % modulus
        frac = np.asarray(acc, dtype=np.float64) / modulus
    else:
        frac = np.zeros(gam.shape[::2])
        for r, a in enumerate(alpha):
            frac = frac + np.remainder(float(a) / s.denominator * np.asarray(gam[:, r, :], dtype=np.float64), 1.0)
        frac = np.remainder(frac, 1.0)
    dist = np.minimum(frac, 1.0 - frac)
    if np.any(np.abs(dist - thresh) < guard):
        raise AmbiguousThreshold("ambiguous threshold: perturb alpha or bound")
    return int(np.count_nonzero((dist < thresh).all(axis=1)))


def _contract_first(cur: np.ndarray, V: np.ndarray) -> np.ndarray:
    """cur: (t, R, n, ...rest); V: (v, n) -> (t*v, R, ...rest)."""
    t, R, n = cur.shape[:3]
    rest = cur.shape[3:]
    flat = cur.reshape(t, R, n, -1)
    out = np.einsum("trnk,vn->tvrk", flat, V) if cur.dtype != object else \
        np.tensordot(flat, V, axes=([2], [1])).transpose(0, 3, 1, 2)
    return out.reshape((t * V.shape[0], R) + rest)


def near_solutions_at_zero(system: FormSystem, P1, P2, axis: str) -> int:
    """Closed form of ``M1``/``M2`` at ``alpha = 0``: every tuple qualifies."""
    w1 = 2 * _open_range(P1) + 1
    w2 = 2 * _open_range(P2) + 1
    s = system
    if axis.upper() == "X":
        return w1 ** ((s.d1 - 1) * s.n1) * w2 ** (s.d2 * s.n2)
    return w1 ** (s.d1 * s.n1) * w2 ** ((s.d2 - 1) * s.n2)


# ---------------------------------------------------------------------------
# dichotomy probe


@dataclass(frozen=True)
class DichotomyProbe:
    ratio: float          # |S(alpha)| / S(0)
    s_abs: float
    pairs: int
    m1: int | None
    m2: int | None
    on_arc: bool
    arc_q: int | None

    def as_dict(self) -> dict:
        return asdict(self)


def probe_weyl_dichotomy(system: FormSystem, alpha: Sequence, boxes: BoxPair, params,
                         near_budget: int = 2 * 10**6) -> DichotomyProbe:
    """Diagnostic record of every quantity in the Weyl dichotomy at ``alpha``.

    ``M1`` uses bound ``P1`` and ``M2`` bound ``P``; each is skipped (None)
    when its tuple count exceeds ``near_budget`` or the threshold is ambiguous.
    Parameters without ``P`` are evaluated at the scales of ``boxes``.
    """
    from .arcs import locate_arc

    pairs = boxes.npoints(1) * boxes.npoints(2)
    S = weyl_sum(system, alpha, boxes)
    P = boxes.p1 ** system.d1 * boxes.p2 ** system.d2

    def guarded(axis, bound):
        if near_solutions_at_zero(system, boxes.p1, boxes.p2, axis) > near_budget:
            return None
        try:
            return count_near_solutions(system, alpha, boxes.p1, boxes.p2, bound, axis)
        except AmbiguousThreshold:
            return None

    if params.P is None:
        params = params.at(boxes.p1, boxes.p2)
    center = locate_arc(alpha, params, "PLAIN")
    return DichotomyProbe(
        ratio=abs(S) / pairs if pairs else 0.0,
        s_abs=abs(S),
        pairs=pairs,
        m1=guarded("X", boxes.p1),
        m2=guarded("Y", P),
        on_arc=center is not None,
        arc_q=center.q if center is not None else None,
    )
