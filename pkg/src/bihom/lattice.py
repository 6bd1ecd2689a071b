"""Linear systems, their lattice point counters and the Davenport lattice.

Counting is exact in rational arithmetic whenever ``a``, ``lambda`` and ``Z``
are rational (ints or Fractions); otherwise a float path with a 1e-9 guard
band is used, which raises when a computed boundary lands within 1e-9 of an
integer without hitting it exactly (its side cannot be trusted).
"""
from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .counting import grid
from .forms import bareiss_rank

FLOAT_GUARD = 1e-9


def _is_rational(v) -> bool:
    return isinstance(v, (int, Fraction, np.integer))


@dataclass(frozen=True)
class LinearSystem:
    """Linear forms ``L_i(u) = sum_j lambda_ij u_j`` (``lambda`` is n1 x n2) and scale ``a > 1``."""
    lam: tuple[tuple, ...]
    a: object

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(tuple(row) for row in self.lam))
        if not self.lam or not self.lam[0]:
            raise ValueError("lambda must be a nonempty n1 x n2 matrix")
        if len({len(r) for r in self.lam}) != 1:
            raise ValueError("ragged lambda")
        if not self.a > 1:
            raise ValueError("a must exceed 1")

    @property
    def n1(self) -> int:
        return len(self.lam)

    @property
    def n2(self) -> int:
        return len(self.lam[0])

    @property
    def exact(self) -> bool:
        return _is_rational(self.a) and all(_is_rational(v) for r in self.lam for v in r)

    def transposed(self) -> "LinearSystem":
        return LinearSystem(tuple(zip(*self.lam)), self.a)


def count_U(linsys: LinearSystem, Z, transposed: bool = False, budget: int = 10**7) -> int:
    """``U(Z)``: integer tuples with ``|u_j| < a Z`` (j <= n2) and
    ``|L_i(u) - u_{n2+i}| < Z / a`` (i <= n1); ``U^t`` with the transposed system."""
    if not Z > 0:
        raise ValueError("Z must be positive")
    ls = linsys.transposed() if transposed else linsys
    n1, n2, a = ls.n1, ls.n2, ls.a
    if ls.exact and _is_rational(Z):
        return _count_exact(ls, Fraction(Z))
    aZ = float(a) * float(Z)
    c = math.ceil(aZ) - 1
    if 0 < abs(aZ - round(aZ)) < FLOAT_GUARD:
        raise ArithmeticError("boundary tie |u_j| = aZ within guard band")
    if (2 * c + 1) ** n2 > budget:
        raise RuntimeError(f"enumeration budget exceeded: {(2 * c + 1) ** n2} tuples")
    U = grid([(-c, c)] * n2).astype(np.float64)
    lam = np.array(ls.lam, dtype=np.float64)
    centre = U @ lam.T                                        # (N, n1)
    w = float(Z) / float(a)
    lo, hi = centre - w, centre + w
    for edge in (lo, hi):
        gap = np.abs(edge - np.round(edge))
        if np.any((gap > 0) & (gap < FLOAT_GUARD)):
            raise ArithmeticError("boundary tie in |L_i(u) - u'| < Z/a within guard band")
    per = np.ceil(hi) - np.floor(lo) - 1
    return int(np.prod(per, axis=1).sum())


def _count_exact(ls: LinearSystem, Z: Fraction) -> int:
    a = Fraction(ls.a)
    c = math.ceil(a * Z) - 1
    if c < 0:
        return 0
    w = Z / a
    D = math.lcm(*(Fraction(v).denominator for r in ls.lam for v in r), w.denominator)
    num = np.array([[int(Fraction(v) * D) for v in r] for r in ls.lam], dtype=object)
    wn = int(w * D)
    U = grid([(-c, c)] * ls.n2).astype(object)
    centre = U.dot(num.T)                                     # D * L_i(u), exact ints
    total = 0
    for row in centre:
        prod = 1
        for cn in row:
            lo, hi = cn - wn, cn + wn
            # integers k with lo < k D < hi
            prod *= (-((-hi) // D)) - (lo // D) - 1
            if prod == 0:
                break
        total += prod
    return total


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class LatticeBasis:
    """Basis vectors are the columns of ``matrix``."""
    matrix: np.ndarray
    exact: tuple | None = None      # same matrix as nested Fractions, when rational

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def _block(a, lam, n_top: int, n_bottom: int, rational: bool):
    """``[[a^-1 I_top, 0], [a lam, a I_bottom]]`` with ``lam`` n_bottom x n_top."""
    one = Fraction(1) if rational else 1.0
    a = Fraction(a) if rational else float(a)
    n = n_top + n_bottom
    M = [[0 * one for _ in range(n)] for _ in range(n)]
    for j in range(n_top):
        M[j][j] = one / a
    for i in range(n_bottom):
        for j in range(n_top):
            M[n_top + i][j] = a * (Fraction(lam[i][j]) if rational else float(lam[i][j]))
        M[n_top + i][n_top + i] = a * one
    return M


def _basis(rows, rational: bool) -> LatticeBasis:
    mat = np.array([[float(v) for v in r] for r in rows])
    return LatticeBasis(mat, tuple(tuple(r) for r in rows) if rational else None)


@dataclass(frozen=True)
class DavenportLattices:
    lam: LatticeBasis          # Lambda
    adjoint: LatticeBasis      # M = (Lambda^t)^-1
    adjoint_similar: LatticeBasis   # M~, isometric to M
    scale: float               # b = a^((n2 - n1)/(n1 + n2))
    lam_nor: LatticeBasis      # b Lambda
    adjoint_nor: LatticeBasis  # b^-1 M~


def _rational_inverse_transpose(rows):
    n = len(rows)
    aug = [[Fraction(rows[j][i]) for j in range(n)] + [Fraction(int(i == k)) for k in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def davenport_lattice(linsys: LinearSystem) -> DavenportLattices:
    n1, n2, a = linsys.n1, linsys.n2, linsys.a
    rational = linsys.exact
    lam_rows = _block(a, linsys.lam, n2, n1, rational)
    lamT = [list(r) for r in zip(*linsys.lam)]                 # n2 x n1
    tilde_rows = _block(a, lamT, n1, n2, rational)
    if rational:
        adj_rows = _rational_inverse_transpose(lam_rows)
    else:
        adj_rows = np.linalg.inv(np.array(lam_rows, dtype=float).T).tolist()
    b = float(a) ** ((n2 - n1) / (n1 + n2))
    Lam = _basis(lam_rows, rational)
    Mt = _basis(tilde_rows, rational)
    return DavenportLattices(
        lam=Lam,
        adjoint=_basis(adj_rows, rational),
        adjoint_similar=Mt,
        scale=b,
        lam_nor=LatticeBasis(b * Lam.matrix),
        adjoint_nor=LatticeBasis(Mt.matrix / b),
    )


def short_vectors(basis: np.ndarray, radius: float, cap: int = 5 * 10**6):
    """All nonzero lattice vectors ``B z`` with ``|B z| <= radius``: (coeffs, norms).

    Coefficients are bounded by ``|z_i| <= radius * |row i of B^-1|``, which
    contains the ball, so the enumeration is complete.
    """
    B = np.asarray(basis, dtype=float)
    inv = np.linalg.inv(B)
    bounds = np.floor(radius * np.linalg.norm(inv, axis=1) * (1 + 1e-12)).astype(int)
    size = int(np.prod(2 * bounds + 1))
    if size > cap:
        raise RuntimeError(f"radius growth cap exceeded: {size} coefficient vectors")
    Zc = grid([(-int(t), int(t)) for t in bounds])
    V = Zc @ B.T
    norms = np.linalg.norm(V, axis=1)
    keep = (norms <= radius * (1 + 1e-12)) & (np.abs(Zc).sum(axis=1) > 0)
    return Zc[keep], norms[keep]


def successive_minima(basis, max_dim: int = 5, cap: int = 5 * 10**6) -> tuple[float, ...]:
    """Euclidean successive minima ``R_1 <= ... <= R_dim`` by complete enumeration.

    The radius starts at the shortest basis vector and doubles until the
    enumerated vectors span the lattice; independent minimisers are then
    selected greedily in order of length (exact integer rank on coefficients).
    """
    B = basis.matrix if isinstance(basis, LatticeBasis) else np.asarray(basis, dtype=float)
    dim = B.shape[0]
    if dim > max_dim:
        raise ValueError(f"dimension {dim} exceeds {max_dim}")
    if abs(np.linalg.det(B)) < 1e-300:
        raise ValueError("degenerate basis")
    radius = float(np.linalg.norm(B, axis=0).min())
    while True:
        Zc, norms = short_vectors(B, radius, cap)
        order = np.lexsort((np.arange(len(norms)), norms))
        chosen: list[list[int]] = []
        minima: list[float] = []
        for idx in order:
            cand = chosen + [[int(v) for v in Zc[idx]]]
            if bareiss_rank(cand) == len(cand):
                chosen = cand
                minima.append(float(norms[idx]))
                if len(chosen) == dim:
                    return tuple(minima)
        radius *= 2.0


def mahler_products(linsys: LinearSystem) -> list[float]:
    """``R^nor_k * S^nor_{n+1-k}`` for the normalised lattice and its adjoint."""
    lat = davenport_lattice(linsys)
    R = successive_minima(lat.lam_nor)
    S = successive_minima(lat.adjoint_nor)
    n = len(R)
    return [R[k] * S[n - 1 - k] for k in range(n)]


# ---------------------------------------------------------------------------
# the shrinking lemma


@dataclass(frozen=True)
class ShrinkingCheck:
    U_Z2: int
    U_Z1: int
    Ut_Z1: int
    bound: float
    ratio: float


def check_shrinking_lemma(linsys: LinearSystem, Z1, Z2) -> ShrinkingCheck:
    """Ratio of ``U(Z2)`` to ``max((Z2/Z1)^n2 U(Z1), Z2^n2 / Z1^n1 a^(n2-n1) U^t(Z1))``."""
    if not 0 < Z1 <= Z2 <= 1:
        raise ValueError("need 0 < Z1 <= Z2 <= 1")
    n1, n2, a = linsys.n1, linsys.n2, linsys.a
    u2 = count_U(linsys, Z2)
    u1 = count_U(linsys, Z1)
    ut1 = count_U(linsys, Z1, transposed=True)
    z1, z2, af = float(Z1), float(Z2), float(a)
    bound = max((z2 / z1) ** n2 * u1, z2 ** n2 / z1 ** n1 * af ** (n2 - n1) * ut1)
    return ShrinkingCheck(u2, u1, ut1, bound, u2 / bound)


@dataclass(frozen=True)
class ShrinkingInstance:
    instance: int
    linsys: LinearSystem
    Z1: Fraction
    Z2: Fraction
    check: ShrinkingCheck


def random_instance(rng: random.Random, max_n: int = 3) -> tuple[LinearSystem, Fraction, Fraction]:
    """Rational instance: ``a`` in [3/2, 4] (denominator 8), ``lambda`` in [-2, 2]
    (denominator 8), ``0 < Z1 <= Z2 <= 1`` (denominator 8)."""
    n1 = rng.randint(1, max_n)
    n2 = rng.randint(1, max_n)
    a = Fraction(rng.randint(12, 32), 8)
    lam = tuple(tuple(Fraction(rng.randint(-16, 16), 8) for _ in range(n2)) for _ in range(n1))
    z = sorted(Fraction(rng.randint(1, 8), 8) for _ in range(2))
    return LinearSystem(lam, a), z[0], z[1]


def shrinking_batch(instances: int = 200, seed: int = 0, max_n: int = 3) -> list[ShrinkingInstance]:
    rng = random.Random(seed)
    out = []
    for k in range(instances):
        ls, z1, z2 = random_instance(rng, max_n)
        out.append(ShrinkingInstance(k, ls, z1, z2, check_shrinking_lemma(ls, z1, z2)))
    return out


def batch_csv(batch: Sequence[ShrinkingInstance]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "n1", "n2", "a", "Z1", "Z2", "U_Z2", "bound", "ratio"])
    for item in batch:
        c = item.check
        w.writerow([item.instance, item.linsys.n1, item.linsys.n2, str(item.linsys.a),
                    str(item.Z1), str(item.Z2), c.U_Z2, repr(c.bound), repr(c.ratio)])
    return buf.getvalue()


def batch_maxima(batch: Sequence[ShrinkingInstance]) -> dict[tuple[int, int], float]:
    """Largest ratio per ``(n1, n2)``: the implied constant depends on the dimensions."""
    out: dict[tuple[int, int], float] = {}
    for item in batch:
        key = (item.linsys.n1, item.linsys.n2)
        out[key] = max(out.get(key, 0.0), item.check.ratio)
    return dict(sorted(out.items()))


def mahler_batch(instances: int = 20, seed: int = 0, max_dim: int = 4) -> list[list[float]]:
    """Mahler products for random rational instances with ``n1 + n2 <= max_dim``."""
    rng = random.Random(seed)
    out = []
    while len(out) < instances:
        ls, _, _ = random_instance(rng, max_n=max_dim - 1)
        if ls.n1 + ls.n2 <= max_dim:
            out.append(mahler_products(ls))
    return out


__all__ = [
    "LinearSystem", "count_U", "LatticeBasis", "DavenportLattices", "davenport_lattice",
    "short_vectors", "successive_minima", "mahler_products", "check_shrinking_lemma",
    "ShrinkingCheck", "shrinking_batch", "batch_csv", "batch_maxima", "mahler_batch",
    "random_instance",
]
