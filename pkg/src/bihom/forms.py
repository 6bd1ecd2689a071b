"""Systems of bihomogeneous forms.

A form of bidegree ``(d1, d2)`` in ``x = (x_1..x_n1)`` and ``y = (y_1..y_n2)`` is
stored twice: as a list of monomials (used for exact evaluation) and as a
symmetric coefficient tensor ``F_{j1..jd1; k1..kd2}`` (used for the
multilinear form ``Gamma``).  Integer tensors are kept at the ``d1! d2!``
scale, where symmetrisation never produces fractions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Callable, Iterable, Sequence

import numpy as np

# float64 holds every integer below this exactly
EXACT_FLOAT = 2**53
EXACT_INT64 = 2**63


class BidegreeError(ValueError):
    pass


def _as_fraction(value) -> Fraction:
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float) and not value.is_integer():
        raise TypeError(f"non-integral float coefficient {value!r}; pass a Fraction or 'p/q' string")
    return Fraction(value)


def _exact(value):
    """Exact rational view of an int, numpy integer, Fraction or string."""
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value)


def _normalize(value: Fraction):
    return value.numerator if value.denominator == 1 else value


@dataclass(frozen=True)
class Monomial:
    coeff: Fraction
    xexp: tuple[int, ...]
    yexp: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeff", _as_fraction(self.coeff))
        object.__setattr__(self, "xexp", tuple(int(e) for e in self.xexp))
        object.__setattr__(self, "yexp", tuple(int(e) for e in self.yexp))
        if any(e < 0 for e in self.xexp + self.yexp):
            raise ValueError("negative exponent")

    @property
    def bidegree(self) -> tuple[int, int]:
        return sum(self.xexp), sum(self.yexp)

    def evaluate(self, x: Sequence, y: Sequence):
        value = self.coeff
        for xi, e in zip(x, self.xexp):
            if e:
                value *= _exact(xi) ** e
        for yi, e in zip(y, self.yexp):
            if e:
                value *= _exact(yi) ** e
        return value


def _multiset_orderings(exps: Sequence[int]) -> set[tuple[int, ...]]:
    indices = [j for j, e in enumerate(exps) for _ in range(e)]
    return set(itertools.permutations(indices))


@dataclass(frozen=True)
class BihomogeneousForm:
    n1: int
    n2: int
    d1: int
    d2: int
    monomials: tuple[Monomial, ...]

    @classmethod
    def from_monomials(cls, monomials: Iterable[Monomial], n1: int, n2: int, d1: int, d2: int):
        combined: dict[tuple, Fraction] = {}
        for m in monomials:
            if len(m.xexp) != n1 or len(m.yexp) != n2:
                raise BidegreeError(f"monomial {m} does not have {n1}+{n2} exponent slots")
            if m.bidegree != (d1, d2):
                raise BidegreeError(f"bidegree mismatch: monomial has {m.bidegree}, expected {(d1, d2)}")
            key = (m.xexp, m.yexp)
            combined[key] = combined.get(key, Fraction(0)) + m.coeff
        terms = tuple(
            Monomial(c, xe, ye) for (xe, ye), c in sorted(combined.items()) if c != 0
        )
        return cls(n1, n2, d1, d2, terms)

    @property
    def is_zero(self) -> bool:
        return not self.monomials

    def evaluate(self, x: Sequence, y: Sequence):
        if len(x) != self.n1 or len(y) != self.n2:
            raise ValueError(f"expected vectors of length {self.n1} and {self.n2}")
        return _normalize(sum((m.evaluate(x, y) for m in self.monomials), Fraction(0)))

    @cached_property
    def denominator(self) -> int:
        return reduce(math.lcm, (m.coeff.denominator for m in self.monomials), 1)

    def integer_tensor(self, scale: int = 1) -> np.ndarray:
        """Symmetric tensor times ``scale * d1! * d2!`` as an object array of ints.

        ``scale`` must clear the coefficient denominators.
        """
        shape = (self.n1,) * self.d1 + (self.n2,) * self.d2
        out = np.zeros(shape, dtype=object)
        out[...] = 0
        for m in self.monomials:
            weight = m.coeff * scale
            for e in m.xexp + m.yexp:
                weight *= math.factorial(e)
            if weight.denominator != 1:
                raise ValueError("scale does not clear the coefficient denominators")
            w = weight.numerator
            for jj in _multiset_orderings(m.xexp):
                for kk in _multiset_orderings(m.yexp):
                    out[jj + kk] += w
        return out

    @cached_property
    def tensor(self) -> np.ndarray:
        """The symmetric rational tensor ``F_{j;k}`` (object array of Fractions)."""
        denom = math.factorial(self.d1) * math.factorial(self.d2) * self.denominator
        ints = self.integer_tensor(self.denominator)
        out = np.empty(ints.shape, dtype=object)
        for idx in np.ndindex(ints.shape):
            out[idx] = Fraction(ints[idx], denom)
        return out

    def partial(self, axis: str, j: int, x: Sequence, y: Sequence) -> Fraction:
        value = Fraction(0)
        for m in self.monomials:
            exps = m.xexp if axis == "x" else m.yexp
            e = exps[j]
            if e == 0:
                continue
            if axis == "x":
                reduced = Monomial(m.coeff * e, m.xexp[:j] + (e - 1,) + m.xexp[j + 1:], m.yexp)
            else:
                reduced = Monomial(m.coeff * e, m.xexp, m.yexp[:j] + (e - 1,) + m.yexp[j + 1:])
            value += reduced.evaluate(x, y)
        return value


@dataclass(frozen=True)
class VectorTuple:
    xs: tuple[tuple[int, ...], ...]
    ys: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(tuple(v) for v in self.xs))
        object.__setattr__(self, "ys", tuple(tuple(v) for v in self.ys))


@dataclass(frozen=True)
class FormSystem:
    forms: tuple[BihomogeneousForm, ...]

    def __post_init__(self):
        if not self.forms:
            raise ValueError("a system needs at least one form")
        shapes = {(f.n1, f.n2) for f in self.forms}
        degrees = {(f.d1, f.d2) for f in self.forms}
        if len(degrees) > 1:
            raise BidegreeError(f"bidegree mismatch across forms: {sorted(degrees)}")
        if len(shapes) > 1:
            raise BidegreeError(f"inconsistent n1/n2 across forms: {sorted(shapes)}")

    @property
    def R(self) -> int:
        return len(self.forms)

    @property
    def n1(self) -> int:
        return self.forms[0].n1

    @property
    def n2(self) -> int:
        return self.forms[0].n2

    @property
    def d1(self) -> int:
        return self.forms[0].d1

    @property
    def d2(self) -> int:
        return self.forms[0].d2

    @property
    def dtilde(self) -> int:
        return self.d1 + self.d2 - 2

    @cached_property
    def denominator(self) -> int:
        return reduce(math.lcm, (f.denominator for f in self.forms), 1)

    @property
    def is_integral(self) -> bool:
        return self.denominator == 1

    @property
    def has_zero_form(self) -> bool:
        return any(f.is_zero for f in self.forms)

    @cached_property
    def scaled_tensor(self) -> np.ndarray:
        """Integer tensors ``D * d1! * d2! * F^{(i)}`` stacked over ``i`` (object ints)."""
        return np.stack([f.integer_tensor(self.denominator) for f in self.forms])

    @cached_property
    def compiled(self) -> "CompiledSystem":
        return CompiledSystem(self)

    def cleared(self) -> "FormSystem":
        """Same system with every coefficient multiplied by the common denominator."""
        if self.is_integral:
            return self
        D = self.denominator
        return FormSystem(tuple(
            BihomogeneousForm(f.n1, f.n2, f.d1, f.d2,
                              tuple(Monomial(m.coeff * D, m.xexp, m.yexp) for m in f.monomials))
            for f in self.forms
        ))

    def swapped(self) -> "FormSystem":
        """Exchange the roles of the x- and y-blocks."""
        return FormSystem(tuple(
            BihomogeneousForm(f.n2, f.n1, f.d2, f.d1,
                              tuple(Monomial(m.coeff, m.yexp, m.xexp) for m in f.monomials))
            for f in self.forms
        ))

    def linear_block(self) -> str | None:
        """``'y'`` if every form is linear in y, else ``'x'`` if linear in x, else None."""
        if self.d2 == 1:
            return "y"
        if self.d1 == 1:
            return "x"
        return None


def make_system(monomials_per_form: Sequence[Iterable], R: int, n1: int, n2: int,
                d1: int, d2: int) -> FormSystem:
    """Build a system from one monomial list per form.

    Monomials may be :class:`Monomial` instances or ``(coeff, xexp, yexp)``
    triples; coefficients accept ints, Fractions or ``"p/q"`` strings.
    """
    if R < 1:
        raise ValueError("R must be at least 1")
    if len(monomials_per_form) != R:
        raise ValueError(f"expected {R} monomial lists, got {len(monomials_per_form)}")
    forms = []
    for i, mons in enumerate(monomials_per_form):
        mons = [m if isinstance(m, Monomial) else Monomial(*m) for m in mons]
        if not mons:
            raise ValueError(f"empty form: form {i} has no monomials")
        forms.append(BihomogeneousForm.from_monomials(mons, n1, n2, d1, d2))
    return FormSystem(tuple(forms))


def parse_monomial_records(records: Iterable, R: int | None = None):
    """Group ``(form index, coeff, xexp, yexp)`` records by form index.

    Records may also be mappings with keys ``form``, ``coeff``, ``x``, ``y``.
    """
    grouped: dict[int, list] = {}
    for rec in records:
        if isinstance(rec, dict):
            idx, coeff, xe, ye = rec["form"], rec["coeff"], rec["x"], rec["y"]
        else:
            idx, coeff, xe, ye = rec
        grouped.setdefault(int(idx), []).append(Monomial(_as_fraction(coeff), xe, ye))
    if R is None:
        R = max(grouped) + 1 if grouped else 0
    if set(grouped) - set(range(R)):
        raise ValueError(f"form index out of range 0..{R - 1}")
    return [grouped.get(i, []) for i in range(R)]


def diagonal_system(n: int, d1: int, d2: int) -> FormSystem:
    """The single form ``sum_i x_i^d1 y_i^d2``."""
    mons = []
    for i in range(n):
        xe = [0] * n
        ye = [0] * n
        xe[i] = d1
        ye[i] = d2
        mons.append((1, xe, ye))
    return make_system([mons], 1, n, n, d1, d2)


def sys_a(n: int = 3) -> FormSystem:
    """``x . y`` in n+n variables."""
    return diagonal_system(n, 1, 1)


def sys_b(n: int = 2) -> FormSystem:
    """``sum_i x_i^2 y_i``."""
    return diagonal_system(n, 2, 1)


def zero_system(n1: int, n2: int, d1: int, d2: int) -> FormSystem:
    xe = [d1] + [0] * (n1 - 1)
    ye = [d2] + [0] * (n2 - 1)
    return make_system([[(0, xe, ye)]], 1, n1, n2, d1, d2)


# ---------------------------------------------------------------------------
# exact operations


def eval_form(system: FormSystem, i: int, x: Sequence, y: Sequence):
    if not 0 <= i < system.R:
        raise IndexError(f"form index {i} out of range for R={system.R}")
    return system.forms[i].evaluate(x, y)


def _check_tuple(system: FormSystem, tup: VectorTuple):
    if len(tup.xs) != system.d1 or len(tup.ys) != system.d2:
        raise ValueError(
            f"shape mismatch: need {system.d1} x-vectors and {system.d2} y-vectors, "
            f"got {len(tup.xs)} and {len(tup.ys)}")
    if any(len(v) != system.n1 for v in tup.xs) or any(len(v) != system.n2 for v in tup.ys):
        raise ValueError("shape mismatch: vector length differs from n1/n2")


def _contract(tensor: np.ndarray, vectors: Sequence[Sequence]) -> object:
    out = tensor
    for v in vectors:
        out = np.tensordot(np.asarray(v, dtype=object), out, axes=([0], [0]))
    return out[()] if isinstance(out, np.ndarray) else out


def gamma_i(system: FormSystem, i: int, tup: VectorTuple):
    """``Gamma_i = d1! d2! sum F^{(i)}_{j;k} x^(1)_j1 ... y^(d2)_kd2`` exactly."""
    _check_tuple(system, tup)
    value = _contract(system.scaled_tensor[i], list(tup.xs) + list(tup.ys))
    return _normalize(Fraction(value, system.denominator))


def multilinear_eval(system: FormSystem, alpha: Sequence[float], tup: VectorTuple) -> float:
    if len(alpha) != system.R:
        raise ValueError(f"alpha must have length R={system.R}")
    return math.fsum(float(a) * float(gamma_i(system, i, tup)) for i, a in enumerate(alpha))


def iterated_difference(evaluator: Callable[[tuple], object], directions: Sequence[Sequence]):
    """Alternating sum ``sum_eps (-1)^{|eps|} F(eps_1 y_1 + ... + eps_d y_d)``.

    The zero-fold difference is identically 0 by convention.
    """
    d = len(directions)
    if d == 0:
        return 0
    dim = len(directions[0])
    total = 0
    for eps in itertools.product((0, 1), repeat=d):
        point = tuple(
            sum((v[c] for e, v in zip(eps, directions) if e), Fraction(0)) for c in range(dim)
        )
        term = evaluator(tuple(_normalize(Fraction(p)) for p in point))
        total += -term if sum(eps) % 2 else term
    return total


def full_difference(system: FormSystem, alpha: Sequence, tup: VectorTuple):
    """Difference ``alpha . F`` d2 times in y, then d1 times in x.

    Its absolute value equals ``|Gamma(x~; y~)|`` for integer ``alpha``.
    """
    _check_tuple(system, tup)

    def in_x(x):
        return iterated_difference(
            lambda y: sum(Fraction(a) * system.forms[i].evaluate(x, y) for i, a in enumerate(alpha)),
            tup.ys,
        )

    return _normalize(Fraction(iterated_difference(in_x, tup.xs)))


def jacobian(system: FormSystem, x: Sequence, y: Sequence, axis: str) -> list[list[Fraction]]:
    """Exact Jacobian; ``axis`` is 'x', 'y' or 'xy' (both blocks side by side)."""
    axis = axis.lower()
    if len(x) != system.n1 or len(y) != system.n2:
        raise ValueError(f"expected vectors of length {system.n1} and {system.n2}")
    cols = []
    if axis in ("x", "xy"):
        cols += [("x", j) for j in range(system.n1)]
    if axis in ("y", "xy"):
        cols += [("y", j) for j in range(system.n2)]
    if not cols:
        raise ValueError(f"unknown axis {axis!r}")
    return [[f.partial(ax, j, x, y) for ax, j in cols] for f in system.forms]


def bareiss_rank(matrix: Sequence[Sequence]) -> int:
    """Rank over Q by fraction-free elimination."""
    rows = [list(r) for r in matrix]
    if not rows or not rows[0]:
        return 0
    denom = reduce(math.lcm, (Fraction(v).denominator for r in rows for v in r), 1)
    a = [[int(Fraction(v) * denom) for v in r] for r in rows]
    m, n = len(a), len(a[0])
    rank, prev = 0, 1
    for col in range(n):
        pivot = next((r for r in range(rank, m) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        for r in range(rank + 1, m):
            for c in range(col + 1, n):
                a[r][c] = (a[rank][col] * a[r][c] - a[r][col] * a[rank][c]) // prev
            a[r][col] = 0
        prev = a[rank][col]
        rank += 1
        if rank == m:
            break
    return rank


def jacobian_rank(system: FormSystem, x: Sequence, y: Sequence, axis: str) -> int:
    return bareiss_rank(jacobian(system, x, y, axis))


# ---------------------------------------------------------------------------
# vectorised evaluation


def _powers(values: np.ndarray, exps: np.ndarray, dtype) -> np.ndarray:
    """Monomial values ``prod_j values[:, j] ** exps[m, j]`` -> (len(values), len(exps))."""
    values = np.asarray(values)
    out = np.ones((values.shape[0], exps.shape[0]), dtype=dtype)
    vals = values.astype(dtype)
    for j in range(exps.shape[1]):
        col = vals[:, j]
        for m, e in enumerate(exps[:, j]):
            if e:
                out[:, m] *= col ** int(e)
    return out


class CompiledSystem:
    """Monomial-matrix form of a system for batched evaluation.

    ``D F_i(x; y) = X(x) @ C_i @ Y(y)^T`` where ``X`` and ``Y`` hold the distinct
    x- and y-monomials and ``D`` is the common denominator, so ``C_i`` is
    integral.  The exact methods (``values``, ``linear_coeffs``) return these
    cleared values; the ``*_float`` methods return true real values of ``F``.
    Integer evaluation picks float64 (BLAS) when the magnitude bound stays
    below 2**53, int64 below 2**63, else Python ints.
    """

    def __init__(self, system: FormSystem):
        self.system = system
        cleared = system.cleared()
        xkeys = sorted({m.xexp for f in cleared.forms for m in f.monomials}) or [(0,) * system.n1]
        ykeys = sorted({m.yexp for f in cleared.forms for m in f.monomials}) or [(0,) * system.n2]
        self.xexps = np.array(xkeys, dtype=np.int64).reshape(len(xkeys), system.n1)
        self.yexps = np.array(ykeys, dtype=np.int64).reshape(len(ykeys), system.n2)
        xi = {k: i for i, k in enumerate(xkeys)}
        yi = {k: i for i, k in enumerate(ykeys)}
        coeffs = np.zeros((system.R, len(xkeys), len(ykeys)), dtype=object)
        coeffs[...] = 0
        for r, f in enumerate(cleared.forms):
            for m in f.monomials:
                coeffs[r, xi[m.xexp], yi[m.yexp]] += m.coeff.numerator
        self.coeffs_obj = coeffs
        self.abs_coeff_sum = [int(sum(abs(c) for c in coeffs[r].ravel())) for r in range(system.R)]
        self.denominator = system.denominator
        self.coeffs_f = coeffs.astype(np.float64)
        self.coeffs_real = self.coeffs_f / self.denominator
        self.coeffs_float_ok = max((abs(int(c)) for c in coeffs.ravel()), default=0) < EXACT_FLOAT

    # ---- magnitude bounds
    def bound(self, xmax: float, ymax: float) -> int:
        """Upper bound for ``max_i |F_i|`` when ``|x_j| <= xmax`` and ``|y_k| <= ymax``."""
        s = self.system
        return max(self.abs_coeff_sum) * int(math.ceil(xmax)) ** s.d1 * int(math.ceil(ymax)) ** s.d2

    def _dtype_for(self, bound: int):
        if bound < EXACT_FLOAT and self.coeffs_float_ok:
            return np.float64
        if bound < EXACT_INT64:
            return np.int64
        return object

    def xmon(self, X: np.ndarray, dtype=np.float64) -> np.ndarray:
        return _powers(X, self.xexps, dtype)

    def ymon(self, Y: np.ndarray, dtype=np.float64) -> np.ndarray:
        return _powers(Y, self.yexps, dtype)

    def values(self, X: np.ndarray, Y: np.ndarray, dtype=None) -> np.ndarray:
        """Exact ``F_i(X[a]; Y[b])`` as an array (R, len(X), len(Y))."""
        X = np.asarray(X)
        Y = np.asarray(Y)
        if dtype is None:
            xmax = float(np.abs(X).max()) if X.size else 0.0
            ymax = float(np.abs(Y).max()) if Y.size else 0.0
            dtype = self._dtype_for(self.bound(xmax, ymax))
        coeffs = self.coeffs_f if dtype is np.float64 else self.coeffs_obj.astype(dtype)
        xm = self.xmon(X, dtype)
        ym = self.ymon(Y, dtype)
        return np.stack([(xm @ coeffs[r]) @ ym.T for r in range(self.system.R)])

    def values_float(self, V: np.ndarray, W: np.ndarray) -> np.ndarray:
        """Real evaluation at paired points: (R, len(V))."""
        xm = self.xmon(V, np.float64)
        ym = self.ymon(W, np.float64)
        return np.einsum("ax,rxy,ay->ra", xm, self.coeffs_real, ym)

    def linear_coeffs(self, X: np.ndarray, dtype=None) -> np.ndarray:
        """For a y-linear system: ``c[a, i, k]`` with ``D F_i(X[a]; y) = sum_k c y_k``."""
        s = self.system
        if s.d2 != 1:
            raise ValueError("linear_coeffs needs a system linear in y")
        X = np.asarray(X)
        if dtype is None:
            xmax = float(np.abs(X).max()) if X.size else 0.0
            dtype = self._dtype_for(self.bound(xmax, 1))
        coeffs = self.coeffs_f if dtype is np.float64 else self.coeffs_obj.astype(dtype)
        xm = self.xmon(X, dtype)
        # y-monomials of a y-linear system are unit vectors; map column -> k
        kcol = np.argmax(self.yexps, axis=1)
        out = np.zeros((X.shape[0], s.R, s.n2), dtype=dtype)
        for r in range(s.R):
            block = xm @ coeffs[r]
            for col, k in enumerate(kcol):
                out[:, r, k] += block[:, col]
        return out

    def linear_coeffs_float(self, V: np.ndarray) -> np.ndarray:
        """Real ``c[a, i, k]`` with ``F_i(V[a]; w) = sum_k c w_k``."""
        V = np.asarray(V, dtype=np.float64)
        return self.linear_coeffs(V, dtype=np.float64) / self.denominator

    def jacobian_float(self, V: np.ndarray, W: np.ndarray) -> np.ndarray:
        """Real Jacobian at paired points: (len(V), R, n1 + n2)."""
        s = self.system
        V = np.atleast_2d(np.asarray(V, dtype=np.float64))
        W = np.atleast_2d(np.asarray(W, dtype=np.float64))
        xm = self.xmon(V)
        ym = self.ymon(W)
        out = np.zeros((V.shape[0], s.R, s.n1 + s.n2))
        for j in range(s.n1):
            e = self.xexps[:, j]
            red = self.xexps.copy()
            red[:, j] = np.maximum(red[:, j] - 1, 0)
            dxm = _powers(V, red, np.float64) * e
            out[:, :, j] = np.einsum("ax,rxy,ay->ar", dxm, self.coeffs_real, ym)
        for k in range(s.n2):
            e = self.yexps[:, k]
            red = self.yexps.copy()
            red[:, k] = np.maximum(red[:, k] - 1, 0)
            dym = _powers(W, red, np.float64) * e
            out[:, :, s.n1 + k] = np.einsum("ax,rxy,ay->ar", xm, self.coeffs_real, dym)
        return out

    def gradient_bounds(self, b1: Sequence[tuple[float, float]], b2: Sequence[tuple[float, float]],
                        weights: Sequence[float] | None = None) -> np.ndarray:
        """Upper bounds for ``sup |d(w . F)/dz_j|`` over ``b1 x b2``, per coordinate."""
        s = self.system
        w = np.ones(s.R) if weights is None else np.abs(np.asarray(weights, dtype=float))
        xm = np.array([max(abs(lo), abs(hi)) for lo, hi in b1], dtype=float)
        ym = np.array([max(abs(lo), abs(hi)) for lo, hi in b2], dtype=float)
        out = np.zeros(s.n1 + s.n2)
        for r in range(s.R):
            for a, xe in enumerate(self.xexps):
                for b, ye in enumerate(self.yexps):
                    c = abs(float(self.coeffs_obj[r, a, b])) * w[r] / self.denominator
                    if c == 0:
                        continue
                    for j in range(s.n1):
                        if xe[j]:
                            red = xe.copy()
                            red[j] -= 1
                            out[j] += c * xe[j] * np.prod(xm ** red) * np.prod(ym ** ye)
                    for k in range(s.n2):
                        if ye[k]:
                            red = ye.copy()
                            red[k] -= 1
                            out[s.n1 + k] += c * ye[k] * np.prod(xm ** xe) * np.prod(ym ** red)
        return out
