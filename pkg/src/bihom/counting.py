"""Exhaustive counting of integer solutions in scaled boxes."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .forms import EXACT_FLOAT, EXACT_INT64, FormSystem

Interval = tuple[float, float]


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def integer_range(lo, hi, P, closed: bool = True) -> tuple[int, int]:
    """First and last integer of ``[P lo, P hi]`` (or ``[P lo, P hi)`` if not closed).

    Endpoints are scaled in exact rational arithmetic, so ``P hi`` landing on
    an integer is never lost to rounding.
    """
    a = _frac(lo) * _frac(P)
    b = _frac(hi) * _frac(P)
    first = math.ceil(a)
    last = math.floor(b) if closed else math.ceil(b) - 1
    return first, last


@dataclass(frozen=True)
class BoxPair:
    """Boxes ``B1 x B2`` of side at most 1 and their scalings ``P1``, ``P2``.

    With ``closed=False`` the boxes are read as half-open products
    ``[lo, hi)``; the default reads them as closed.
    """
    b1: tuple[Interval, ...]
    b2: tuple[Interval, ...]
    p1: float
    p2: float
    closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "b1", tuple((lo, hi) for lo, hi in self.b1))
        object.__setattr__(self, "b2", tuple((lo, hi) for lo, hi in self.b2))
        for lo, hi in self.b1 + self.b2:
            if hi - lo > 1:
                raise ValueError(f"box side exceeds 1: [{lo}, {hi}]")
            if hi < lo:
                raise ValueError(f"reversed interval [{lo}, {hi}]")
        if self.p1 <= 0 or self.p2 <= 0:
            raise ValueError("P1 and P2 must be positive")

    @classmethod
    def centered(cls, n1: int, n2: int, p1, p2, closed: bool = True) -> "BoxPair":
        return cls(((-0.5, 0.5),) * n1, ((-0.5, 0.5),) * n2, p1, p2, closed)

    @property
    def b(self) -> float:
        """``log P1 / log P2`` (infinite when ``P2 = 1``)."""
        if self.p2 == 1:
            return math.inf
        return math.log(self.p1) / math.log(self.p2)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in self.b1 + self.b2)

    def ranges(self, which: int) -> list[tuple[int, int]]:
        box, P = (self.b1, self.p1) if which == 1 else (self.b2, self.p2)
        return [integer_range(lo, hi, P, self.closed) for lo, hi in box]

    def npoints(self, which: int) -> int:
        return math.prod(max(0, hi - lo + 1) for lo, hi in self.ranges(which))

    def with_scales(self, p1, p2) -> "BoxPair":
        return BoxPair(self.b1, self.b2, p1, p2, self.closed)


def enumerate_box_points(intervals: Sequence[Interval], P, closed: bool = True) -> Iterator[tuple[int, ...]]:
    """Integer vectors in the scaled box, in lexicographic order."""
    if P < 1:
        raise ValueError("P must be at least 1")
    ranges = [integer_range(lo, hi, P, closed) for lo, hi in intervals]
    return itertools.product(*(range(lo, hi + 1) for lo, hi in ranges))


def grid(ranges: Sequence[tuple[int, int]]) -> np.ndarray:
    """All integer points of a product of ranges as an (N, n) int64 array, lexicographic."""
    axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in ranges]
    if any(len(a) == 0 for a in axes):
        return np.zeros((0, len(ranges)), dtype=np.int64)
    if not axes:
        return np.zeros((1, 0), dtype=np.int64)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _slab_ranges(ranges, n_slabs):
    """Split the first coordinate range into contiguous slabs."""
    lo, hi = ranges[0]
    edges = np.linspace(lo, hi + 1, n_slabs + 1).round().astype(int)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            out.append([(int(a), int(b) - 1)] + list(ranges[1:]))
    return out


# ---------------------------------------------------------------------------
# counting kernels


def _count_generic(system: FormSystem, xr, yr, chunk: int = 1 << 22) -> int:
    comp = system.compiled
    X = grid(xr)
    Y = grid(yr)
    if len(X) == 0 or len(Y) == 0:
        return 0
    xmax = float(np.abs(X).max())
    ymax = float(np.abs(Y).max())
    dtype = comp._dtype_for(comp.bound(xmax, ymax))
    coeffs = comp.coeffs_f if dtype is np.float64 else comp.coeffs_obj.astype(dtype)
    ym = comp.ymon(Y, dtype)
    # per form: B_r = C_r @ ym.T, then each x chunk is one matmul
    B = [coeffs[r] @ ym.T for r in range(system.R)]
    step = max(1, chunk // len(Y))
    total = 0
    for start in range(0, len(X), step):
        xm = comp.xmon(X[start:start + step], dtype)
        mask = (xm @ B[0]) == 0
        for r in range(1, system.R):
            if not mask.any():
                break
            mask &= (xm @ B[r]) == 0
        total += int(np.count_nonzero(mask))
    return total


def _count_fibered(system: FormSystem, xr, yr, chunk: int = 1 << 22) -> int:
    """Count with the system linear in y: solve the first form for the last y-coordinate."""
    comp = system.compiled
    n2 = system.n2
    X = grid(xr)
    if len(X) == 0 or any(hi < lo for lo, hi in yr):
        return 0
    if n2 == 1:
        return _count_generic(system, xr, yr, chunk)
    Yp = grid(yr[:-1])
    lo_last, hi_last = yr[-1]
    xmax = float(np.abs(X).max())
    ymax = max(max(abs(lo), abs(hi)) for lo, hi in yr)
    bound = comp.bound(xmax, ymax)
    dtype = np.float64 if bound < EXACT_FLOAT and comp.coeffs_float_ok else (
        np.int64 if bound < EXACT_INT64 else object)
    step = max(1, chunk // max(1, len(Yp)))
    total = 0
    for start in range(0, len(X), step):
        Xc = X[start:start + step]
        C = comp.linear_coeffs(Xc, dtype=dtype)          # (B, R, n2), exact
        clast = C[:, 0, -1]
        solvable = clast != 0
        # rows where the first form does not involve y_last: count the generic way
        if (~solvable).any():
            Xg = Xc[~solvable]
            total += _count_rows_generic(system, Xg, yr)
        if not solvable.any():
            continue
        Cs = C[solvable]
        cl = Cs[:, 0, -1]
        num = Cs[:, 0, :-1] @ Yp.T.astype(dtype)          # (B, M)
        if dtype is object:
            rem = np.vectorize(lambda a, b: a % b, otypes=[object])(num, cl[:, None])
            ok = rem == 0
        else:
            ok = np.remainder(num, cl[:, None]) == 0
        bi, mi = np.nonzero(ok)
        if len(bi) == 0:
            continue
        if dtype is object:
            ylast = np.array([-(num[b, m] // cl[b]) for b, m in zip(bi, mi)], dtype=object)
        else:
            ylast = -num[bi, mi] / cl[bi] if dtype is np.float64 else -(num[bi, mi] // cl[bi])
        inside = (ylast >= lo_last) & (ylast <= hi_last)
        bi, mi, ylast = bi[inside], mi[inside], ylast[inside]
        keep = np.ones(len(bi), dtype=bool)
        for r in range(1, system.R):
            val = np.einsum("ak,ak->a", Cs[bi, r, :-1], Yp[mi].astype(dtype)) + Cs[bi, r, -1] * ylast
            keep &= val == 0
        total += int(np.count_nonzero(keep))
    return total


def _count_rows_generic(system: FormSystem, Xrows: np.ndarray, yr) -> int:
    if len(Xrows) == 0:
        return 0
    Y = grid(yr)
    vals = system.compiled.values(Xrows, Y)
    return int(np.count_nonzero((vals == 0).all(axis=0)))


def _count_slab(args) -> int:
    system, xr, yr, strategy = args
    if strategy == "fibered":
        return _count_fibered(system, xr, yr)
    return _count_generic(system, xr, yr)


def count_solutions(system: FormSystem, boxes: BoxPair, strategy: str = "generic",
                    workers: int = 1) -> int:
    """``N(P1, P2)``: number of integer pairs in ``P1 B1 x P2 B2`` solving every form.

    ``strategy='fibered'`` requires a system linear in one block; if the
    linear block is x, the roles of the blocks are exchanged first.
    ``workers > 1`` splits the outer coordinate into slabs run in processes.
    """
    if len(boxes.b1) != system.n1 or len(boxes.b2) != system.n2:
        raise ValueError(f"dimension mismatch: system has n1={system.n1}, n2={system.n2}, "
                         f"boxes have {len(boxes.b1)} and {len(boxes.b2)}")
    xr, yr = boxes.ranges(1), boxes.ranges(2)
    if any(hi < lo for lo, hi in xr + yr):
        return 0
    if system.has_zero_form and system.R == 1:
        return boxes.npoints(1) * boxes.npoints(2)
    if strategy == "auto":
        strategy = "fibered" if system.linear_block() else "generic"
    if strategy == "fibered":
        block = system.linear_block()
        if block is None:
            raise ValueError("fibered strategy needs a system linear in x or in y")
        if block == "x":
            system, xr, yr = system.swapped(), yr, xr
    elif strategy != "generic":
        raise ValueError(f"unknown strategy {strategy!r}")
    if workers <= 1 or xr[0][1] - xr[0][0] < 2 * workers:
        return _count_slab((system, xr, yr, strategy))
    jobs = [(system, s, yr, strategy) for s in _slab_ranges(xr, 4 * workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_count_slab, jobs))


def count_solutions_bruteforce(system: FormSystem, boxes: BoxPair) -> int:
    """Reference counter: exact rational evaluation at every pair (tiny boxes only)."""
    from .forms import eval_form
    xs = list(enumerate_box_points(boxes.b1, boxes.p1, boxes.closed))
    ys = list(enumerate_box_points(boxes.b2, boxes.p2, boxes.closed))
    return sum(
        all(eval_form(system, i, x, y) == 0 for i in range(system.R)) for x in xs for y in ys
    )
