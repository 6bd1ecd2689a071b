"""Circle-method parameters and the major-arc families.

Two arc shapes are kept.  PLAIN arcs around ``a/q`` are
``2 |q alpha_i - a_i| <= P^-1 P^{R (dt+1) theta}`` with ``q <= P^{R (dt+1) theta}``;
PRIME arcs are ``|q alpha_i - a_i| <= q P^{-1 + R (dt+1) theta}`` over the same
``q`` range.  Here ``dt = d1 + d2 - 2`` and ``P = P1^d1 P2^d2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

SLACK = 1.1


class InfeasibleParameters(ValueError):
    pass


@dataclass(frozen=True)
class CircleParams:
    R: int
    d1: int
    d2: int
    b: float
    K: float
    theta0: float
    delta: float
    P: float | None = None

    @property
    def dtilde(self) -> int:
        return self.d1 + self.d2 - 2

    @property
    def eta(self) -> float:
        return self.R * (self.dtilde + 1) * self.theta0

    @property
    def weight(self) -> float:
        """``b d1 + d2``."""
        return self.b * self.d1 + self.d2

    def exponent(self, theta: float | None = None) -> float:
        """``R (dt + 1) theta`` (``eta`` at ``theta0``)."""
        theta = self.theta0 if theta is None else theta
        return self.R * (self.dtilde + 1) * theta

    def q_max(self, theta: float | None = None) -> int:
        self._need_P()
        return int(math.floor(self.P ** self.exponent(theta) * (1 + 1e-12)))

    def arc_halfwidth(self, theta: float | None = None) -> float:
        """``P^{-1 + R (dt+1) theta}``: half-width of a PRIME arc in each coordinate."""
        self._need_P()
        return self.P ** (-1 + self.exponent(theta))

    def measure_bound(self) -> float:
        self._need_P()
        return self.P ** (-self.R + self.eta * (2 * self.R + 1))

    def at(self, P1, P2) -> "CircleParams":
        return replace(self, P=float(P1) ** self.d1 * float(P2) ** self.d2)

    def _need_P(self):
        if self.P is None:
            raise ValueError("CircleParams has no P; use .at(P1, P2)")

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(dtilde=self.dtilde, eta=self.eta)
        if self.P is not None:
            out.update(q_max=self.q_max(), arc_halfwidth=self.arc_halfwidth(),
                       measure_bound=self.measure_bound())
        return out


def feasibility_of_K(R: int, d1: int, d2: int, b: float, K: float) -> tuple[bool, str]:
    dt = d1 + d2 - 2
    first, second = R * (R + 1) * (dt + 1), R * (b * d1 + d2)
    if K > first and K > second:
        return True, ""
    which = first if first >= second else second
    return False, f"K too small: K={K} must exceed max(R(R+1)(dt+1), R(b d1 + d2)) = {which}"


def check_conditions(p: CircleParams, slack: float = 1.0) -> dict[str, bool]:
    """The three constraints on ``(theta0, delta)``, right-hand sides inflated by ``slack``."""
    R, dt, w = p.R, p.dtilde, p.weight
    return {
        "minor_arc_saving": p.K - R * (R + 1) * (dt + 1) > slack * 2 * p.delta / p.theta0,
        "k_budget": p.K > slack * (2 * p.delta + R) * w,
        "arc_size": 1 > slack * (w * R * (dt + 1) * p.theta0 * (2 * R + 3) + p.delta * w),
    }


def choose_parameters(R: int, d1: int, d2: int, b: float, K: float, P: float | None = None,
                      theta_grid: Sequence[float] | None = None,
                      delta_grid: Sequence[float] | None = None) -> CircleParams:
    """Pick ``(theta0, delta)`` maximising ``delta`` on a log grid with 10% slack.

    Ties in ``delta`` go to the smallest ``theta0``.  The chosen pair is
    re-checked against the exact (slack-free) conditions.
    """
    ok, msg = feasibility_of_K(R, d1, d2, b, K)
    if not ok:
        raise InfeasibleParameters(msg)
    thetas = np.logspace(-6, 0, 1201) if theta_grid is None else np.asarray(theta_grid)
    deltas = np.logspace(-8, 0, 1601) if delta_grid is None else np.asarray(delta_grid)
    dt, w = d1 + d2 - 2, b * d1 + d2
    c = R * (R + 1) * (dt + 1)
    best = None
    for th in thetas:
        cap = min(
            (K - c) * th / (2 * SLACK),
            (K / (SLACK * w) - R) / 2,
            (1 / SLACK - w * R * (dt + 1) * th * (2 * R + 3)) / w,
        )
        admissible = deltas[deltas < cap * (1 - 1e-12)]
        if len(admissible) == 0:
            continue
        d = float(admissible.max())
        if best is None or d > best[1]:
            best = (float(th), d)
    if best is None:
        raise InfeasibleParameters("no grid point satisfies the (theta0, delta) constraints with 10% slack")
    params = CircleParams(R, d1, d2, float(b), float(K), best[0], best[1], P)
    failed = [k for k, v in check_conditions(params).items() if not v]
    if failed:
        raise AssertionError(f"post-check failed for {failed}")
    return params


# ---------------------------------------------------------------------------
# arcs


@dataclass(frozen=True)
class RationalCenter:
    q: int
    a: tuple[int, ...]
    beta: tuple[float, ...]       # alpha - a/q with a/q the nearest representative

    def __post_init__(self):
        if math.gcd(self.q, *self.a) != 1:
            raise ValueError("gcd(q, a_1, ..., a_R) must be 1")

    def as_dict(self) -> dict:
        return {"q": self.q, "a": list(self.a), "beta": list(self.beta)}


def _nearest(alpha, q: int):
    """For each coordinate: (a mod q, |q alpha - a|, alpha - a/q) with a the nearest integer."""
    out = []
    for al in alpha:
        if isinstance(al, Fraction):
            t = al * q
            a = math.floor(t + Fraction(1, 2))
            out.append((a % q, abs(t - a), al - Fraction(a, q)))
        else:
            t = float(al) * q
            a = math.floor(t + 0.5)
            out.append((a % q, abs(t - a), float(al) - a / q))
    return out


def find_center(alpha: Sequence, q_max: int, accept) -> RationalCenter | None:
    """Smallest ``q <= q_max`` whose nearest numerators satisfy ``accept(q, err)`` in every
    coordinate (``err = |q alpha_i - a_i|``) with ``gcd(q, a) = 1``."""
    alpha = [a if isinstance(a, Fraction) else (Fraction(a) if isinstance(a, int) else float(a))
             for a in alpha]
    for q in range(1, q_max + 1):
        near = _nearest(alpha, q)
        if all(accept(q, err) for _, err, _ in near):
            a = tuple(int(x) for x, _, _ in near)
            if math.gcd(q, *a) == 1:
                return RationalCenter(q, a, tuple(float(be) for _, _, be in near))
    return None


def locate_arc(alpha: Sequence, params: CircleParams, variant: str = "PRIME",
               theta: float | None = None) -> RationalCenter | None:
    """Arc of ``alpha`` (mod 1) in the PLAIN or PRIME family at ``theta`` (default theta0)."""
    variant = variant.upper()
    if len(alpha) != params.R:
        raise ValueError(f"alpha must have length R={params.R}")
    params._need_P()
    q_max = params.q_max(theta)
    expo = params.exponent(theta)
    if variant == "PLAIN":
        tol = params.P ** (-1 + expo) / 2
        return find_center(alpha, q_max, lambda q, err: err <= tol)
    if variant == "PRIME":
        width = params.P ** (-1 + expo)
        return find_center(alpha, q_max, lambda q, err: err <= q * width)
    raise ValueError(f"unknown variant {variant!r}")


def arc_centers(params: CircleParams, theta: float | None = None):
    """All labels ``(q, a)`` with ``q <= q_max`` and ``gcd(q, a) = 1``."""
    from .expsum import coprime_residues
    for q in range(1, params.q_max(theta) + 1):
        for a in coprime_residues(q, params.R):
            yield q, a


def _circle_gap(x: Fraction, y: Fraction) -> Fraction:
    d = abs(x - y) % 1
    return min(d, 1 - d)


@dataclass(frozen=True)
class DisjointnessResult:
    disjoint: bool
    arcs: int
    witness: tuple | None = None       # ((q, a), (q~, a~)) colliding pair
    min_gap: float | None = None       # smallest centre separation over max coordinate

    def as_dict(self) -> dict:
        return {"disjoint": self.disjoint, "arcs": self.arcs,
                "witness": [[q, list(a)] for q, a in self.witness] if self.witness else None,
                "min_gap": self.min_gap}


def check_disjointness(params: CircleParams, theta: float | None = None,
                       halfwidth: float | None = None) -> DisjointnessResult:
    """Pairwise disjointness of the PRIME arcs on the torus.

    Centres are exact rationals; two closed arcs are disjoint iff some
    coordinate separation exceeds twice the half-width.  The half-width is
    taken as an exact rational slightly above its float value, so a reported
    disjointness is never an artefact of rounding.
    """
    w = params.arc_halfwidth(theta) if halfwidth is None else halfwidth
    W = Fraction(w) * (1 + Fraction(1, 10**12))
    centers = [(q, a, tuple(Fraction(ai, q) for ai in a)) for q, a in arc_centers(params, theta)]
    n = len(centers)
    min_gap = None
    if params.R == 1:
        order = sorted(centers, key=lambda c: c[2])
        pairs = [(order[i], order[(i + 1) % n]) for i in range(n)] if n > 1 else []
    else:
        pairs = [(centers[i], centers[j]) for i in range(n) for j in range(i + 1, n)]
    for u, v in pairs:
        sep = max(_circle_gap(x, y) for x, y in zip(u[2], v[2]))
        min_gap = sep if min_gap is None else min(min_gap, sep)
        if sep <= 2 * W:
            return DisjointnessResult(False, n, ((u[0], u[1]), (v[0], v[1])), float(min_gap))
    return DisjointnessResult(True, n, None, float(min_gap) if min_gap is not None else None)


def disjointness_threshold(params: CircleParams) -> float:
    """``P`` above which ``1/(q q~) > 2 P^{-1+eta}`` for all ``q, q~ <= P^eta``,
    i.e. ``P^{1 - 3 eta} > 2``; infinite when ``3 eta >= 1``."""
    if 3 * params.eta >= 1:
        return math.inf
    return 2 ** (1 / (1 - 3 * params.eta))


@dataclass(frozen=True)
class MeasureResult:
    measure: float
    arcs: int
    bound: float
    C: float
    disjoint: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _union_length(intervals: list[tuple[float, float]]) -> float:
    total, end = 0.0, -math.inf
    for lo, hi in sorted(intervals):
        if hi <= end:
            continue
        total += hi - max(lo, end)
        end = hi
    return total


def arcs_measure(params: CircleParams, theta: float | None = None) -> MeasureResult:
    """Total measure of the PRIME arcs against ``P^{-R + eta (2R + 1)}``.

    Disjoint arcs contribute ``(2 P^{-1+eta})^R`` each; overlapping families
    (R = 1 only) are measured as a union of intervals on the circle.
    """
    w = params.arc_halfwidth(theta)
    dis = check_disjointness(params, theta)
    if dis.disjoint:
        measure = dis.arcs * (2 * w) ** params.R
    elif params.R == 1:
        ivals = []
        for q, a in arc_centers(params, theta):
            c = a[0] / q
            for shift in (-1.0, 0.0, 1.0):
                lo, hi = max(c + shift - w, 0.0), min(c + shift + w, 1.0)
                if hi > lo:
                    ivals.append((lo, hi))
        measure = _union_length(ivals)
    else:
        raise NotImplementedError("overlapping arcs with R > 1 are not measured")
    bound = params.measure_bound()
    return MeasureResult(measure, dis.arcs, bound, measure / bound, dis.disjoint)


def containment_check(params: CircleParams, theta: float | None = None, samples: int = 200,
                      seed: int = 0) -> bool:
    """Empirically test PLAIN(theta) inside PRIME(theta): sample points of PLAIN arcs
    and confirm each is located on a PRIME arc."""
    rng = np.random.default_rng(seed)
    tol = params.P ** (-1 + params.exponent(theta)) / 2
    centers = list(arc_centers(params, theta))
    for k in range(samples):
        q, a = centers[k % len(centers)]
        beta = rng.uniform(-1, 1, params.R) * tol / q
        alpha = [(ai / q + be) % 1.0 for ai, be in zip(a, beta)]
        if locate_arc(alpha, params, "PLAIN", theta) is None:
            continue
        if locate_arc(alpha, params, "PRIME", theta) is None:
            return False
    return True
