"""The archimedean side: oscillatory integrals, the singular integral and hat-weighted volumes.

Boxes here are the unscaled ``B1``, ``B2`` given as lists of ``(lo, hi)``.

Two routes to the singular integral are provided:

* ``singular_integral_partial`` integrates ``I(beta)`` over ``|beta| <= Phi``;
* ``schmidt_J_T`` integrates ``prod_i psi_T(F_i)`` over the boxes, where
  ``psi_T(z) = T psi(T z)`` and ``psi(z) = max(0, 1 - |z|)``, and
  ``schmidt_J`` extrapolates ``T -> infinity``.

When the system is linear in one block the integral over that block is done
in closed form: a product of ``sinc`` factors for ``I`` and a box-spline
vertex formula for the hat weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .forms import FormSystem

Box = Sequence[tuple[float, float]]


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre ``order`` per axis, ``level`` extra dyadic subdivisions,
    absolute ``tolerance`` and a cap on integrand evaluations."""
    order: int = 8
    level: int = 0
    tolerance: float = 1e-6
    budget: int = 5 * 10**8

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("quadrature order must be at least 2")


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    converged: bool
    evaluations: int

    def as_dict(self) -> dict:
        v = self.value
        out = {"error_estimate": self.error, "converged": self.converged,
               "evaluations": self.evaluations}
        if isinstance(v, complex):
            out.update(value=v.real, imag=v.imag)
        else:
            out.update(value=v)
        return out


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


def _tensor_rule(lo: np.ndarray, hi: np.ndarray, cells: Sequence[int], order: int):
    """Composite tensor Gauss rule: uniform ``cells[j]`` panels per axis."""
    x, w = gauss_legendre(order)
    axes_x, axes_w = [], []
    for a, b, m in zip(lo, hi, cells):
        edges = np.linspace(a, b, m + 1)
        width = np.diff(edges)
        axes_x.append((edges[:-1, None] + width[:, None] * x[None, :]).ravel())
        axes_w.append((width[:, None] * w[None, :]).ravel())
    return axes_x, axes_w


def _tensor_apply(f: Callable[[np.ndarray], np.ndarray], axes_x, axes_w,
                  chunk: int = 1 << 18) -> complex:
    """``sum_nodes w f`` over a tensor grid, chunked along the first axis."""
    if not axes_x:
        return complex(np.sum(f(np.zeros((1, 0)))))
    rest_x = np.meshgrid(*axes_x[1:], indexing="ij") if len(axes_x) > 1 else []
    rest_w = np.ones(1)
    for w in axes_w[1:]:
        rest_w = np.multiply.outer(rest_w, w).ravel() if rest_w.size > 1 else w.copy()
    rest_pts = np.stack([m.ravel() for m in rest_x], axis=1) if rest_x else np.zeros((1, 0))
    total = 0j
    per = max(1, chunk // len(rest_pts))
    x0, w0 = axes_x[0], axes_w[0]
    for s in range(0, len(x0), per):
        xs, ws = x0[s:s + per], w0[s:s + per]
        pts = np.concatenate([np.repeat(xs, len(rest_pts))[:, None],
                              np.tile(rest_pts, (len(xs), 1))], axis=1)
        vals = f(pts).reshape(len(xs), len(rest_pts))
        total += np.sum((vals @ rest_w) * ws)
    return total


def _n_nodes(cells, order) -> int:
    return int(np.prod([m * order for m in cells])) if len(cells) else 1


# ---------------------------------------------------------------------------
# oscillatory integral I(u)


def _oriented(system: FormSystem, b1: Box, b2: Box):
    """Put a linear block (if any) in the y position."""
    block = system.linear_block()
    if block == "x":
        return system.swapped(), list(b2), list(b1), True
    return system, list(b1), list(b2), block == "y"


def box_exponential(beta: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """``int_lo^hi e(beta w) dw``."""
    length = hi - lo
    mid = (hi + lo) / 2
    return length * np.exp(2j * np.pi * beta * mid) * np.sinc(beta * length)


def _phase_cells(system, u, b1, b2, dims: int, level: int) -> list[int]:
    grads = system.compiled.gradient_bounds(b1, b2, weights=u)
    widths = [hi - lo for lo, hi in list(b1) + list(b2)][:dims]
    return [max(1, math.ceil(g * w)) * 2**level for g, w in zip(grads[:dims], widths)]


def oscillatory_I(system: FormSystem, u: Sequence[float], b1: Box, b2: Box,
                  spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    """``I(u) = int_{B1 x B2} e(sum_i u_i F_i(v; w)) dv dw``.

    Cells are sized so that the phase varies by at most one period across a
    cell; the error estimate compares this rule with one on half as many cells.
    """
    u = np.asarray(u, dtype=float)
    if len(u) != system.R:
        raise ValueError(f"u must have length R={system.R}")
    sys_, c1, c2, linear = _oriented(system, b1, b2)
    comp = sys_.compiled
    if linear:
        dims = sys_.n1
        lo = np.array([a for a, _ in c1])
        hi = np.array([b for _, b in c1])

        def f(V):
            C = comp.linear_coeffs_float(V)                 # (N, R, n2)
            beta = np.einsum("r,nrk->nk", u, C)
            out = np.ones(len(V), dtype=complex)
            for k, (a, b) in enumerate(c2):
                out *= box_exponential(beta[:, k], a, b)
            return out
    else:
        dims = sys_.n1 + sys_.n2
        lo = np.array([a for a, _ in c1 + c2])
        hi = np.array([b for _, b in c1 + c2])
        n1 = sys_.n1

        def f(Z):
            vals = comp.values_float(Z[:, :n1], Z[:, n1:])
            return np.exp(2j * np.pi * (u @ vals))

    fine = _phase_cells(sys_, u, c1, c2, dims, spec.level)
    coarse = [max(1, math.ceil(m / 2)) for m in fine]
    evals = _n_nodes(fine, spec.order) + _n_nodes(coarse, spec.order)
    if evals > spec.budget:
        # fall back to the largest affordable uniform refinement
        scale = (spec.budget / evals) ** (1 / max(1, dims))
        fine = [max(1, int(m * scale)) for m in fine]
        coarse = [max(1, math.ceil(m / 2)) for m in fine]
        evals = _n_nodes(fine, spec.order) + _n_nodes(coarse, spec.order)
        over = True
    else:
        over = False
    val = _tensor_apply(f, *_tensor_rule(lo, hi, fine, spec.order))
    val_c = _tensor_apply(f, *_tensor_rule(lo, hi, coarse, spec.order))
    err = abs(val - val_c)
    return QuadResult(complex(val), float(err), (err <= spec.tolerance) and not over, evals)


def qmc_I(system: FormSystem, u: Sequence[float], b1: Box, b2: Box, log2_points: int = 20,
          replicates: int = 16, seed: int = 0) -> tuple[complex, float]:
    """Randomised quasi-Monte Carlo estimate of ``I(u)`` and its standard error.

    Independent of the quadrature path: it evaluates the full integrand at
    scrambled Sobol points over ``B1 x B2``.
    """
    u = np.asarray(u, dtype=float)
    n1 = system.n1
    box = list(b1) + list(b2)
    lo = np.array([a for a, _ in box])
    hi = np.array([b for _, b in box])
    vol = float(np.prod(hi - lo))
    m = log2_points - int(math.log2(replicates))
    means = []
    for r in range(replicates):
        pts = qmc.Sobol(d=len(box), scramble=True, seed=seed + r).random_base2(m)
        Z = lo + pts * (hi - lo)
        vals = system.compiled.values_float(Z[:, :n1], Z[:, n1:])
        means.append(np.mean(np.exp(2j * np.pi * (u @ vals))) * vol)
    means = np.array(means)
    se = float(np.std(means, ddof=1) / math.sqrt(replicates))
    return complex(means.mean()), se


# ---------------------------------------------------------------------------
# truncated singular integral J(Phi)


@dataclass(frozen=True)
class SingularIntegral:
    phi: float
    value: float
    imag: float
    error: float
    converged: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _panel_edges(phi: float) -> np.ndarray:
    n = max(1, math.ceil(2 * phi))
    return np.linspace(-phi, phi, n + 1)


def singular_integral_profile(system: FormSystem, phis: Sequence[float], b1: Box, b2: Box,
                              spec: QuadratureSpec = QuadratureSpec(),
                              beta_order: int = 8) -> dict[float, SingularIntegral]:
    """``J(Phi)`` for several ``Phi`` from one set of ``I`` evaluations.

    Panels of width at most 1 tile ``[-Phi_max, Phi_max]^R``; each ``J(Phi)``
    collects the panels inside its box, so all ``Phi`` must lie on the panel
    edges (integers or half-integers do).  Gauss rules of order
    ``beta_order`` and ``beta_order - 2`` on every panel give the error
    estimate, to which the propagated ``I`` errors are added.
    """
    R = system.R
    if R > 2:
        raise ValueError("outer quadrature supports R <= 2")
    phis = sorted(float(p) for p in phis)
    edges = _panel_edges(phis[-1])
    xf, wf = gauss_legendre(beta_order)
    xc, wc = gauss_legendre(beta_order - 2)
    cache: dict[tuple, QuadResult] = {}

    def I_at(beta: tuple) -> QuadResult:
        if beta not in cache:
            cache[beta] = oscillatory_I(system, beta, b1, b2, spec)
        return cache[beta]

    panels = list(zip(edges[:-1], edges[1:]))
    sums = {}
    for cell in np.ndindex(*(len(panels),) * R):
        bounds = [panels[i] for i in cell]
        fine = coarse = 0j
        ierr = 0.0
        conv = True
        for nodes, weights, is_fine in ((xf, wf, True), (xc, wc, False)):
            for idx in np.ndindex(*(len(nodes),) * R):
                beta = tuple(float(a + (b - a) * nodes[k]) for k, (a, b) in zip(idx, bounds))
                wgt = float(np.prod([(b - a) * weights[k] for k, (a, b) in zip(idx, bounds)]))
                res = I_at(beta)
                if is_fine:
                    fine += wgt * res.value
                    ierr += wgt * res.error
                    conv &= res.converged
                else:
                    coarse += wgt * res.value
        outer = max(max(abs(a), abs(b)) for a, b in bounds)
        sums[cell] = (outer, fine, abs(fine - coarse) + ierr, conv)
    out = {}
    for phi in phis:
        total, err, conv = 0j, 0.0, True
        for outer, val, e, c in sums.values():
            if outer <= phi + 1e-12:
                total += val
                err += e
                conv &= c
        out[phi] = SingularIntegral(phi, total.real, total.imag, err,
                                    conv and err <= max(spec.tolerance * 100, 1e-6) * (2 * phi) ** R)
    return out


def singular_integral_partial(system: FormSystem, phi: float, b1: Box, b2: Box,
                              spec: QuadratureSpec = QuadratureSpec()) -> SingularIntegral:
    """``J(Phi) = int_{|beta| <= Phi} I(beta) d beta`` (sup norm over the R coordinates)."""
    return singular_integral_profile(system, [phi], b1, b2, spec)[float(phi)]


def fit_decay_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """``p`` in ``|y| ~ x^-p`` by least squares on logs."""
    slope = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.abs(np.asarray(ys, float))), 1)[0]
    return float(-slope)


def truncation_exponent(profile: dict[float, SingularIntegral]) -> float:
    """Fitted ``p`` in ``J(2 Phi) - J(Phi) ~ Phi^-p`` over consecutive profile entries."""
    phis = sorted(profile)
    diffs = [profile[b].value - profile[a].value for a, b in zip(phis[:-1], phis[1:])]
    return fit_decay_exponent(phis[:-1], diffs)


# ---------------------------------------------------------------------------
# hat-weighted volume J~_T


def psi(z):
    """The unit hat ``max(0, 1 - |z|)``."""
    return np.maximum(0.0, 1.0 - np.abs(z))


def psi_T(z, T: float):
    return T * psi(T * np.asarray(z, dtype=float))


def psi_T_antiderivative(z: np.ndarray, T: float, m: int) -> np.ndarray:
    """The ``m``-fold antiderivative of ``psi_T`` vanishing to the left of ``-1/T``.

    ``T^2 [(z+h)_+^(m+1) - 2 z_+^(m+1) + (z-h)_+^(m+1)] / (m+1)!`` with
    ``h = 1/T``; for ``z >= h`` the equivalent expansion
    ``2/(m+1)! sum_{j even >= 2} C(m+1, j) z^(m+1-j) h^(j-2)`` avoids cancellation.
    """
    z = np.asarray(z, dtype=float)
    h = 1.0 / T
    k = m + 1
    fact = math.factorial(k)
    out = np.zeros_like(z)
    mid = (z > -h) & (z < h)
    zm = z[mid]
    out[mid] = T * T * (np.maximum(zm + h, 0) ** k - 2 * np.maximum(zm, 0) ** k) / fact
    right = z >= h
    zr = z[right]
    acc = np.zeros_like(zr)
    for j in range(2, k + 1, 2):
        acc += math.comb(k, j) * zr ** (k - j) * h ** (j - 2)
    out[right] = 2 * acc / fact
    return out


def _hat_box_integral(c: np.ndarray, lo: np.ndarray, hi: np.ndarray, T: float,
                      small_order: int = 4) -> np.ndarray:
    """``int_box psi_T(c . w) dw`` for each row of ``c`` (N, m).

    Coordinates with ``|c_k| (hi_k - lo_k) >= h / 8`` (and always the largest)
    go through the vertex formula for the m-fold antiderivative; the others
    are integrated by Gauss-Legendre as a shift.
    """
    N, m = c.shape
    h = 1.0 / T
    length = hi - lo
    spread = np.abs(c) * length
    kstar = np.argmax(spread, axis=1)
    big = spread >= h / 8
    big[np.arange(N), kstar] = True
    out = np.zeros(N)
    tiny = spread[np.arange(N), kstar] < 1e-12
    if tiny.any():
        out[tiny] = psi_T(c[tiny] @ ((lo + hi) / 2), T) * np.prod(length)
    gx, gw = gauss_legendre(small_order)
    patterns = np.unique(big[~tiny], axis=0) if (~tiny).any() else []
    for pat in patterns:
        rows = np.nonzero((big == pat).all(axis=1) & ~tiny)[0]
        B = np.nonzero(pat)[0]
        S = np.nonzero(~pat)[0]
        cB = c[np.ix_(rows, B)]
        # shifts from the small coordinates
        if len(S):
            grids = np.meshgrid(*[lo[k] + length[k] * gx for k in S], indexing="ij")
            wgrid = np.ones(1)
            for k in S:
                wgrid = np.multiply.outer(wgrid, length[k] * gw).ravel()
            pts = np.stack([g.ravel() for g in grids], axis=1)        # (G, |S|)
            shift = c[np.ix_(rows, S)] @ pts.T                          # (n, G)
        else:
            wgrid = np.ones(1)
            shift = np.zeros((len(rows), 1))
        total = np.zeros_like(shift)
        for eps in np.ndindex(*(2,) * len(B)):
            eps = np.array(eps)
            corner = np.where(eps == 1, hi[B], lo[B])
            sign = (-1) ** (len(B) - eps.sum())
            total += sign * psi_T_antiderivative(shift + (cB @ corner)[:, None], T, len(B))
        vals = total / np.prod(cB, axis=1)[:, None]
        out[rows] = vals @ wgrid
    return out


def adaptive_cubature(f: Callable[[np.ndarray], np.ndarray], lo: Sequence[float],
                      hi: Sequence[float], order: int = 4, tol: float = 1e-6,
                      budget: int = 5 * 10**7, initial: int = 4) -> QuadResult:
    """Deterministic level-by-level adaptive tensor Gauss cubature of a real ``f``.

    Each cell's rule is compared with the sum over its ``2^d`` children; a
    cell is accepted once the difference is below its volume share of
    ``tol``, otherwise its children go to the next level.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    d = len(lo)
    x, w = gauss_legendre(order)
    node_grid = np.stack([g.ravel() for g in np.meshgrid(*([x] * d), indexing="ij")], axis=1)
    w_grid = np.ones(1)
    for _ in range(d):
        w_grid = np.multiply.outer(w_grid, w).ravel()
    total_vol = float(np.prod(hi - lo))
    children = np.array(list(np.ndindex(*(2,) * d)), dtype=float)

    def rule(cell_lo, cell_w):
        pts = cell_lo[:, None, :] + cell_w[:, None, :] * node_grid[None, :, :]
        vals = f(pts.reshape(-1, d)).reshape(len(cell_lo), -1)
        return (vals @ w_grid) * np.prod(cell_w, axis=1)

    axes = [np.linspace(a, b, initial + 1)[:-1] for a, b in zip(lo, hi)]
    cell_lo = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    cell_w = np.tile((hi - lo) / initial, (len(cell_lo), 1))
    est = rule(cell_lo, cell_w)
    evals = len(cell_lo) * len(w_grid)
    accepted = 0.0
    err_total = 0.0
    converged = True
    while len(cell_lo):
        k_lo = (cell_lo[:, None, :] + children[None, :, :] * (cell_w[:, None, :] / 2)).reshape(-1, d)
        k_w = np.repeat(cell_w / 2, len(children), axis=0)
        if evals + len(k_lo) * len(w_grid) > budget:
            accepted += est.sum()
            err_total += float(np.abs(est).sum())
            converged = False
            break
        k_est = rule(k_lo, k_w)
        evals += len(k_lo) * len(w_grid)
        k_sum = k_est.reshape(len(cell_lo), len(children)).sum(axis=1)
        diff = np.abs(k_sum - est)
        ok = diff <= tol * np.prod(cell_w, axis=1) / total_vol
        accepted += k_sum[ok].sum()
        err_total += diff[ok].sum()
        refine = np.repeat(~ok, len(children))
        cell_lo, cell_w, est = k_lo[refine], k_w[refine], k_est[refine]
    return QuadResult(float(accepted), float(err_total), converged, evals)


@dataclass(frozen=True)
class SchmidtResult:
    T: float
    value: float
    error: float
    converged: bool
    degenerate: bool = False
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def schmidt_J_T(system: FormSystem, T: float, b1: Box, b2: Box, tol: float = 1e-5,
                budget: int = 2 * 10**8, order: int = 4) -> SchmidtResult:
    """``J~_T = int_{B1 x B2} prod_i psi_T(F_i(v; w)) dv dw``."""
    if T <= 0:
        raise ValueError("T must be positive")
    if system.has_zero_form:
        vol = math.prod(b - a for a, b in list(b1) + list(b2))
        value = T ** system.R * vol if all(f.is_zero for f in system.forms) else math.nan
        return SchmidtResult(T, value, 0.0, True, True,
                             "degenerate: dim V(0) hypothesis violated (zero form)")
    sys_, c1, c2, linear = _oriented(system, b1, b2)
    comp = sys_.compiled
    if linear and sys_.R == 1:
        lo2 = np.array([a for a, _ in c2])
        hi2 = np.array([b for _, b in c2])

        def f(V):
            c = comp.linear_coeffs_float(V)[:, 0, :]
            return _hat_box_integral(c, lo2, hi2, T)

        box = c1
    else:
        n1 = sys_.n1

        def f(Z):
            vals = comp.values_float(Z[:, :n1], Z[:, n1:])
            return np.prod(psi_T(vals, T), axis=0)

        box = c1 + c2
    res = adaptive_cubature(f, [a for a, _ in box], [b for _, b in box], order=order,
                            tol=tol, budget=budget)
    return SchmidtResult(T, float(res.value), res.error, res.converged)


@dataclass(frozen=True)
class Extrapolation:
    Ts: tuple[float, ...]
    values: tuple[float, ...]
    extrapolated: float
    order: float
    error: float
    converged: bool
    degenerate: bool
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def richardson(Ts: Sequence[float], values: Sequence[float], order: float | None = None,
               clamp: tuple[float, float] = (1.0, 4.0)) -> tuple[float, float]:
    """Extrapolate three values at ``T, 2T, 4T`` assuming error ``~ T^-p``.

    With ``order=None`` the order ``p`` is fitted from the ratio of successive
    differences and clamped to ``clamp``.  Returns ``(limit, p)``.
    """
    v1, v2, v4 = values
    if order is None:
        d1, d2 = v2 - v1, v4 - v2
        if d2 == 0 or d1 / d2 <= 0:
            order = clamp[1]
        else:
            order = math.log2(d1 / d2)
        order = min(max(order, clamp[0]), clamp[1])
    return v4 + (v4 - v2) / (2 ** order - 1), order


def schmidt_J(system: FormSystem, T: float, b1: Box, b2: Box, tol: float = 1e-5,
              budget: int = 2 * 10**8) -> Extrapolation:
    """``J~`` extrapolated from ``J~_T`` at ``T/4, T/2, T``.

    The error estimate is the gap between the fitted-order and the
    second-order extrapolations plus the quadrature errors.  A zero form, or
    values growing with ``T``, is flagged degenerate.
    """
    Ts = (T / 4, T / 2, T)
    runs = [schmidt_J_T(system, t, b1, b2, tol, budget) for t in Ts]
    vals = tuple(r.value for r in runs)
    if any(r.degenerate for r in runs):
        return Extrapolation(Ts, vals, math.nan, math.nan, math.inf, False, True, runs[0].note)
    d1, d2 = vals[1] - vals[0], vals[2] - vals[1]
    if d1 != 0 and abs(d2 / d1) >= 1:
        return Extrapolation(Ts, vals, math.nan, math.nan, math.inf, False, True,
                             "degenerate: values do not settle as T grows")
    limit, p = richardson(Ts, vals)
    limit2, _ = richardson(Ts, vals, order=2.0)
    err = abs(limit - limit2) + sum(r.error for r in runs)
    return Extrapolation(Ts, vals, limit, p, err, all(r.converged for r in runs), False)


# ---------------------------------------------------------------------------
# real nonsingular zeros


@dataclass(frozen=True)
class RealWitness:
    v: tuple[float, ...]
    w: tuple[float, ...]
    residual: float
    singular_values: tuple[float, ...]

    def as_dict(self) -> dict:
        return asdict(self)


def _validate_real(system, z, n1, lo, hi, res_tol, sv_tol):
    if not np.all((z > lo) & (z < hi)):
        return None
    comp = system.compiled
    vals = comp.values_float(z[None, :n1], z[None, n1:])[:, 0]
    res = float(np.max(np.abs(vals)))
    if res >= res_tol:
        return None
    J = comp.jacobian_float(z[None, :n1], z[None, n1:])[0]
    sv = np.linalg.svd(J, compute_uv=False)
    if len(sv) < system.R or sv.min() <= sv_tol:
        return None
    return RealWitness(tuple(map(float, z[:n1])), tuple(map(float, z[n1:])), res,
                       tuple(map(float, sv)))


def find_nonsingular_real_zero(system: FormSystem, b1: Box, b2: Box, starts: int = 256,
                               seed: int = 0, iterations: int = 60,
                               res_tol: float = 1e-10, sv_tol: float = 1e-6) -> RealWitness | None:
    """Damped Newton on random R-dimensional affine slices from Sobol starts.

    A witness lies strictly inside the boxes, has ``max |F_i| < res_tol`` and
    a Jacobian whose smallest singular value exceeds ``sv_tol``.
    """
    n1, n = system.n1, system.n1 + system.n2
    R = system.R
    box = list(b1) + list(b2)
    lo = np.array([a for a, _ in box], float)
    hi = np.array([b for _, b in box], float)
    if system.has_zero_form:
        return None
    rng = np.random.default_rng(seed)
    m = max(0, math.ceil(math.log2(starts)))
    pts = qmc.Sobol(d=n, scramble=True, seed=seed).random_base2(m)[:starts]
    comp = system.compiled
    for p in pts:
        z0 = lo + (hi - lo) * (0.05 + 0.9 * p)
        D = np.linalg.qr(rng.standard_normal((n, R)))[0]
        t = np.zeros(R)
        for _ in range(iterations):
            z = z0 + D @ t
            F = comp.values_float(z[None, :n1], z[None, n1:])[:, 0]
            if np.max(np.abs(F)) < res_tol * 1e-2:
                break
            J = comp.jacobian_float(z[None, :n1], z[None, n1:])[0] @ D
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                break
            lam = 1.0
            f0 = np.linalg.norm(F)
            while lam > 1e-4:
                zt = z0 + D @ (t + lam * step)
                Ft = comp.values_float(zt[None, :n1], zt[None, n1:])[:, 0]
                if np.linalg.norm(Ft) < f0:
                    break
                lam /= 2
            t = t + lam * step
        witness = _validate_real(system, z0 + D @ t, n1, lo, hi, res_tol, sv_tol)
        if witness is not None:
            return witness
    return None
