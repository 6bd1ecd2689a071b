"""Configuration, the count-versus-prediction experiment and report emission.

A config is a TOML file with four tables::

    [system]        builtin = "sys_a"  or  R, n1, n2, d1, d2 and
                    monomials = [[form, "coeff", [x exps], [y exps]], ...]
    [boxes]         b1, b2 as lists of [lo, hi]; closed = true
    [schedule]      pairs = [[P1, P2], ...]; allow_b_below_1 = false
    [parameters]    Q, T, phi, codim_x, codim_y, seed, budgets, ...

Every default is written back into the report so a run can be repeated
from the report alone.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import forms as _forms
from .arcs import InfeasibleParameters, choose_parameters
from .counting import BoxPair, count_solutions
from .expsum import BudgetExceeded
from .forms import FormSystem, make_system, parse_monomial_records
from .integral import find_nonsingular_real_zero, schmidt_J, singular_integral_partial
from .local import find_nonsingular_padic_zero, is_prime, primes_up_to, singular_series_partial

BUILTINS = {"sys_a": _forms.sys_a, "sys_b": _forms.sys_b}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    system: FormSystem
    system_source: dict
    b1: tuple[tuple[float, float], ...]
    b2: tuple[tuple[float, float], ...]
    closed: bool
    schedule: tuple[tuple[float, float], ...]
    allow_b_below_1: bool = False
    Q: int = 50
    T: float = 32.0
    phi: float = 16.0
    codim_x: int | None = None
    codim_y: int | None = None
    heuristic_codim: bool = True
    codim_samples: int = 10_000
    codim_modulus: int = 101
    seed: int = 0
    count_budget: float = 1e12
    series_budget: float = 1e9
    schmidt_budget: int = 2 * 10**8
    schmidt_tol: float = 1e-5
    cross_check_oscillatory: bool = True
    witness_prime_max: int = 13
    strategy: str = "auto"
    workers: int = 1
    record_timings: bool = False

    @property
    def b_values(self) -> list[float]:
        return [BoxPair(self.b1, self.b2, p1, p2, self.closed).b for p1, p2 in self.schedule]

    def echo(self) -> dict:
        """Materialised config as plain data (the system as its source record)."""
        out = {k: v for k, v in asdict(self).items() if k != "system"}
        out["b1"] = [list(i) for i in self.b1]
        out["b2"] = [list(i) for i in self.b2]
        out["schedule"] = [list(p) for p in self.schedule]
        return out


_PARAM_KEYS = {f for f in ExperimentConfig.__dataclass_fields__} - {
    "system", "system_source", "b1", "b2", "closed", "schedule", "allow_b_below_1"}


def _system_from_table(table: dict) -> tuple[FormSystem, dict]:
    if "builtin" in table:
        name = table["builtin"]
        if name not in BUILTINS:
            raise ConfigError(f"unknown builtin system {name!r}; known: {sorted(BUILTINS)}")
        kwargs = {"n": int(table["n"])} if "n" in table else {}
        return BUILTINS[name](**kwargs), {"builtin": name, **kwargs}
    try:
        R, n1, n2, d1, d2 = (int(table[k]) for k in ("R", "n1", "n2", "d1", "d2"))
        records = table["monomials"]
    except KeyError as exc:
        raise ConfigError(f"[system] is missing key {exc.args[0]!r}") from None
    try:
        system = make_system(parse_monomial_records(records, R), R, n1, n2, d1, d2)
    except ValueError as exc:
        raise ConfigError(f"[system]: {exc}") from None
    source = {"R": R, "n1": n1, "n2": n2, "d1": d1, "d2": d2,
              "monomials": [[int(r[0]), str(r[1]), list(r[2]), list(r[3])] for r in records]}
    return system, source


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a parsed config table and fill in defaults."""
    for name in ("system", "boxes", "schedule"):
        if name not in data:
            raise ConfigError(f"missing table [{name}]")
    system, source = _system_from_table(data["system"])
    boxes = data["boxes"]
    b1 = tuple(tuple(float(v) for v in iv) for iv in boxes.get("b1", [[-0.5, 0.5]] * system.n1))
    b2 = tuple(tuple(float(v) for v in iv) for iv in boxes.get("b2", [[-0.5, 0.5]] * system.n2))
    if len(b1) != system.n1 or len(b2) != system.n2:
        raise ConfigError(f"box dimensions {len(b1)}, {len(b2)} do not match n1={system.n1}, "
                          f"n2={system.n2}")
    for lo, hi in b1 + b2:
        if hi - lo > 1:
            raise ConfigError(f"box side exceeds 1: [{lo}, {hi}]")
        if hi < lo:
            raise ConfigError(f"reversed interval [{lo}, {hi}]")
    sched = data["schedule"]
    pairs = tuple((float(p1), float(p2)) for p1, p2 in sched.get("pairs", []))
    if not pairs:
        raise ConfigError("schedule is empty")
    allow = bool(sched.get("allow_b_below_1", False))
    for p1, p2 in pairs:
        if p1 < 1 or p2 < 1:
            raise ConfigError(f"schedule entry ({p1}, {p2}): P1 and P2 must be at least 1")
        if p1 < p2 and not allow:
            raise ConfigError(f"schedule entry ({p1}, {p2}) has b < 1 (P1 < P2); "
                              "set allow_b_below_1 = true to run it")
    params = dict(data.get("parameters", {}))
    unknown = set(params) - _PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown [parameters] keys: {sorted(unknown)}")
    cfg = ExperimentConfig(system, source, b1, b2, bool(boxes.get("closed", True)), pairs,
                           allow, **params)
    if cfg.Q < 1 or cfg.T <= 0 or cfg.phi <= 0:
        raise ConfigError("Q, T and phi must be positive")
    if not is_prime(cfg.codim_modulus):
        raise ConfigError(f"codim_modulus {cfg.codim_modulus} is not prime")
    if cfg.strategy not in ("auto", "generic", "fibered"):
        raise ConfigError(f"unknown strategy {cfg.strategy!r}")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a TOML config; parse errors carry the line number."""
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# codimension heuristic


@dataclass(frozen=True)
class CodimEstimate:
    axis: str
    codim: int | None
    lower_bound: int
    hit_fractions: dict
    mean_points: dict
    note: str

    def as_dict(self) -> dict:
        out = asdict(self)
        out["hit_fractions"] = {str(k): v for k, v in self.hit_fractions.items()}
        out["mean_points"] = {str(k): v for k, v in self.mean_points.items()}
        return out


def _rank_deficient_mod_p(system: FormSystem, Z: np.ndarray, axis: str, p: int) -> np.ndarray:
    """Mask of rows of ``Z`` (integer points) where the axis Jacobian has rank < R mod p."""
    n1 = system.n1
    J = system.compiled.jacobian_float(Z[:, :n1].astype(float), Z[:, n1:].astype(float))
    J = J[:, :, :n1] if axis == "x" else J[:, :, n1:]
    J = np.remainder(np.rint(J).astype(np.int64), p)
    R = system.R
    full = np.zeros(len(Z), dtype=bool)
    perms = list(itertools.permutations(range(R)))
    for cols in itertools.combinations(range(J.shape[2]), R):
        det = np.zeros(len(Z), dtype=np.int64)
        for perm in perms:
            sign = 1 if _parity(perm) == 0 else -1
            term = np.ones(len(Z), dtype=np.int64)
            for r, c in enumerate(perm):
                term = np.remainder(term * J[:, r, cols[c]], p)
            det = np.remainder(det + sign * term, p)
        full |= det != 0
    return ~full


def _parity(perm) -> int:
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return inv % 2


def estimate_codimension(system: FormSystem, axis: str = "x", samples: int = 10_000,
                         modulus: int = 101, seed: int = 0, threshold: float = 0.5,
                         max_plane_points: int = 2 * 10**6) -> CodimEstimate:
    """HEURISTIC codimension of the locus where the ``axis`` Jacobian has rank < R.

    For slice dimension k = 0, 1, ... random affine k-planes over F_p are
    enumerated and tested point by point.  A locus of codimension c meets a
    random k-plane with probability about ``p^(k-c)`` for ``k < c`` and with
    probability near 1 for ``k >= c``, so the estimate is the smallest k whose
    hit fraction reaches ``threshold``.  Reduction mod p can only enlarge the
    locus, and coefficients divisible by p distort it.
    """
    axis = axis.lower()
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    if samples < 1000:
        raise ValueError("samples must be at least 1000")
    if not is_prime(modulus):
        raise ValueError(f"modulus not prime: {modulus}")
    sys_ = system if system.is_integral else system.cleared()
    comp = sys_.compiled
    if comp.bound(modulus - 1, modulus - 1) * max(sys_.d1, sys_.d2) >= 2**53:
        raise ValueError("modulus too large for exact evaluation")
    rng = np.random.default_rng(seed)
    n = sys_.n1 + sys_.n2
    p = modulus
    hits, means = {}, {}
    for k in range(0, n + 1):
        size = p ** k
        if size > max_plane_points:
            note = (f"HEURISTIC: no slice dimension below {k} reached the hit threshold; "
                    f"codimension is at least {k}")
            return CodimEstimate(axis, None, k, hits, means, note)
        planes = (max(8, samples // size) if size <= samples else 4) if k else 1
        per_plane = samples if k == 0 else size
        counts = []
        for _ in range(planes):
            base = rng.integers(0, p, size=n)
            if k == 0:
                Z = rng.integers(0, p, size=(per_plane, n))
            else:
                D = rng.integers(0, p, size=(k, n))
                T = np.stack(np.meshgrid(*([np.arange(p)] * k), indexing="ij"), -1).reshape(-1, k)
                Z = np.remainder(base + T @ D, p)
            counts.append(int(_rank_deficient_mod_p(sys_, Z, axis, p).sum()))
        if k == 0:
            frac = counts[0] / samples
        else:
            frac = sum(c > 0 for c in counts) / planes
        hits[k] = frac
        means[k] = float(np.mean(counts))
        if frac >= threshold:
            note = (f"HEURISTIC: random {k}-planes mod {p} meet the rank-deficiency locus "
                    f"in {frac:.0%} of trials, lower-dimensional slices rarely do")
            return CodimEstimate(axis, k, k, hits, means, note)
    return CodimEstimate(axis, None, n + 1, hits, means, "HEURISTIC: locus not detected")


# ---------------------------------------------------------------------------
# report


def jsonable(obj):
    """Replace non-finite floats by None (strict JSON has no NaN or Infinity)."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


@dataclass
class PredictionReport:
    """Everything a run produced, serialised as sorted JSON."""
    config: dict
    mode: str
    status: str
    warnings: list
    stages: dict
    codimension: dict
    singular_series: dict
    singular_integral: dict
    sigma: float | None
    entries: list
    witnesses: dict
    # measured wall times per entry; kept out of the JSON so reruns are identical
    wall_times: list = field(default_factory=list, compare=False, repr=False)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("wall_times")
        return out

    def to_json(self) -> str:
        return json.dumps(jsonable(self.as_dict()), sort_keys=True, indent=2,
                          allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PredictionReport":
        return cls(**json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["p1", "p2", "b", "N", "main_term", "ratio", "sigma", "S_Q", "J_tilde",
                "wall_time_s"]
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        walls = self.wall_times or [e.get("wall_time_s") for e in self.entries]
        for e, wall in zip(self.entries, walls):
            writer.writerow({
                "p1": e["p1"], "p2": e["p2"], "b": e["b"], "N": e["N"],
                "main_term": e["main_term"], "ratio": e["ratio"], "sigma": self.sigma,
                "S_Q": self.singular_series.get("float"),
                "J_tilde": self.singular_integral.get("J_tilde"),
                "wall_time_s": None if wall is None else round(wall, 3),
            })
        return buf.getvalue()


def main_term(sigma: float, system: FormSystem, p1: float, p2: float) -> tuple[float, float]:
    """The main term in both algebraic forms; returns ``(identity form, sigma form)``."""
    R, n1, n2, d1, d2 = system.R, system.n1, system.n2, system.d1, system.d2
    P = p1 ** d1 * p2 ** d2
    identity = p1 ** n1 * p2 ** n2 * P ** (-R) * sigma
    direct = sigma * p1 ** (n1 - R * d1) * p2 ** (n2 - R * d2)
    return identity, direct


def _declared_K(cfg: ExperimentConfig, est: dict) -> tuple[float | None, list[str]]:
    notes = []
    codims = []
    for axis in ("x", "y"):
        declared = getattr(cfg, f"codim_{axis}")
        h = est.get(axis)
        if declared is None:
            if h and h.get("codim") is not None:
                notes.append(f"codim_{axis} not declared; using the heuristic value {h['codim']}")
                declared = h["codim"]
            else:
                return None, notes + [f"codim_{axis} unknown"]
        elif h and h.get("codim") is not None and h["codim"] != declared:
            notes.append(f"declared codim_{axis}={declared} differs from heuristic {h['codim']}")
        codims.append(declared)
    return min(codims) / 2 ** cfg.system.dtilde, notes


def run_experiment(cfg: ExperimentConfig) -> PredictionReport:
    """Count, predict and compare for every schedule entry.

    Stages: codimension heuristic, parameters, singular series, singular
    integral, witnesses, counts.  A stage that runs out of budget is recorded
    and the others carry on; the report status is then ``partial``.
    """
    system = cfg.system
    stages: dict[str, str] = {}
    warns: list[str] = []

    est = {}
    if cfg.heuristic_codim:
        for axis in ("x", "y"):
            est[axis] = estimate_codimension(system, axis, cfg.codim_samples, cfg.codim_modulus,
                                             cfg.seed).as_dict()
    stages["codimension"] = "ok"
    K, notes = _declared_K(cfg, est)
    warns += notes

    mode = "conditional"
    params = []
    for (p1, p2), b in zip(cfg.schedule, cfg.b_values):
        try:
            if K is None:
                raise InfeasibleParameters("K unknown")
            cp = choose_parameters(system.R, system.d1, system.d2, b, K).at(p1, p2)
            params.append(cp.as_dict())
        except InfeasibleParameters as exc:
            params.append({"infeasible": str(exc)})
            mode = "unconditional"
            warns.append(f"({p1:g}, {p2:g}): {exc}; unconditional comparison")
    stages["parameters"] = "ok"

    series = {"Q": cfg.Q}
    try:
        S = singular_series_partial(system if system.is_integral else system.cleared(),
                                    cfg.Q, int(cfg.series_budget))
        series.update(value=f"{S.numerator}/{S.denominator}", float=float(S))
        stages["singular_series"] = "ok"
    except BudgetExceeded as exc:
        series.update(value=None, float=None)
        stages["singular_series"] = str(exc)

    integral: dict[str, Any] = {"T": cfg.T}
    ex = schmidt_J(system, cfg.T, cfg.b1, cfg.b2, cfg.schmidt_tol, cfg.schmidt_budget)
    integral.update(J_tilde=None if ex.degenerate else ex.extrapolated,
                    J_tilde_T={f"{t:g}": v for t, v in zip(ex.Ts, ex.values)},
                    order=ex.order, error_estimate=ex.error, converged=ex.converged,
                    degenerate=ex.degenerate, note=ex.note)
    if cfg.cross_check_oscillatory and system.R <= 2 and not ex.degenerate:
        J = singular_integral_partial(system, cfg.phi, cfg.b1, cfg.b2)
        integral.update(phi=cfg.phi, J_phi=J.value, J_phi_imag=J.imag, J_phi_error=J.error,
                        J_phi_converged=J.converged, pipeline_gap=ex.extrapolated - J.value)
    stages["singular_integral"] = "ok" if ex.converged else "unconverged"
    if ex.degenerate:
        warns.append(ex.note)

    sigma = None
    if series.get("float") is not None and integral["J_tilde"] is not None:
        sigma = series["float"] * integral["J_tilde"]

    padic = []
    for p in primes_up_to(cfg.witness_prime_max):
        w = find_nonsingular_padic_zero(system, p)
        padic.append({"p": p, **(w.as_dict() if w else {"status": "none"})})
    real = find_nonsingular_real_zero(system, cfg.b1, cfg.b2, seed=cfg.seed)
    witnesses = {"padic": padic, "real": real.as_dict() if real else None}
    stages["witnesses"] = "ok"

    entries, walls = [], []
    count_status = "ok"
    for (p1, p2), b, cp in zip(cfg.schedule, cfg.b_values, params):
        boxes = BoxPair(cfg.b1, cfg.b2, p1, p2, cfg.closed)
        entry = {"p1": p1, "p2": p2, "b": b, "parameters": cp, "N": None,
                 "main_term": None, "ratio": None, "diagnostic": None}
        start = time.perf_counter()
        pairs = boxes.npoints(1) * boxes.npoints(2)
        if pairs > cfg.count_budget:
            entry["diagnostic"] = f"budget exceeded: {pairs} pairs"
            count_status = "budget exceeded"
        else:
            entry["N"] = count_solutions(system, boxes, cfg.strategy, cfg.workers)
        elapsed = time.perf_counter() - start
        entry["wall_time_s"] = round(elapsed, 3) if cfg.record_timings else None
        walls.append(elapsed)
        if sigma is not None:
            ident, direct = main_term(sigma, system, p1, p2)
            if direct != 0 and abs(ident - direct) > 1e-12 * abs(direct):
                raise AssertionError(f"main-term identity fails at ({p1}, {p2})")
            entry["main_term"] = direct
            if direct > 0 and entry["N"] is not None:
                entry["ratio"] = entry["N"] / direct
            elif direct <= 0:
                entry["diagnostic"] = "main term not positive; ratio omitted"
        entries.append(entry)
    stages["counting"] = count_status

    partial = any(v != "ok" for k, v in stages.items() if k != "singular_integral")
    return PredictionReport(
        config=cfg.echo(), mode=mode, status="partial" if partial else "ok", warnings=warns,
        stages=stages, codimension={"heuristic": est, "K": K,
                                    "declared": {"x": cfg.codim_x, "y": cfg.codim_y}},
        singular_series=series, singular_integral=integral, sigma=sigma, entries=entries,
        witnesses=witnesses, wall_times=walls)
