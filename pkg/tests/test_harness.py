import dataclasses
import json

import pytest

from bihom.forms import sys_a, sys_b, zero_system
from bihom.harness import (ConfigError, PredictionReport, config_from_dict, estimate_codimension,
                           jsonable, load_config, main_term, run_experiment)


def small_table(**params):
    return {
        "system": {"builtin": "sys_a"},
        "boxes": {"closed": True},
        "schedule": {"pairs": [[4, 4], [8, 4]]},
        "parameters": {"Q": 6, "T": 8, "phi": 4, "codim_x": 3, "codim_y": 3,
                       "heuristic_codim": False, "cross_check_oscillatory": False, **params},
    }


def test_defaults_from_shipped_config():
    cfg = load_config("configs/sys_a.toml")
    assert (cfg.Q, cfg.T, cfg.phi) == (50, 32.0, 16.0)
    assert cfg.system.n1 == 3 and cfg.closed
    assert cfg.b_values[0] == pytest.approx(1.0)
    minimal = config_from_dict({"system": {"builtin": "sys_b"}, "boxes": {},
                                "schedule": {"pairs": [[4, 4]]}})
    assert (minimal.Q, minimal.T, minimal.codim_modulus) == (50, 32.0, 101)


@pytest.mark.parametrize("mutate,message", [
    (lambda t: t.pop("boxes"), "missing table"),
    (lambda t: t["boxes"].update(b1=[[0, 2]] * 3), "box side exceeds 1"),
    (lambda t: t["boxes"].update(b1=[[0.5, 0.2]] * 3), "reversed interval"),
    (lambda t: t["schedule"].update(pairs=[]), "schedule is empty"),
    (lambda t: t["schedule"].update(pairs=[[4, 8]]), "b < 1"),
    (lambda t: t["parameters"].update(bogus=1), "unknown"),
    (lambda t: t["parameters"].update(codim_modulus=100), "not prime"),
    (lambda t: t["parameters"].update(strategy="magic"), "unknown strategy"),
    (lambda t: t["system"].update(builtin="sys_z"), "unknown builtin"),
])
def test_config_errors(mutate, message):
    table = small_table()
    mutate(table)
    with pytest.raises(ConfigError, match=message):
        config_from_dict(table)


def test_b_below_one_allowed_when_requested():
    table = small_table()
    table["schedule"].update(pairs=[[4, 8]], allow_b_below_1=True)
    assert config_from_dict(table).b_values[0] == pytest.approx(2 / 3)


def test_parse_error_has_line_number(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[system]\nbuiltin = 'sys_a'\n[boxes\n")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(path)


def test_codimension_estimates():
    assert estimate_codimension(sys_b(), "x", samples=2000).codim == 2
    assert estimate_codimension(zero_system(2, 2, 1, 1), "y", samples=2000).codim == 0
    assert estimate_codimension(sys_a(), "x", samples=2000).codim == 3


def test_codimension_argument_checks():
    with pytest.raises(ValueError, match="not prime"):
        estimate_codimension(sys_b(), modulus=91)
    with pytest.raises(ValueError, match="at least 1000"):
        estimate_codimension(sys_b(), samples=10)


def test_main_term_identity():
    s = sys_a()
    ident, direct = main_term(1.37, s, 32.0, 16.0)
    assert ident == pytest.approx(direct, rel=1e-12)
    assert direct == pytest.approx(1.37 * 32 ** 2 * 16 ** 2)


def test_jsonable_replaces_non_finite():
    assert jsonable({"a": float("nan"), "b": [float("inf"), 1.0]}) == {"a": None, "b": [None, 1.0]}


@pytest.fixture(scope="module")
def small_report():
    return run_experiment(config_from_dict(small_table()))


def test_small_run(small_report):
    r = small_report
    assert r.status == "ok" and r.mode == "conditional"
    assert all(e["N"] > 0 for e in r.entries)
    assert all(e["ratio"] > 0 for e in r.entries)
    assert r.sigma == pytest.approx(r.singular_series["float"] * r.singular_integral["J_tilde"])
    assert all(w["status"] == "certified" for w in r.witnesses["padic"])
    assert r.witnesses["real"] is not None


def test_round_trip_and_determinism(small_report):
    text = small_report.to_json()
    assert PredictionReport.from_json(text).to_json() == text
    assert run_experiment(config_from_dict(small_table())).to_json() == text
    json.loads(text)


def test_csv_columns(small_report):
    lines = small_report.to_csv().splitlines()
    assert lines[0] == "p1,p2,b,N,main_term,ratio,sigma,S_Q,J_tilde,wall_time_s"
    assert len(lines) == 1 + len(small_report.entries)


def test_budget_gives_partial_report():
    r = run_experiment(config_from_dict(small_table(count_budget=100)))
    assert r.status == "partial"
    assert all("budget exceeded" in e["diagnostic"] for e in r.entries)


def test_infeasible_K_gives_unconditional_mode():
    r = run_experiment(config_from_dict(small_table(codim_x=1, codim_y=1)))
    assert r.mode == "unconditional"
    assert any("unconditional" in w for w in r.warnings)
