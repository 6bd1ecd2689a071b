import json

import pytest

from bihom.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_count(capsys):
    code, out, _ = run(capsys, "count", "--p1", "4", "--p2", "4")
    assert code == 0
    data = json.loads(out)
    assert (data["p1"], data["p2"]) == (4, 4) and data["n"] > 0


def test_count_with_config(capsys):
    code, out, _ = run(capsys, "count", "--config", "configs/sys_a.toml", "--p1", "16", "--p2", "16")
    assert code == 0 and json.loads(out)["n"] == 330465


def test_expsum_rational_and_complete(capsys):
    code, out, _ = run(capsys, "expsum", "--alpha", "0", "--p1", "2", "--p2", "2")
    data = json.loads(out)
    assert code == 0 and data["re"] == pytest.approx(data["pairs"])
    code, out, _ = run(capsys, "expsum", "--q", "3")
    data = json.loads(out)
    assert code == 0 and data["abs"] == pytest.approx(abs(complex(data["re"], data["im"])))
    assert sum(data["histogram"]) == data["pairs"]


def test_expsum_needs_alpha_or_q(capsys):
    code, _, err = run(capsys, "expsum")
    assert code == 1 and "--alpha" in err


def test_lattice_csv(capsys):
    code, out, _ = run(capsys, "lattice", "verify-lemma51", "--instances", "5")
    assert code == 0
    assert len(out.splitlines()) == 6


def test_arcs(capsys):
    code, out, _ = run(capsys, "arcs", "disjoint")
    assert code == 0 and json.loads(out)["disjoint"] is True
    code, out, _ = run(capsys, "arcs", "locate", "--alpha", "0")
    assert json.loads(out)["center"]["q"] == 1
    code, out, _ = run(capsys, "arcs", "measure")
    assert json.loads(out)["arcs"] == 1


def test_arcs_infeasible_exit_code(capsys):
    code, _, err = run(capsys, "arcs", "disjoint", "--K", "2")
    assert code == 1 and "error" in err


def test_sseries(capsys):
    code, out, _ = run(capsys, "sseries", "--Q", "2", "--euler", "2:1,3")
    data = json.loads(out)
    assert code == 0 and data["S_Q"]["exact"] == "9/8"
    assert data["euler_factors"]["2^1"]["exact"] == "9/8"


def test_sintegral(capsys):
    code, out, _ = run(capsys, "sintegral", "--method", "osc", "--u", "0")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "sintegral", "--method", "schmidt", "--T", "8")
    data = json.loads(out)
    assert data["degenerate"] is False and data["extrapolated"] > 2.5


def test_experiment_writes_files(capsys, tmp_path):
    cfg = tmp_path / "small.toml"
    cfg.write_text(
        "[system]\nbuiltin = 'sys_a'\n[boxes]\n[schedule]\npairs = [[4, 4]]\n"
        "[parameters]\nQ = 4\nT = 8\ncodim_x = 3\ncodim_y = 3\nheuristic_codim = false\n"
        "cross_check_oscillatory = false\n")
    out_json, out_csv = tmp_path / "r.json", tmp_path / "r.csv"
    code, _, _ = run(capsys, "experiment", "--config", str(cfg), "--out", str(out_json),
                     "--csv", str(out_csv))
    assert code == 0
    assert json.loads(out_json.read_text())["status"] == "ok"
    assert out_csv.read_text().startswith("p1,p2,")


def test_experiment_partial_exit_code(capsys, tmp_path):
    cfg = tmp_path / "tight.toml"
    cfg.write_text(
        "[system]\nbuiltin = 'sys_a'\n[boxes]\n[schedule]\npairs = [[4, 4]]\n"
        "[parameters]\nQ = 4\nT = 8\ncodim_x = 3\ncodim_y = 3\nheuristic_codim = false\n"
        "cross_check_oscillatory = false\ncount_budget = 10\n")
    code, out, _ = run(capsys, "experiment", "--config", str(cfg))
    assert code == 2 and json.loads(out)["status"] == "partial"


def test_experiment_bad_config(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[system\n")
    code, _, err = run(capsys, "experiment", "--config", str(cfg))
    assert code == 1 and "parse error" in err
