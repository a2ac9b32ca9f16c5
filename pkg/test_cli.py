import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import cli
from eif.diagnostics import SUMMARY_COLUMNS

ROOT = Path(__file__).parent


@pytest.fixture(autouse=True)
def in_repo_root(monkeypatch):
    monkeypatch.chdir(ROOT)


def _summary(captured: str) -> dict:
    lines = [line for line in captured.splitlines() if line.startswith("RUN_SUMMARY_JSON:")]
    assert len(lines) == 1
    return json.loads(lines[0][len("RUN_SUMMARY_JSON:"):])


def test_estimate_writes_curves_and_manifest(sim_csv, tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["estimate", "--input", str(sim_csv), "--method", "km,plugin,ee", "--method", "moss-l2",
                     "--max-iter", "50", "--mc-draws", "500", "--seed", "3", "--output", str(out)])
    assert code == 0
    summary = _summary(capsys.readouterr().out)
    assert summary["status"] == "success"
    assert summary["methods"] == ["km", "plugin", "ee", "moss-l2"]

    table = pd.read_csv(out / "curves.csv", dtype={"arm": str})
    assert list(table.columns) == cli.CURVE_COLUMNS
    assert len(table) == 4 * 3 * summary["t_max"]
    assert set(table["arm"]) == {"0", "1", "1-0"}
    assert table.loc[table["method"] == "km", "se"].isna().all()
    ee_rows = table[(table["method"] == "ee") & (table["arm"] == "1")]
    assert ee_rows["se"].notna().all()
    assert (ee_rows["lo_simul"] <= ee_rows["lo_pw"] + 1e-12).all()
    assert table.loc[table["method"] == "moss-l2", "monotone"].all() or summary["non_monotone"]

    payload = json.loads((out / "curves.json").read_text())
    assert payload["band"] == "simultaneous"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert "numpy" in manifest["versions"]


def test_estimate_flag_overrides_config_file(sim_csv, tmp_path, capsys):
    config = tmp_path / "run.yml"
    config.write_text("alpha: 0.2\nband: pointwise\nformats: [csv]\n", encoding="utf-8")
    out = tmp_path / "out"
    code = cli.main(["estimate", "--config", str(config), "--input", str(sim_csv), "--method", "ee",
                     "--alpha", "0.1", "--output", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["alpha"] == 0.1
    assert manifest["config"]["band"] == "pointwise"
    assert not (out / "curves.json").exists()
    table = pd.read_csv(out / "curves.csv")
    assert table["lo_simul"].isna().all()


def test_estimate_is_identical_across_thread_counts(sim_csv, tmp_path):
    for threads in ("1", "3"):
        assert cli.main(["estimate", "--input", str(sim_csv), "--method", "ee", "--mc-draws", "3000",
                         "--seed", "8", "--threads", threads, "--output", str(tmp_path / threads)]) == 0
    assert (tmp_path / "1" / "curves.csv").read_text() == (tmp_path / "3" / "curves.csv").read_text()


def test_export_long(sim_csv, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["estimate", "--input", str(sim_csv), "--method", "km", "--export-long",
                     "--output", str(out)]) == 0
    long = pd.read_csv(out / "long.csv")
    assert list(long.columns) == ["id", "k", "dN", "dAc", "a", "w1"]


def test_unknown_flag_exits_with_config_code(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["estimate", "--no-such-flag"])
    assert info.value.code == 2
    captured = capsys.readouterr()
    assert json.loads(captured.err.strip().splitlines()[-1])["error"] == "ConfigError"
    assert _summary(captured.out)["exit_code"] == 2


def test_missing_input_exits_with_data_code(tmp_path, capsys):
    code = cli.main(["estimate", "--input", str(tmp_path / "missing.csv"), "--output", str(tmp_path)])
    assert code == 3
    captured = capsys.readouterr()
    assert _summary(captured.out)["error"]["error"] == "DataError"


def test_estimate_requires_input(tmp_path, capsys):
    assert cli.main(["estimate", "--output", str(tmp_path)]) == 2


def test_unknown_method_is_a_config_error(sim_csv, tmp_path, capsys):
    code = cli.main(["estimate", "--input", str(sim_csv), "--method", "cox", "--output", str(tmp_path)])
    assert code == 2


def test_diagnose(sim_csv, tmp_path, capsys):
    out = tmp_path / "diag"
    assert cli.main(["diagnose", "--input", str(sim_csv), "--output", str(out)]) == 0
    table = pd.read_csv(out / "inverse_weights.csv")
    assert list(table.columns) == ["arm"] + SUMMARY_COLUMNS
    assert set(table["arm"]) == {0, 1}
    assert (table["Min"] >= 1.0).all()
    assert _summary(capsys.readouterr().out)["max_weight"] >= 1.0


def test_simulate(tmp_path, capsys):
    config = tmp_path / "study.yml"
    config.write_text("study:\n  oracle_draws: 20000\n", encoding="utf-8")
    out = tmp_path / "study"
    code = cli.main(["simulate", "--config", str(config), "--n", "80", "--reps", "2", "--method", "km,plugin",
                     "--no-coverage", "--output", str(out)])
    assert code == 0
    metrics = pd.read_csv(out / "study_metrics.csv")
    assert set(metrics["method"]) == {"km", "plugin"}
    assert len(pd.read_csv(out / "study_followup.csv")) == 21
    summary = _summary(capsys.readouterr().out)
    assert summary["reps"] == 2
    assert summary["monotone"]["km:1"] == 1.0


def test_monotonicity(sim_csv, tmp_path):
    out = tmp_path / "mono"
    code = cli.main(["monotonicity", "--input", str(sim_csv), "--sizes", "50,80", "--reps", "2",
                     "--method", "km,ipcw", "--output", str(out)])
    assert code == 0
    table = pd.read_csv(out / "monotonicity.csv")
    assert table["n"].tolist() == [50, 80]
    np.testing.assert_allclose(table["km"], 100.0)


def test_jsonable_replaces_non_finite_values():
    assert cli._jsonable({"a": float("nan"), "b": np.array([1.0, np.inf]), "c": np.int64(2)}) == \
        {"a": None, "b": [1.0, None], "c": 2}
