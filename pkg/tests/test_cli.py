import subprocess
import sys

import numpy as np
import pytest

import kernelprobe.cli as cli
from kernelprobe.cli import CampaignConfig, ConfigError, main, parse_measures, parse_range, run_campaign
from kernelprobe.distances import PERMUTATION_MEASURES
from kernelprobe.reports import read_csv_report, read_json


def quiet(*_):
    pass


def test_parse_range():
    assert parse_range("4..7") == [4, 5, 6, 7]
    assert parse_range("4-6") == [4, 5, 6]
    assert parse_range("5") == [5]
    assert parse_range("5,8, 9") == [5, 8, 9]
    for bad in ("", "7..4", "a", "4..b"):
        with pytest.raises(ConfigError):
            parse_range(bad)


def test_parse_measures():
    assert parse_measures("all") == list(PERMUTATION_MEASURES)
    assert parse_measures("ins,lev") == ["ins", "lev"]
    with pytest.raises(ConfigError):
        parse_measures("ins,bogus")


def test_config_errors_exit_one(tmp_path, capsys):
    assert run_campaign(CampaignConfig("sample", measures=["bogus"], out=tmp_path / "x.csv"), quiet) == 1
    assert run_campaign(CampaignConfig("sample", t=0, out=tmp_path / "x.csv"), quiet) == 1
    assert run_campaign(CampaignConfig("ea", budget=10, out=tmp_path / "x.csv"), quiet) == 1
    assert "error" in capsys.readouterr().err
    assert main(["sample", "--measure", "nope", "--out", str(tmp_path / "y.csv")]) == 1
    assert main(["sample", "--n", "9..3"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["bogus-command"])
    assert info.value.code == 1


def test_sample_campaign_rows(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sample", "--measure", "ins", "--n", "6", "--m", "4", "--t", "2000", "--repeats", "10", "--seed", "1", "--out", str(out)])
    assert code == 0
    kind, rows, notes = read_csv_report(out)
    assert kind == "sample" and len(rows) == 10 and not notes
    assert all(r["seed"] == 1 for r in rows)
    assert np.mean([r["p"] for r in rows]) == pytest.approx(0.22, abs=0.02)


def test_grid_completeness_and_skips(tmp_path):
    out = tmp_path / "g.csv"
    cfg = CampaignConfig("brute", measures=["ins", "ham"], n_values=[2, 5, 7], m_values=[3], out=out)
    assert run_campaign(cfg, quiet) == 0
    _, rows, notes = read_csv_report(out)
    cells = {(r["measure"], r["n"], r["m"]) for r in rows}
    skipped = {(i["measure"], int(i["n"]), int(i["m"])) for tag, i in notes if tag == "skipped"}
    assert cells == {("ins", 2, 3), ("ins", 5, 3), ("ham", 2, 3), ("ham", 5, 3)}
    assert skipped == {("ins", 7, 3), ("ham", 7, 3)}
    assert len(cells) + len(skipped) == 2 * 3 * 1


def test_brute_lcstr(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["brute", "--measure", "lcstr", "--n", "5", "--m", "4", "--out", str(out)]) == 0
    _, rows, _ = read_csv_report(out)
    assert rows[0]["n_sets"] == 42504 and round(rows[0]["p"], 3) == 0.002


def test_cell_failure_is_recorded(tmp_path, monkeypatch):
    def boom(cfg, measure, n, m):
        if n == 6:
            raise RuntimeError("synthetic failure, with comma")
        return cli._brute_cell(cfg, measure, n, m)

    monkeypatch.setitem(cli._CELL, "brute", boom)
    out = tmp_path / "f.csv"
    assert run_campaign(CampaignConfig("brute", n_values=[3, 6], m_values=[3], out=out), quiet) == 2
    _, rows, notes = read_csv_report(out)
    assert [r["n"] for r in rows] == [3]
    assert notes[0][0] == "failed" and notes[0][1]["n"] == "6"


def test_ea_campaign_with_history(tmp_path):
    out = tmp_path / "e.csv"
    code = main(["ea", "--measure", "ins", "--n", "5", "--m", "4", "--repeats", "2", "--submutation", "swap,reversal", "--seed", "12345", "--out", str(out)])
    assert code == 0
    _, rows, _ = read_csv_report(out)
    assert len(rows) == 4
    assert {r["seed"] for r in rows} == {12345, 12346}
    assert all(r["found"] for r in rows)
    kind, hist, _ = read_csv_report(out.with_suffix(".history.csv"))
    assert kind == "ea-history" and hist


def test_gp_campaign_json(tmp_path):
    out = tmp_path / "g.json"
    code = main(["gp", "--measure", "che", "--n", "8", "--m", "5", "--repeats", "2", "--test-size", "50", "--format", "json", "--out", str(out)])
    assert code == 0
    doc = read_json(out)
    assert doc["schema"] == "kernelprobe gp"
    assert doc["config"]["seed"] == 0
    runs = doc["cells"][0]
    assert [r["seed"] for r in runs] == [0, 1]
    assert all(r["fit_status"] == "ok" for r in runs)


def test_json_lists_skips(tmp_path):
    out = tmp_path / "s.json"
    assert main(["sample", "--n", "2,7", "--m", "3", "--t", "100", "--repeats", "1", "--format", "json", "--out", str(out)]) == 0
    doc = read_json(out)
    assert len(doc["cells"]) == 1
    assert doc["skipped"] == [{"measure": "ins", "n": 7, "m": 3, "reason": "n exceeds m!"}]


def test_workers_give_same_report(tmp_path):
    args = ["sample", "--measure", "ins,lev", "--n", "5,6", "--m", "4", "--t", "500", "--repeats", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a), "--workers", "1"]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_text() == b.read_text()


def test_workers_env_default(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert cli._default_workers() == 3
    monkeypatch.setenv(cli.WORKERS_ENV, "junk")
    assert cli._default_workers() == 1


def test_check_matrix_on_exported_fixture(tmp_path, capsys):
    assert main(["fixtures", "--export", str(tmp_path)]) == 0
    listing = capsys.readouterr().out
    assert listing.count("expected_lambda=") == 9
    assert "reversal_signed_n5_m5" in listing and "tree_edit_n5" in listing
    assert main(["check-matrix", str(tmp_path / "insert_n5_m4.txt")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("not CNSD, lambda_max = 0.0902711")


def test_check_matrix_cnsd_and_errors(tmp_path, capsys):
    p = tmp_path / "line.txt"
    p.write_text("3\n0 1 3\n0 2\n0\n")
    assert main(["check-matrix", str(p)]) == 0
    assert capsys.readouterr().out.startswith("CNSD")
    p.write_text("garbage\n")
    assert main(["check-matrix", str(p)]) == 1
    assert main(["check-matrix", str(tmp_path / "missing.txt")]) == 1


def test_fixtures_show(capsys):
    assert main(["fixtures", "--show"]) == 0
    assert capsys.readouterr().out.count("# expected_lambda:") == 9


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "kernelprobe", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("kernelprobe")
