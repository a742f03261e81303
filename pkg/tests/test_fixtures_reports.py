import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kernelprobe.fixtures import (
    export_fixtures,
    format_matrix,
    get_fixture,
    list_fixtures,
    parse_matrix,
    read_matrix,
    write_matrix,
)
from kernelprobe.reports import SCHEMAS, CsvReport, fmt, read_csv_report, read_json, write_json


def test_nine_fixtures_with_metadata():
    fxs = list_fixtures()
    assert len(fxs) == 9
    names = {f.name: f for f in fxs}
    assert names["reversal_signed_n5_m5"].expected_lambda == pytest.approx(0.016)
    assert names["tree_edit_n5"].expected_lambda == pytest.approx(0.026)
    for f in fxs:
        assert f.matrix.shape == (f.n, f.n)
        np.testing.assert_array_equal(f.matrix, f.matrix.T)
        np.testing.assert_array_equal(np.diag(f.matrix), 0)
        assert len(f.members) == f.n


def test_unknown_fixture():
    with pytest.raises(KeyError):
        get_fixture("nothing")


def test_export_roundtrip(tmp_path):
    paths = export_fixtures(tmp_path / "fx")
    assert len(paths) == 9
    for f, p in zip(list_fixtures(), paths):
        d, meta = read_matrix(p)
        np.testing.assert_array_equal(d, f.matrix)
        assert float(meta["expected_lambda"]) == f.expected_lambda
        assert json.loads(meta["members"]) == f.members


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: arrays(np.float64, (n, n), elements=st.floats(-1e6, 1e6, allow_nan=False))))
def test_matrix_format_roundtrip(a):
    d = np.triu(a) + np.triu(a, 1).T
    back, meta = parse_matrix(format_matrix(d, {"k": "v"}))
    np.testing.assert_array_equal(back, d)
    assert meta == {"k": "v"}


def test_matrix_format_accepts_fractions(tmp_path):
    text = "# measure: ins\n3\n0 1/3 2/3\n0 1/3\n0\n"
    d, meta = parse_matrix(text)
    assert d[0, 2] == pytest.approx(2 / 3) and d[2, 0] == d[0, 2]
    write_matrix(tmp_path / "m.txt", d)
    assert read_matrix(tmp_path / "m.txt")[0].tolist() == d.tolist()


@pytest.mark.parametrize(
    "text",
    ["", "# only comments\n", "2\n0 1\n", "2\n0 1 2\n0\n", "x\n0\n", "2\n0 a\n0\n", "2\n0 1\n0\n0\n"],
)
def test_bad_matrix_text(text):
    with pytest.raises(ValueError):
        parse_matrix(text)


# --- reports ---------------------------------------------------------------


def test_fmt():
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(float("nan")) == "nan"
    assert fmt(7) == "7"


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "r.csv"
    with CsvReport(path, "sample") as rep:
        rep.note("skipped", measure="ins", n=30, m=4, reason="n exceeds m!")
        rep.write(dict(measure="ins", n=6, m=4, t=100, seed=12345, repeat=0, n_lambda_plus=22, p=0.22, lambda_max=0.0123456789012345))
    assert path.read_text().splitlines()[0] == "# kernelprobe sample v1"
    kind, rows, notes = read_csv_report(path)
    assert kind == "sample"
    assert rows == [dict(measure="ins", n=6, m=4, t=100, seed=12345, repeat=0, n_lambda_plus=22, p=0.22, lambda_max=0.0123456789012)]
    assert notes == [("skipped", {"measure": "ins", "n": "30", "m": "4", "reason": "n exceeds m!"})]


def test_rows_are_flushed_immediately(tmp_path):
    path = tmp_path / "r.csv"
    rep = CsvReport(path, "brute")
    rep.write(dict(measure="ins", n=5, m=4, n_sets=42504, n_lambda_plus=2016, p=2016 / 42504, lambda_max=0.05))
    _, rows, _ = read_csv_report(path)
    assert len(rows) == 1
    rep.close()


def test_schema_checks(tmp_path):
    with pytest.raises(ValueError):
        CsvReport(tmp_path / "x.csv", "plot")
    bad = tmp_path / "bad.csv"
    bad.write_text("measure,n\nins,5\n")
    with pytest.raises(ValueError):
        read_csv_report(bad)
    bad.write_text("# kernelprobe brute v9\n" + ",".join(SCHEMAS["brute"]) + "\n")
    with pytest.raises(ValueError):
        read_csv_report(bad)
    bad.write_text("# kernelprobe brute v1\nmeasure,n\n")
    with pytest.raises(ValueError):
        read_csv_report(bad)


def test_json_roundtrip(tmp_path):
    path = tmp_path / "r.json"
    write_json(path, "ea", {"seed": 12345, "witness": np.arange(3), "best": np.float64(0.5), "ok": np.bool_(True)})
    doc = read_json(path)
    assert doc["schema"] == "kernelprobe ea" and doc["version"] == 1
    assert doc["seed"] == 12345 and doc["witness"] == [0, 1, 2] and doc["ok"] is True
    path.write_text("{}")
    with pytest.raises(ValueError):
        read_json(path)
