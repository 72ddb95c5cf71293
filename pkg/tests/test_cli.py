import json

import numpy as np
import pytest

jsonschema = pytest.importorskip("jsonschema")

from selkern import DataFormatError, RunConfig, derive_rng, multi_mmd
from selkern.cli import (
    RESULT_SCHEMA,
    cli_main,
    load_csv,
    render_document,
    save_csv,
    split_response,
)


@pytest.fixture
def sample_csvs(tmp_path):
    rng = derive_rng(100)
    x = rng.standard_normal((40, 6))
    y = rng.standard_normal((40, 6))
    y[:, 0] += 1.0
    xp = tmp_path / "x.csv"
    yp = tmp_path / "y.csv"
    save_csv(xp, x, [f"c{i}" for i in range(6)])
    save_csv(yp, y, [f"c{i}" for i in range(6)])
    return str(xp), str(yp), x, y


def test_csv_round_trip(tmp_path):
    rng = derive_rng(0)
    values = rng.standard_normal((12, 4)) * 1e3
    path = tmp_path / "m.csv"
    save_csv(path, values, ["a", "b", "c", "d"])
    loaded, names = load_csv(str(path))
    assert names == ["a", "b", "c", "d"]
    assert np.abs(loaded - values).max() <= 1e-12
    assert np.array_equal(loaded, values)  # 17 significant digits are lossless


def test_csv_without_header(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("1.0,2.0\n3.0,4.0\n")
    values, names = load_csv(str(path))
    assert names == ["f0", "f1"]
    assert values.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_csv_ragged_row_names_row(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(DataFormatError, match="row 3"):
        load_csv(str(path))


def test_csv_non_numeric_names_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n3,oops\n")
    with pytest.raises(DataFormatError, match="row 3"):
        load_csv(str(path))


def test_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(DataFormatError, match="empty"):
        load_csv(str(path))


def test_csv_non_finite_rejected(tmp_path):
    path = tmp_path / "inf.csv"
    path.write_text("a,b\n1,2\nnan,4\n")
    with pytest.raises(DataFormatError, match="row 3"):
        load_csv(str(path))


def test_split_response_missing_column(tmp_path):
    values = np.ones((3, 2))
    with pytest.raises(DataFormatError):
        split_response(values, ["a", "b"], "y")


def test_mmd_test_contract(sample_csvs, tmp_path, capsys):
    xp, yp, x, _ = sample_csvs
    out = tmp_path / "doc.json"
    code = cli_main(
        ["mmd-test", "--x", xp, "--y", yp, "--k", "5", "--seed", "7", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, RESULT_SCHEMA)
    assert doc["schema_version"] == 1
    assert len(doc["results"]["p_values"]) == 5
    assert doc["config"]["seed"] == 7
    table = capsys.readouterr().out
    assert "MultiMMD" in table


def test_identical_invocations_byte_identical(sample_csvs, tmp_path):
    xp, yp, *_ = sample_csvs
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert cli_main(
            ["mmd-test", "--x", xp, "--y", yp, "--k", "3", "--seed", "11", "--out", str(out)]
        ) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_thread_count_does_not_change_document(sample_csvs, tmp_path):
    xp, yp, *_ = sample_csvs
    docs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}.json"
        assert cli_main(
            ["mmd-test", "--x", xp, "--y", yp, "--k", "4", "--seed", "3",
             "--threads", threads, "--out", str(out)]
        ) == 0
        docs.append(out.read_bytes())
    assert docs[0] == docs[1]


def test_cli_matches_library_call(sample_csvs, tmp_path):
    xp, yp, x, y = sample_csvs
    out = tmp_path / "doc.json"
    cli_main(["mmd-test", "--x", xp, "--y", yp, "--k", "4", "--seed", "5", "--out", str(out)])
    doc = json.loads(out.read_text())
    config = RunConfig(seed=5, method="multi-mmd", k=4)
    report = multi_mmd(x, y, 4, config, feature_names=[f"c{i}" for i in range(6)])
    assert doc["results"]["p_values"] == pytest.approx(report.p_values, abs=0)
    assert tuple(doc["results"]["selected"]) == report.selected


def test_poly_method_flag(sample_csvs, tmp_path):
    xp, yp, *_ = sample_csvs
    out = tmp_path / "doc.json"
    cli_main(
        ["mmd-test", "--x", xp, "--y", yp, "--method", "poly", "--k", "3", "--seed", "2",
         "--out", str(out)]
    )
    doc = json.loads(out.read_text())
    assert doc["results"]["method"] == "PolyMMD"
    assert doc["config"]["method"] == "poly-mmd"


def test_hsic_test_runs(tmp_path):
    rng = derive_rng(101)
    X = rng.standard_normal((50, 4))
    y = (X[:, 0] + 0.5 * rng.standard_normal(50) > 0).astype(float)
    table = np.hstack([X, y[:, None]])
    path = tmp_path / "z.csv"
    save_csv(path, table, ["a", "b", "c", "d", "label"])
    out = tmp_path / "doc.json"
    code = cli_main(
        ["hsic-test", "--data", str(path), "--response", "label", "--k", "2", "--seed", "13",
         "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, RESULT_SCHEMA)
    assert doc["results"]["method"] == "MultiHSIC"
    assert len(doc["results"]["p_values"]) == 2
    assert set(doc["results"]["feature_names"]) <= {"a", "b", "c", "d"}


def test_simulate_requires_explicit_seed(monkeypatch, capsys):
    monkeypatch.setenv("SELKERN_SEED", "5")
    code = cli_main(
        ["simulate", "--problem", "mean-shift", "--n", "40", "--d", "4", "--trials", "1"]
    )
    capsys.readouterr()
    assert code == 2


def test_simulate_document(tmp_path, capsys):
    out = tmp_path / "sim.json"
    code = cli_main(
        ["simulate", "--problem", "mean-shift", "--n", "60", "--d", "6", "--shift", "0.5",
         "--informative", "2", "--trials", "2", "--seed", "1", "--k", "3",
         "--replicates", "300", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, RESULT_SCHEMA)
    methods = {s["method"] for s in doc["results"]["summaries"]}
    assert methods == {"multi-mmd", "poly-mmd"}
    assert len(doc["results"]["per_trial"]) == 4
    capsys.readouterr()


def test_benchmark_document(tmp_path, capsys):
    rng = derive_rng(102)
    n_rows = 80
    labels = (np.arange(n_rows) % 2).astype(float)
    X = rng.standard_normal((n_rows, 3))
    X[labels == 1, 0] += 1.2
    table = np.hstack([X, labels[:, None]])
    path = tmp_path / "bench.csv"
    save_csv(path, table, ["a", "b", "c", "cls"])
    out = tmp_path / "doc.json"
    code = cli_main(
        ["benchmark", "--data", str(path), "--mode", "mmd", "--label", "cls", "--fakes", "3",
         "--trials", "2", "--seed", "21", "--k", "3", "--replicates", "300", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, RESULT_SCHEMA)
    assert doc["inputs"]["fakes"] == 3
    capsys.readouterr()


def test_env_seed_fallback(sample_csvs, tmp_path, monkeypatch, capsys):
    xp, yp, *_ = sample_csvs
    out = tmp_path / "doc.json"
    monkeypatch.setenv("SELKERN_SEED", "99")
    code = cli_main(["mmd-test", "--x", xp, "--y", yp, "--k", "2", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["seed"] == 99
    capsys.readouterr()


def test_missing_seed_is_usage_error(sample_csvs, monkeypatch, capsys):
    xp, yp, *_ = sample_csvs
    monkeypatch.delenv("SELKERN_SEED", raising=False)
    code = cli_main(["mmd-test", "--x", xp, "--y", yp, "--k", "2"])
    capsys.readouterr()
    assert code == 2


def test_unknown_flag_is_usage_error(capsys):
    code = cli_main(["mmd-test", "--bogus", "1"])
    capsys.readouterr()
    assert code == 2


def test_invalid_config_value_is_usage_error(sample_csvs, capsys):
    xp, yp, *_ = sample_csvs
    code = cli_main(
        ["mmd-test", "--x", xp, "--y", yp, "--k", "2", "--seed", "1", "--alpha", "1.5"]
    )
    capsys.readouterr()
    assert code == 2


def test_missing_file_is_data_error(tmp_path, capsys):
    code = cli_main(
        ["mmd-test", "--x", str(tmp_path / "nope.csv"), "--y", str(tmp_path / "nope.csv"),
         "--k", "2", "--seed", "1"]
    )
    capsys.readouterr()
    assert code == 1


def test_bad_csv_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3\n")
    code = cli_main(["mmd-test", "--x", str(bad), "--y", str(bad), "--k", "1", "--seed", "1"])
    capsys.readouterr()
    assert code == 1


def test_document_sanitizes_non_finite(tmp_path):
    doc = {"schema_version": 1, "x": float("inf"), "y": float("nan"), "z": [1.0, float("-inf")]}
    text = render_document(doc)
    parsed = json.loads(text)
    assert parsed["x"] == "inf" and parsed["y"] == "nan" and parsed["z"][1] == "-inf"


def test_document_to_stdout_when_no_out(sample_csvs, capsys):
    xp, yp, *_ = sample_csvs
    code = cli_main(["mmd-test", "--x", xp, "--y", yp, "--k", "2", "--seed", "4"])
    assert code == 0
    out = capsys.readouterr().out
    assert '"schema_version"' in out


def test_simulate_null_calibration(tmp_path, capsys):
    # 100-trial global-null run; the reported false positive rates must sit
    # near the nominal alpha = 0.05.  Takes about a minute.
    out = tmp_path / "null.json"
    code = cli_main(
        ["simulate", "--problem", "mean-shift", "--n", "400", "--d", "20", "--shift", "0",
         "--trials", "100", "--seed", "1", "--out", str(out)]
    )
    assert code == 0
    capsys.readouterr()
    doc = json.loads(out.read_text())
    assert doc["config"]["k"] == 10  # default k = d // 2
    for summary in doc["results"]["summaries"]:
        assert 0.01 <= summary["fpr"] <= 0.10, (summary["method"], summary["fpr"])
