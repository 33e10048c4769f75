import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bsbench import CollisionError, ParseError, SampleSet, haar_unitary
from bsbench.cli import main
from bsbench.io import (build_manifest, iter_samples, load_matrix, load_samples, matrix_from_dict,
                        save_matrix, save_samples, unitarity_deviation)


def test_matrix_round_trip(tmp_path):
    U = haar_unitary(7, seed=1)
    save_matrix(tmp_path / "u.json", U)
    np.testing.assert_array_equal(load_matrix(tmp_path / "u.json"), U)


def test_splitter_file():
    r = 1 / math.sqrt(2)
    U = matrix_from_dict({"m": 2, "entries": [[r, 0], [r, 0], [r, 0], [-r, 0]]})
    np.testing.assert_allclose(np.abs(U), r)
    assert U[1, 1].real < 0


def test_large_file_with_diagnostic(tmp_path):
    U = haar_unitary(60, seed=2) * 0.98
    save_matrix(tmp_path / "u.json", U)
    V = load_matrix(tmp_path / "u.json")
    assert V.shape == (60, 60) and unitarity_deviation(V) > 0.1


def test_truncated_entries():
    with pytest.raises(ParseError, match="expected 4 entries.*found 3"):
        matrix_from_dict({"m": 2, "entries": [[1, 0]] * 3})


def test_bad_entry_location():
    with pytest.raises(ParseError, match="row 1, column 0"):
        matrix_from_dict({"m": 2, "entries": [[1, 0], [0, 0], ["a", 0], [1, 0]]})


@pytest.mark.parametrize("doc", [[], {"m": 2}, {"m": 0, "entries": []}, {"m": 1, "entries": [[float("nan"), 0]]}])
def test_malformed_matrix(doc):
    with pytest.raises(ParseError):
        matrix_from_dict(doc)


def test_invalid_json(tmp_path):
    (tmp_path / "u.json").write_text("{nope")
    with pytest.raises(ParseError):
        load_matrix(tmp_path / "u.json")


def test_parse_samples(tmp_path):
    (tmp_path / "s.txt").write_text("0,5,12\n3,7,9\n")
    s = load_samples(tmp_path / "s.txt", 60)
    assert (s.n, s.m, len(s)) == (3, 60, 2)


def test_sorting_contract():
    assert list(iter_samples(["5,0,12"])) == [(0, 5, 12)]


def test_collision_line():
    with pytest.raises(CollisionError, match="line 1"):
        list(iter_samples(["0,0,3"]))


def test_inconsistent_length():
    with pytest.raises(ParseError, match="line 2"):
        list(iter_samples(["0,1,2", "0,1"]))


def test_out_of_range_mode():
    with pytest.raises(ParseError):
        list(iter_samples(["0,1,60"], m=60))


def test_comments_and_blanks():
    assert list(iter_samples(["# header", "", "1,2"])) == [(1, 2)]


def test_samples_round_trip(tmp_path):
    s = SampleSet(np.array([[0, 3, 9], [1, 2, 4]]), 10)
    save_samples(tmp_path / "s.txt", s)
    np.testing.assert_array_equal(load_samples(tmp_path / "s.txt", 10).patterns, s.patterns)


def test_manifest_has_no_timestamp(tmp_path):
    (tmp_path / "a").write_text("x")
    a = build_manifest("estimate", ["estimate"], {"seed": 1}, {"samples": tmp_path / "a"})
    b = build_manifest("estimate", ["estimate"], {"seed": 1}, {"samples": tmp_path / "a"})
    assert a == b and len(a["inputs"]["samples"]["sha256"]) == 64


# ---------------------------------------------------------------------------
# command line

@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["simulate", "--modes", "10", "--count", "3000", "--x", "0.9", "--seed", "3",
                 "--save-matrix", "u.json", "--out", "s.txt"]) == 0
    return tmp_path


def test_simulate_outputs(workdir):
    s = load_samples(workdir / "s.txt", 10)
    assert len(s) == 3000 and s.n == 3
    man = json.loads((workdir / "s.txt.manifest.json").read_text())
    assert man["command"] == "simulate" and man["params"]["seed"] == 3


def test_simulate_reference_noise(workdir):
    argv = ["simulate", "--x", "0.981", "--dark", "0.03", "--multi", "0.012", "--msigma", "0.01",
            "--count", "10000", "--seed", "7", "--out", "noisy.txt"]
    assert main(argv) == 0
    assert len(load_samples(workdir / "noisy.txt", 16)) == 10000


def test_simulate_config_file(workdir):
    (workdir / "cfg.json").write_text(json.dumps({"x_true": 0.9, "dark_count_prob": 0.05}))
    assert main(["simulate", "--matrix", "u.json", "--config", "cfg.json", "--count", "100",
                 "--out", "c.txt"]) == 0


def test_estimate(workdir, capsys):
    assert main(["estimate", "--samples", "s.txt", "--matrix", "u.json", "--inputs", "0,1,2",
                 "--curve", "curve.csv"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["ci_low"] <= doc["x_hat"] <= doc["ci_high"]
    assert doc["manifest"]["inputs"]["samples"]["sha256"]
    assert (workdir / "curve.csv").read_text().startswith("x,loglik\n")


def test_curve(workdir, capsys):
    assert main(["curve", "--samples", "s.txt", "--matrix", "u.json", "--grid-step", "0.01"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 102


def test_normalize(workdir, capsys):
    assert main(["normalize", "--matrix", "u.json", "--inputs", "0,1,2", "--method", "mc",
                 "--draws", "2000"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["method"] == "monte-carlo" and doc["draws"] == 2000


def test_budget(workdir):
    assert main(["budget", "--modes", "16", "--count", "3000", "--seed", "1", "--out", "b.csv"]) == 0
    lines = (workdir / "b.csv").read_text().splitlines()
    assert len(lines) == 5 and lines[0].startswith("label,")
    doc = json.loads((workdir / "b.json").read_text())
    assert len(doc["rows"]) == 4


def test_monitor_file_and_stdin(workdir, monkeypatch, capsys):
    assert main(["monitor", "--matrix", "u.json", "--stream", "s.txt", "--window", "1000",
                 "--step", "500", "--out", "m.ndjson"]) == 0
    from_file = (workdir / "m.ndjson").read_text()
    assert len(from_file.splitlines()) == 5
    import io
    monkeypatch.setattr(sys, "stdin", io.StringIO((workdir / "s.txt").read_text()))
    assert main(["monitor", "--matrix", "u.json", "--window", "1000", "--step", "500",
                 "--chunk", "7"]) == 0
    assert capsys.readouterr().out == from_file


def test_monitor_short_stream(workdir):
    assert main(["monitor", "--matrix", "u.json", "--stream", "s.txt", "--window", "5000"]) == 1


def test_accuracy(workdir, capsys):
    assert main(["accuracy", "--n-list", "2,3", "--modes", "10", "--samples-per-n", "500",
                 "--x", "0.9"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [p["n"] for p in doc["points"]] == [2, 3]


def test_missing_file_exit_code(workdir, capsys):
    assert main(["estimate", "--samples", "nope.txt", "--matrix", "u.json"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and "nope.txt" in err["message"]


def test_collision_exit_code(workdir, capsys):
    (workdir / "bad.txt").write_text("0,1,2\n0,0,3\n")
    assert main(["estimate", "--samples", "bad.txt", "--matrix", "u.json"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "CollisionError"


def test_usage_error(capsys):
    assert main(["estimate", "--bogus"]) == 2
    last = capsys.readouterr().err.strip().splitlines()[-1]
    assert json.loads(last)["error"] == "UsageError"


def test_domain_error_exit_code(workdir, capsys):
    assert main(["estimate", "--samples", "s.txt", "--matrix", "u.json", "--threshold", "2"]) == 1


def test_rerun_bit_exact(workdir):
    argv = ["estimate", "--samples", "s.txt", "--matrix", "u.json", "--norm", "mc",
            "--draws", "3000", "--seed", "11", "--out", "e.json"]
    assert main(argv) == 0
    first = (workdir / "e.json").read_bytes()
    (workdir / "e.json").unlink()
    assert main(["rerun", "e.json.manifest.json"]) == 0
    assert (workdir / "e.json").read_bytes() == first


def test_rerun_detects_changed_input(workdir, capsys):
    assert main(["estimate", "--samples", "s.txt", "--matrix", "u.json", "--out", "e.json"]) == 0
    with open(workdir / "s.txt", "a") as fh:
        fh.write("0,1,2\n")
    assert main(["rerun", "e.json.manifest.json"]) == 1


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "bsbench.cli", "--version"], capture_output=True, text=True)
    assert out.stdout.strip().startswith("bsbench ")


@pytest.mark.parametrize("text", ["{bad", "[1, 2]", '{"x_true": 0.9, "colour": 1}'])
def test_bad_config_file(workdir, text):
    (workdir / "cfg.json").write_text(text)
    assert main(["simulate", "--config", "cfg.json", "--count", "10"]) == 2


def test_config_out_of_range(workdir):
    (workdir / "cfg.json").write_text('{"dark_count_prob": 1.5}')
    assert main(["simulate", "--config", "cfg.json", "--count", "10"]) == 1
