import json
from pathlib import Path

from cavitypress.cli import main

from conftest import LOG_PHI

MODELS = Path(__file__).resolve().parent.parent / "models"


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path / "out"), "--no-cache"])


def load_json(tmp_path, cmd):
    return json.loads((tmp_path / "out" / f"{cmd}.json").read_text())


def test_check_golden_mean(tmp_path, capsys):
    assert run(tmp_path, "check", "--spec", str(MODELS / "hardcore_1d.model")) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("check: PASS")
    assert "safe symbol 0" in line and "condition (D) pass" in line and "TSSM(g=2) pass" in line


def test_pressure_empty_schedule_exit_2(tmp_path):
    spec = tmp_path / "empty.model"
    spec.write_text((MODELS / "hardcore_1d.model").read_text().replace("n_max 12", "n_max 0"))
    assert run(tmp_path, "pressure", "--spec", str(spec)) == 2


def test_cavity_hardcore_1d(tmp_path, capsys):
    assert run(tmp_path, "cavity", "--spec", str(MODELS / "hardcore_1d.model")) == 0
    doc = load_json(tmp_path, "cavity")
    iv = doc["results"]["estimate"]["interval"]
    assert iv["lo"] <= LOG_PHI <= iv["hi"] and doc["verdict"]["pass"]
    assert "timestamp" in doc
    assert capsys.readouterr().out.startswith("cavity: PASS")
    assert (tmp_path / "out" / "cavity.csv").exists() and (tmp_path / "out" / "cavity.png").exists()


def test_parse_error_exit_1(tmp_path):
    spec = tmp_path / "bad.model"
    spec.write_text("group\n  rank 1\n  bogus 3\n")
    assert run(tmp_path, "pressure", "--spec", str(spec)) == 1


def test_tolerance_failure_exit_3(tmp_path):
    assert run(tmp_path, "pressure", "--spec", str(MODELS / "hardcore_1d.model"), "--tol", "1e-9") == 3


def test_budget_exit_4(tmp_path):
    assert run(tmp_path, "pressure", "--spec", str(MODELS / "hardcore_1d.model"), "--budget", "2") == 4


def test_csv_columns(tmp_path):
    run(tmp_path, "pressure", "--spec", str(MODELS / "hardcore_1d.model"), "--no-plot")
    lines = (tmp_path / "out" / "pressure.csv").read_text().splitlines()
    assert lines[0] == "n,h_count,lo,hi,model_hash"
    n, hc, lo, hi, mh = lines[-1].split(",")
    assert int(n) == 12 and float(lo) <= float(hi) and len(mh) == 16
    assert not (tmp_path / "out" / "pressure.png").exists()


def test_every_number_is_annotated(tmp_path):
    run(tmp_path, "cavity", "--spec", str(MODELS / "hardcore_1d.model"), "--no-plot")
    doc = load_json(tmp_path, "cavity")

    def walk(obj, key=None):
        if isinstance(obj, dict):
            if {"lo", "hi"} <= obj.keys():
                assert "width" in obj or "stderr" in obj
            for k, v in obj.items():
                walk(v, k)
        elif isinstance(obj, list):
            for v in obj:
                walk(v, key)

    walk(doc["results"])


def test_cache_roundtrip_and_admin(tmp_path, capsys):
    cache = tmp_path / "cache"
    spec = str(MODELS / "hardcore_1d.model")
    argv = ["decompose", "--spec", spec, "--out", str(tmp_path / "o"), "--cache", str(cache), "--no-plot"]
    assert main(argv) == 0
    first = (tmp_path / "o" / "decompose.csv").read_bytes()
    assert main(argv) == 0
    assert (tmp_path / "o" / "decompose.csv").read_bytes() == first
    capsys.readouterr()
    assert main(["cache", "stats", "--dir", str(cache)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["entries"] == 1 and stats["hits"] == 1 and stats["misses"] == 1
    assert main(["cache", "verify", "--dir", str(cache), "--fraction", "1"]) == 0
    assert "0 corrupt, 0 mismatched" in capsys.readouterr().out
    assert main(["cache", "gc", "--dir", str(cache), "--max-age-days", "0"]) == 0


def test_cache_missing_dir_exit_2(tmp_path):
    assert main(["cache", "stats", "--dir", str(tmp_path / "nope")]) == 2
