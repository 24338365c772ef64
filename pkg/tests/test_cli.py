import json
import subprocess
import sys

import pytest

from torsorlab import cli
from torsorlab.cli import CACHE_ENV, EXIT_DEPENDENCY, EXIT_REFUSED, EXIT_USAGE, RunConfig, main


def _main(args):
    try:
        main(args)
    except SystemExit as exc:
        return exc.code
    return 0


def test_geometry_artifact(tmp_path):
    out = tmp_path / "g.json"
    assert _main(["geometry", "--family", "X", "--n", "2", "-o", str(out), "--cache-dir", str(tmp_path / "c")]) == 0
    art = json.loads(out.read_text())
    assert art["result"]["a"] == "1" and art["result"]["b"] == 2
    assert art["command"] == "geometry" and art["seed"] == 0
    assert "workers" not in art["config"] and "output" not in art["config"]
    timing = json.loads((tmp_path / "g.json.timing.json").read_text())
    assert set(timing) == {"elapsed_s", "cache_hit", "workers", "key"} and timing["cache_hit"] is False


def test_count_matches_library(tmp_path):
    out = tmp_path / "c.json"
    _main(["count", "--family", "X", "--n", "2", "--B", "10,100", "-o", str(out), "--no-cache"])
    entries = json.loads(out.read_text())["result"]["entries"]
    assert [e["quotient_count"] for e in entries] == ["2380", "339224"]
    assert [e["raw_count"] for e in entries] == [str(8 * 2380), str(8 * 339224)]


def test_oracle_method_agrees(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    _main(["count", "--family", "X", "--n", "3", "--B", "200", "-o", str(a), "--no-cache"])
    _main(["count", "--family", "X", "--n", "3", "--B", "200", "--method", "oracle", "-o", str(b), "--no-cache"])
    qa = json.loads(a.read_text())["result"]["entries"][0]
    qb = json.loads(b.read_text())["result"]["entries"][0]
    assert qa["quotient_count"] == qb["quotient_count"]


def test_cache_hit_is_byte_identical(tmp_path):
    args = ["density", "--family", "X", "--n", "2", "--quantity", "omega_inf", "--samples", "65536",
            "--cache-dir", str(tmp_path / "cache")]
    first, second = tmp_path / "1.json", tmp_path / "2.json"
    _main(args + ["-o", str(first)])
    _main(args + ["-o", str(second), "--workers", "3"])
    assert first.read_bytes() == second.read_bytes()
    assert json.loads((tmp_path / "2.json.timing.json").read_text())["cache_hit"] is True
    assert len(list((tmp_path / "cache").iterdir())) == 1


def test_cache_env_variable(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "envcache"))
    _main(["geometry", "--family", "Xprime", "--n", "3", "-o", str(tmp_path / "g.json")])
    assert any((tmp_path / "envcache").iterdir())


def test_workers_do_not_change_artifact(tmp_path):
    outs = []
    for w in (1, 2, 4):
        out = tmp_path / f"w{w}.json"
        _main(["count-fibers", "--family", "Xprime", "--n", "2", "--B", "1e12", "--workers", str(w),
               "-o", str(out), "--no-cache"])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_key_depends_on_seed_not_workers():
    a = RunConfig("density", "X", 2, seed=1, workers=1)
    b = RunConfig("density", "X", 2, seed=1, workers=8, output="x", cache_dir="y", use_cache=False)
    c = RunConfig("density", "X", 2, seed=2)
    assert a.cache_key() == b.cache_key() != c.cache_key()


def test_csv_line_endings(tmp_path):
    out = tmp_path / "r.csv"
    _main(["bt-refute", "--m-max", "4", "-o", str(out), "--no-cache"])
    data = out.read_bytes()
    assert b"\r" not in data and data.endswith(b"\n")
    assert data.splitlines()[0] == b"m,log_ratio" and len(data.splitlines()) == 6


def test_usage_errors(tmp_path):
    assert _main(["geometry", "--family", "Y", "--n", "2"]) == EXIT_USAGE
    assert _main(["count", "--family", "X", "--n", "2"]) == EXIT_USAGE
    assert _main(["constant", "--family", "X", "--n", "2", "--format", "csv", "--no-cache"]) == EXIT_USAGE
    with pytest.raises(Exception):
        RunConfig("count", "X", 0)


def test_oracle_refusal_exit_code(tmp_path):
    code = _main(["count", "--family", "X", "--n", "2", "--B", "30000", "--method", "oracle", "--no-cache",
                  "-o", str(tmp_path / "x.json")])
    assert code == EXIT_REFUSED


def test_dependency_exit_code(tmp_path, monkeypatch):
    def broken(cfg):
        raise cli.DependencyError("scipy missing")

    monkeypatch.setattr(cli, "compute", broken)
    assert _main(["geometry", "--family", "X", "--n", "2", "--no-cache"]) == EXIT_DEPENDENCY


def test_console_entry_point_and_verify_all(tmp_path):
    out = tmp_path / "summary.json"
    proc = subprocess.run([sys.executable, "-m", "torsorlab", "verify-all", "--quick", "--only", "1,9",
                           "-o", str(out)], capture_output=True, text=True, timeout=600)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith("criterion")]
    assert len(lines) == 2 and all(" PASS " in ln for ln in lines)
    assert proc.returncode == 0
    assert [r["number"] for r in json.loads(out.read_text())] == [1, 9]
