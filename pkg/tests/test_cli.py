from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from artifact.cli import MANIFEST, main, resolve_params
from cli_cases import cases, write_inputs


@pytest.fixture(scope="module")
def argsets(tmp_path_factory):
    return cases(write_inputs(tmp_path_factory.mktemp("inputs")))


def _run(argv: list[str], out: Path, threads: int = 1) -> int:
    return main([argv[0], "--out", str(out), "--threads", str(threads), *argv[1:]])


def _files(d: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != MANIFEST}


@pytest.mark.parametrize(
    "name",
    ["simulate-z", "simulate-x", "simulate-x-backaction", "demon", "spectra", "dynamics", "duffing",
     "calibrate", "calibrate-chi", "calibrate-eta", "validate", "wigner"],
)
def test_subcommand_is_thread_independent(name, argsets, tmp_path):
    assert _run(argsets[name], tmp_path / "a", threads=1) == 0
    assert _run(argsets[name], tmp_path / "b", threads=3) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a and a == b


def test_reference_run_file_set(tmp_path):
    argv = ["simulate-z", "--k", "1", "--eta", "0.35", "--dt", "20e-9", "--omega-r", "0.6e6", "--ntraj", "100", "--seed", "7"]
    assert _run(argv, tmp_path) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert len([n for n in names if n.startswith("traj_")]) == 100
    assert "summary.csv" in names and MANIFEST in names
    first = (tmp_path / "traj_00.csv").read_text().splitlines()
    assert first[0].startswith("# schema: artifact/simulate-z/trajectory/1")


def test_manifest_contents_and_rerun(argsets, tmp_path):
    assert _run(argsets["demon"], tmp_path / "a") == 0
    man = json.loads((tmp_path / "a" / MANIFEST).read_text())
    assert man["subcommand"] == "demon" and man["seed"] == 2
    assert {"params", "version", "wall_time_s", "outputs", "threads"} <= set(man)
    assert main(["demon", "--out", str(tmp_path / "b"), "--config", str(tmp_path / "a" / MANIFEST)]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_manifest_for_other_subcommand_rejected(argsets, tmp_path, capsys):
    assert _run(argsets["wigner"], tmp_path / "a") == 0
    assert main(["duffing", "--out", str(tmp_path / "b"), "--config", str(tmp_path / "a" / MANIFEST)]) == 2


def test_zero_trajectories_rejected_before_writing(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["simulate-z", "--out", str(out), "--ntraj", "0"]) == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "validation" and err["key"] == "ntraj"
    assert not out.exists()


@pytest.mark.parametrize(
    "argv, key",
    [
        (["simulate-z", "--k", "20", "--dt", "20e-9"], None),
        (["simulate-z", "--eta", "1.5"], "eta"),
        (["simulate-z", "--filter", "kalman"], "filter"),
        (["simulate-z", "--ntraj", "two"], "ntraj"),
        (["simulate-x", "--dt", "1e-7"], "dt"),
        (["wigner", "--points", "2"], "points"),
        (["calibrate", "--mode", "lorentzian"], "input"),
    ],
)
def test_validation_errors_are_structured(argv, key, tmp_path, capsys):
    assert _run(argv, tmp_path / "o") == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "validation"
    if key:
        assert err["key"] == key
    assert not (tmp_path / "o").exists()


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k = 1\nbogus = 3\n")
    assert main(["simulate-z", "--out", str(tmp_path / "o"), "--config", str(cfg)]) == 2
    assert json.loads(capsys.readouterr().err.strip())["key"] == "bogus"


def test_missing_config_file(tmp_path, capsys):
    assert main(["wigner", "--out", str(tmp_path / "o"), "--config", str(tmp_path / "nope.cfg")]) == 2
    assert json.loads(capsys.readouterr().err.strip())["key"] == "config"


def test_precedence_flags_over_config_over_defaults():
    p = resolve_params("simulate-z", {"eta": "0.5"}, {"eta": "0.2", "k": "3"})
    assert p["eta"] == 0.5 and p["k"] == 3.0 and p["ntraj"] == 100


def test_config_file_applies(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nstate = coherent\nalpha-re = 1.5   # trailing\npoints = 21\n")
    assert main(["wigner", "--out", str(tmp_path / "o"), "--config", str(cfg)]) == 0
    man = json.loads((tmp_path / "o" / MANIFEST).read_text())
    assert man["params"]["state"] == "coherent" and man["params"]["alpha-re"] == 1.5


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ARTIFACT_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["spectra"]) == 0
    assert (tmp_path / "env" / MANIFEST).exists()


def test_json_format(tmp_path):
    assert main(["duffing", "--out", str(tmp_path), "--format", "json", "--dtilde-n", "3", "--drive-n", "3"]) == 0
    docs = [json.loads(p.read_text()) for p in tmp_path.glob("*.json") if p.name != MANIFEST]
    assert docs and all(d["schema"].startswith("artifact/duffing/") for d in docs)


def test_numerical_failure_exit_code(tmp_path, capsys):
    bad = tmp_path / "flat.csv"
    bad.write_text("".join(f"{i},{1.0}\n" for i in range(20)))
    code = main(["calibrate", "--mode", "chi", "--out", str(tmp_path / "o"), "--input", str(bad)])
    assert code in (2, 3)
    flat = tmp_path / "sweep.csv"
    flat.write_text("".join(f"1.0,0.1,{i}\n" for i in range(8)))
    assert main(["calibrate", "--mode", "chi", "--out", str(tmp_path / "o"), "--input", str(flat)]) == 3
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "numerical"


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "artifact.cli", "spectra", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / MANIFEST).exists()
