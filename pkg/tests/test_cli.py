"""CLI behavior: exit codes, determinism, command round trips."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from vbgroupoids import io as vio
from vbgroupoids.cli import main
from vbgroupoids.groupoid import cyclic_groupoid
from vbgroupoids.linalg import Matrix
from vbgroupoids.ruth import make_ruth


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, [json.loads(line) for line in out.splitlines() if line]


@pytest.fixture
def sign_file(tmp_path):
    z2 = cyclic_groupoid(2)
    sign = make_ruth(z2, (1,), (0,), rho_e={1: Matrix.from_rows([[-1]])})
    path = tmp_path / "sign.json"
    path.write_text(
        vio.dumps_instance({"z2": vio.groupoid_to_json(z2), "sign": vio.ruth_to_json(sign, "z2")})
    )
    return path


def test_check_pass_exit_zero(sign_file, capsys):
    code, events = run_cli(["check", str(sign_file)], capsys)
    assert code == 0
    assert events[-1]["exit"] == 0
    assert all(e["ok"] for e in events if e["event"] == "check")


def test_check_corrupted_exit_one(tmp_path, capsys):
    z2 = cyclic_groupoid(2)
    sign = make_ruth(z2, (1,), (0,), rho_e={1: Matrix.from_rows([[-1]])})
    data = vio.ruth_to_json(sign, "z2")
    data["rhoE"]["1"] = [["2"]]
    payload = json.loads(vio.dumps_instance({"z2": vio.groupoid_to_json(z2), "bad": data}))
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    code, events = run_cli(["check", str(path)], capsys)
    assert code == 1


def test_missing_reference_exit_two(tmp_path, capsys):
    path = tmp_path / "dangling.json"
    path.write_text(json.dumps({"format": 1, "objects": {"r": {"type": "ruth", "base": "nope"}}}))
    code, events = run_cli(["check", str(path)], capsys)
    assert code == 2
    assert events[0]["kind"] == "parse"


def test_parse_error_exit_two(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    code, _ = run_cli(["check", str(path)], capsys)
    assert code == 2


def test_groth_split_round_trip_bytes(sign_file, tmp_path, capsys):
    out1 = tmp_path / "o1"
    code, _ = run_cli(["groth", str(sign_file), "sign", "--out", str(out1)], capsys)
    assert code == 0
    groth_path = out1 / "groth-sign.json"
    code, _ = run_cli(["split", str(groth_path), "sign.groth", "--out", str(out1)], capsys)
    assert code == 0
    split_payload = json.loads((out1 / "split-sign.groth.json").read_text())
    original = json.loads(sign_file.read_text())
    recovered = dict(split_payload["objects"]["sign.groth.split"])
    recovered["base"] = "z2"
    assert recovered == original["objects"]["sign"]


def test_gen_deterministic_bytes(tmp_path, capsys):
    code1 = main(["gen", "--recipe", "gauge:z3", "--seed", "7", "--out", str(tmp_path / "a.json")])
    first = (tmp_path / "a.json").read_bytes()
    code2 = main(["gen", "--recipe", "gauge:z3", "--seed", "7", "--out", str(tmp_path / "b.json")])
    assert code1 == code2 == 0
    assert first == (tmp_path / "b.json").read_bytes()
    capsys.readouterr()


def test_gen_unknown_recipe_exit_two(capsys):
    code, events = run_cli(["gen", "--recipe", "nope"], capsys)
    assert code == 2


def test_report_bytes_deterministic(sign_file, capsys):
    code, _ = run_cli(["cohomology", str(sign_file), "sign"], capsys)
    out1 = subprocess.run(
        [sys.executable, "-m", "vbgroupoids.cli", "cohomology", str(sign_file), "sign"],
        capture_output=True,
    )
    out2 = subprocess.run(
        [sys.executable, "-m", "vbgroupoids.cli", "cohomology", str(sign_file), "sign"],
        capture_output=True,
    )
    assert out1.stdout == out2.stdout
    assert out1.returncode == 0


def test_morita_verdict_exit(sign_file, capsys, tmp_path):
    # a VB-Morita certificate on a generated cech pullback map
    code, _ = run_cli(["gen", "--recipe", "cech-pullback:z2", "--seed", "0", "--out", str(tmp_path)], capsys)
    assert code == 0
    gen_path = tmp_path / "gen-cech-pullback-z2-0.json"
    code, events = run_cli(["morita", str(gen_path), "psi"], capsys)
    assert code in (0, 1)
    assert events[0]["event"] == "vb-morita"


def test_descend_cli(tmp_path, capsys):
    code, _ = run_cli(
        ["gen", "--recipe", "perturbed-pullback:pt", "--seed", "2", "--out", str(tmp_path)], capsys
    )
    assert code == 0
    path = tmp_path / "gen-perturbed-pullback-pt-2.json"
    code, events = run_cli(
        ["descend", str(path), "--cover", "cover", "--object", "object", "--out", str(tmp_path)],
        capsys,
    )
    assert code == 0
    assert events[0]["comparison_invertible"] is True
    written = [e for e in events if e["event"] == "written"]
    assert written


def test_pmax_env_override(sign_file, capsys, monkeypatch):
    monkeypatch.setenv("VBG_PMAX", "2")
    code, events = run_cli(["cohomology", str(sign_file), "sign"], capsys)
    assert code == 0
    degrees = [d["p"] for d in events[0]["degrees"]]
    assert max(degrees) == 1
