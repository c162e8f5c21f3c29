from __future__ import annotations

import json
import shutil
import subprocess
from pathlib import Path

import pytest

from spgkit.cli import run
from spgkit.core import LayerFamily
from spgkit.io import load_structure, read_json
from spgkit.properties import run_property

FIXTURES = Path(__file__).parent / "fixtures"


def _sh(tmp_path: Path, *args: str) -> int:
    return run([a.replace("@", str(tmp_path)) for a in args])


def test_covering_command(tmp_path):
    code = _sh(tmp_path, "covering", "--n", "6", "--d", "3", "--out", "@/cov.json",
               "--report", "@/rep.json")
    assert code == 0
    rep = read_json(tmp_path / "rep.json")
    assert rep["covering_designs"]["layers"] >= 2
    assert all(r["passed"] for r in rep["reports"].values())


def test_build_c1_verify_roundtrip(tmp_path):
    code = _sh(tmp_path, "build-c1", "--n", "18", "--d", "4", "--seed", "1", "--out", "@/z1.json",
               "--report", "@/r1.json", "--manifest", "@/m1.json", "--jobs", "1")
    assert code == 0
    rep = read_json(tmp_path / "r1.json")
    Z = load_structure(read_json(tmp_path / "z1.json"))
    assert isinstance(Z, LayerFamily)
    for name, stored in rep["reports"].items():
        assert run_property(Z, name).to_json() == stored
    assert _sh(tmp_path, "verify", "--in", "@/z1.json", "--props", "dr,sa,ec",
               "--report", "@/v.json") == 0
    assert _sh(tmp_path, "replay", "--manifest", "@/m1.json") == 0


def test_verify_three_container_fixture(tmp_path):
    shutil.copy(FIXTURES / "three_container.json", tmp_path / "f.json")
    code = _sh(tmp_path, "verify", "--in", "@/f.json", "--props", "ec", "--report", "@/v.json")
    assert code == 1
    witness = read_json(tmp_path / "v.json")["reports"]["endpoint_count"]["witness"]
    assert witness["ridge"] == [1, 2]


def test_build_c2_strict_exit_2(tmp_path, capsys):
    code = _sh(tmp_path, "build-c2", "--n", "48", "--m", "1", "--strict")
    assert code == 2
    err = capsys.readouterr().err
    assert "pairwise_difference" in err


def test_build_c2_desk_and_diagram(tmp_path):
    code = _sh(tmp_path, "build-c2", "--n", "8", "--m", "2", "--out", "@/z2.json",
               "--report", "@/r2.json", "--diagram", "@/d.txt")
    assert code == 0
    rep = read_json(tmp_path / "r2.json")
    assert "diameter_lower_bound" in rep["stats"]
    assert rep["sections"][0]["min_identity"]
    assert "I_1,1" in (tmp_path / "d.txt").read_text()
    assert _sh(tmp_path, "diagram", "--report", "@/r2.json", "--out", "@/d2.txt") == 0
    assert (tmp_path / "d2.txt").read_text() == (tmp_path / "d.txt").read_text()


def test_theorem_mode_domain_error(tmp_path):
    assert _sh(tmp_path, "build-c2", "--n", "16", "--m", "2", "--theorem") == 64


def test_polytope_command(tmp_path):
    assert _sh(tmp_path, "polytope", "--cube", "3", "--layered-from", "0", "--verify",
               "--out", "@/c.json", "--report", "@/r.json", "--dot", "@/c.dot") == 0
    rep = read_json(tmp_path / "r.json")
    assert rep["layer_sizes"] == [1, 3, 3, 1]
    assert rep["diameter"] == rep["result_diameter"] == 3
    (tmp_path / "inc.json").write_text(json.dumps({"n": 3, "d": 2, "vertices": [[1, 2], [1, 3], [2, 3]]}))
    assert _sh(tmp_path, "polytope", "--in", "@/inc.json", "--verify", "--report", "@/r2.json") == 0


def test_rand_check(tmp_path):
    assert _sh(tmp_path, "rand-check", "--N", "16", "--report", "@/r.json") == 0
    assert read_json(tmp_path / "r.json")["right_tail_exact"] == "1/198"
    assert _sh(tmp_path, "rand-check", "--N", "24", "--mode", "mc", "--ell", "3",
               "--trials", "2000", "--report", "@/mc.json") == 0


def test_usage_errors(tmp_path):
    assert _sh(tmp_path, "frobnicate") == 64
    assert _sh(tmp_path, "covering", "--n", "6") == 64
    assert _sh(tmp_path, "covering", "--n", "6", "--d", "3", "--bogus") == 64
    assert _sh(tmp_path, "verify", "--in", "@/missing.json") == 64
    assert _sh(tmp_path, "polytope") == 64


def test_unknown_property(tmp_path):
    shutil.copy(FIXTURES / "three_container.json", tmp_path / "f.json")
    assert _sh(tmp_path, "verify", "--in", "@/f.json", "--props", "nope") == 64


def test_jobs_do_not_change_output(tmp_path):
    for jobs in ("1", "3"):
        assert _sh(tmp_path, "covering", "--n", "7", "--d", "3", "--out", f"@/c{jobs}.json",
                   "--report", f"@/r{jobs}.json", "--jobs", jobs) == 0
    _sh(tmp_path, "build-c2", "--n", "8", "--m", "2", "--report", "@/a.json", "--jobs", "1")
    _sh(tmp_path, "build-c2", "--n", "8", "--m", "2", "--report", "@/b.json", "--jobs", "4")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r3.json").read_bytes()


def test_replay_detects_tampering(tmp_path):
    assert _sh(tmp_path, "covering", "--n", "6", "--d", "3", "--out", "@/c.json",
               "--manifest", "@/m.json", "--report", "@/r.json") == 0
    m = read_json(tmp_path / "m.json")
    m["outputs"]["family"]["sha256"] = "0" * 64
    (tmp_path / "m.json").write_text(json.dumps(m))
    assert _sh(tmp_path, "replay", "--manifest", "@/m.json") == 1


@pytest.mark.skipif(shutil.which("spgkit") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = subprocess.run(["spgkit", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("spgkit ")
