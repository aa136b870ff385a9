"""
コマンドライン
"""
import json

import pandas as pd
import pytest

from main import main
from utils.triangulation_io import load_decorated


@pytest.fixture
def config_path(config, tmp_path):
    path = tmp_path / "config.ini"
    with open(path, "w", encoding="utf-8") as f:
        config.write(f)
    return str(path)


@pytest.fixture
def run(config_path, capsys):
    def _run(*argv):
        code = main(["--config", config_path, *map(str, argv)])
        return code, capsys.readouterr().out
    return _run


@pytest.fixture
def simplex_file(run, tmp_path):
    path = tmp_path / "simplex.json"
    code, _ = run("sample", "simplex-boundary", "-o", path, "--chain", tmp_path / "chain.json")
    assert code == 0
    return path


def test_sample(simplex_file, tmp_path):
    tri, decoration = load_decorated(simplex_file)
    assert tri.n_tets == 5
    assert len(json.loads((tmp_path / "chain.json").read_text(encoding="utf-8"))["chain"]) == 4


def test_transit_single_move(run, tmp_path):
    source = tmp_path / "double.json"
    run("sample", "double-tetrahedron", "-o", source)
    target = tmp_path / "bubbled.json"
    code, out = run("transit", source, "--move", "bubble", "--site", "0:3", "-o", target)
    assert code == 0
    assert json.loads(out)["tetrahedra"] == 4
    assert load_decorated(target)[0].n_vertices == 5


def test_transit_replay_with_witness(run, simplex_file, tmp_path):
    target = tmp_path / "moved.json"
    witness = tmp_path / "witness.json"
    code, out = run("transit", simplex_file, "--replay", tmp_path / "chain.json",
                    "-o", target, "--witness", witness)
    assert code == 0
    assert len(json.loads(out)["moves"]) == 4
    assert witness.exists()


def test_transit_needs_site(run, simplex_file, tmp_path):
    code, _ = run("transit", simplex_file, "--move", "2-3", "-o", tmp_path / "x.json")
    assert code == 2


def test_idealize(run, simplex_file, tmp_path):
    edges = tmp_path / "edges.csv"
    code, out = run("idealize", simplex_file, "-o", tmp_path / "ideal.json", "--edge-csv", edges)
    assert code == 0
    assert json.loads(out)["passed"]
    assert len(pd.read_csv(edges, encoding="utf-8-sig")) == 10


def test_statesum_and_store(run, tmp_path):
    source = tmp_path / "double.json"
    run("sample", "double-tetrahedron", "-o", source)
    code, out = run("statesum", source, "--N", 3, "--store")
    assert code == 0
    first = json.loads(out)
    assert first["N"] == 3
    assert "plan" in first

    code, out = run("statesum", source, "--N", 3, "--store")
    cached = json.loads(out)
    assert "plan" not in cached
    assert cached["log_abs_k"] == pytest.approx(first["log_abs_k"])


def test_statesum_emit_fields(run, tmp_path):
    source = tmp_path / "double.json"
    run("sample", "double-tetrahedron", "-o", source)
    code, out = run("statesum", source, "--N", 3, "--plan", "naive", "--emit", "h,k")
    assert code == 0
    assert out.startswith("h: ")
    assert "k: " in out


@pytest.mark.parametrize("argv", [["--N", 4], ["--emit", "volume"]])
def test_statesum_errors(run, tmp_path, argv):
    source = tmp_path / "double.json"
    run("sample", "double-tetrahedron", "-o", source)
    code, _ = run("statesum", source, *argv)
    assert code == 2


def test_missing_input(run, tmp_path):
    code, _ = run("statesum", tmp_path / "absent.json")
    assert code == 2


def test_volume(run, tmp_path):
    source = tmp_path / "figure8.json"
    run("sample", "figure-eight", "-o", source)
    report = tmp_path / "volume.json"
    code, _ = run("volume", source, "-o", report, "--csv", tmp_path / "volume.csv")
    assert code == 0
    data = json.loads(report.read_text(encoding="utf-8"))
    assert data["total"] == pytest.approx(2.029883212819, abs=1e-9)


def test_scissors(run, simplex_file, tmp_path):
    output = tmp_path / "class.json"
    code, _ = run("scissors", simplex_file, "--witness", tmp_path / "chain.json", "-o", output)
    assert code == 0
    data = json.loads(output.read_text(encoding="utf-8"))
    assert data["witness_verified"]


def test_asymptotics_csv(run, tmp_path):
    source = tmp_path / "double.json"
    run("sample", "double-tetrahedron", "-o", source)
    output = tmp_path / "growth.csv"
    code, _ = run("asymptotics", source, "--N", "3:5:2", "--emit", "csv", "-o", output)
    assert code == 0
    assert list(pd.read_csv(output, encoding="utf-8-sig")["N"]) == [3, 5]
