import csv
import json

import numpy as np
import pytest

from korncurl import cli, export, solvers
from korncurl.korn import edge_space
from korncurl.mesh import FACE_REGIONS


def records(capsys):
    return [json.loads(line) for line in capsys.readouterr().out.splitlines() if line.startswith("{")]


def test_identities(capsys):
    assert cli.run(["identities", "--n", "200"]) == 0
    (rec,) = records(capsys)
    assert rec["passed"] and rec["config"]["command"] == "identities"


def test_korn_record(capsys, tmp_path):
    out = tmp_path / "runs.jsonl"
    assert cli.run(["korn", "-k", "2", "--out", str(out)]) == 0
    (rec,) = records(capsys)
    assert rec["k"] == 2 and rec["p"] == 2.0 and rec["region"] == "whole-boundary"
    assert abs(rec["lambda_min"] - 0.554196280544619) < 1e-9
    assert rec["seed"] == 0 and rec["version"]
    stored = export.read_jsonl(out)
    assert stored[0]["constant"] == rec["constant"]
    assert export.all_finite(stored[0])


def test_korn_no_bc(capsys):
    assert cli.run(["korn", "-k", "1", "--no-bc"]) == 0
    (rec,) = records(capsys)
    assert rec["kernel_dim"] == 3 and rec["region"] is None


def test_sweep_csv(capsys, tmp_path):
    path = tmp_path / "sweep.csv"
    assert cli.run(["korn", "--sweep", "1..2", "--csv", str(path)]) == 0
    rows = list(csv.DictReader(path.open()))
    assert tuple(rows[0]) == export.CSV_COLUMNS
    assert [int(r["k"]) for r in rows] == [1, 2]
    assert all(float(r["constant"]) > 0 for r in rows)


@pytest.mark.parametrize("argv", [
    ["korn", "--p", "1"],
    ["korn", "--p", "nan"],
    ["korn", "--region", "face-q7"],
    ["korn", "-k", "0"],
    ["korn", "--sweep", "3..1"],
    ["korn", "--no-bc", "--p", "1.5"],
    ["solve", "pcurlcurl", "--p", "2.5"],
    ["solve", "elastic"],
    ["solve", "micromorphic", "-f", "1"],
    ["verify", "--mode", "nope"],
    ["mesh"],
    ["frobnicate"],
])
def test_config_errors(argv, tmp_path, capsys):
    out = tmp_path / "never.jsonl"
    assert cli.run(argv + (["--out", str(out)] if argv[0] in ("korn", "solve") else [])) == 2
    assert not out.exists()


def test_thread_env(monkeypatch, capsys):
    monkeypatch.setenv("KORN_CURL_THREADS", "zero")
    assert cli.run(["identities", "--n", "10"]) == 2
    monkeypatch.setenv("KORN_CURL_THREADS", "1")
    assert cli.run(["identities", "--n", "10"]) == 0


def test_no_convergence_exit(monkeypatch, capsys):
    def stall(*a, **kw):
        raise solvers.NoConvergence("stalled", solvers.SolveReport(0.0, converged=False))
    monkeypatch.setattr(solvers, "solve_pcurlcurl", stall)
    assert cli.run(["solve", "pcurlcurl", "-k", "1"]) == 3
    assert "no convergence" in capsys.readouterr().err


def test_violation_exit(monkeypatch, capsys):
    from korncurl import tensor3
    monkeypatch.setattr(tensor3, "identity_suite", lambda n, seed: {"broken": 1.0})
    assert cli.run(["identities"]) == 4


@pytest.mark.parametrize("problem", ["pcurlcurl", "micromorphic", "plasticity"])
def test_solve_commands(problem, tmp_path, capsys):
    vtk = tmp_path / "sol.vtk"
    assert cli.run(["solve", problem, "-k", "1", "--vtk", str(vtk)]) == 0
    (rec,) = records(capsys)
    assert rec["problem"] == problem and np.isfinite(rec["energy"])
    text = vtk.read_text()
    assert "TENSORS P double" in text and "TENSORS CurlP double" in text and "TENSORS symP double" in text
    assert ("VECTORS u double" in text) == (problem != "pcurlcurl")


@pytest.mark.parametrize("mode", ["compatible", "lemma", "necas"])
def test_verify_modes(mode, capsys):
    assert cli.run(["verify", "-k", "1", "--mode", mode, "--samples", "50"]) == 0
    (rec,) = records(capsys)
    assert rec["passed"] and rec["mode"] == mode


def test_determinism(capsys):
    cli.run(["verify", "-k", "1", "--mode", "lemma", "--samples", "30", "--seed", "5"])
    a = records(capsys)[0]["max_ratio"]
    cli.run(["verify", "-k", "1", "--mode", "lemma", "--samples", "30", "--seed", "5"])
    assert records(capsys)[0]["max_ratio"] == a


def test_mesh_vtk(cube2, tmp_path, capsys):
    path = tmp_path / "mesh.vtk"
    assert cli.run(["mesh", "-k", "2", "--vtk", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0" and lines[3] == "DATASET UNSTRUCTURED_GRID"
    i = lines.index(f"CELL_TYPES {cube2.n_cells + len(cube2.boundary_faces)}")
    types = lines[i + 1:i + 1 + cube2.n_cells + len(cube2.boundary_faces)]
    assert types.count("10") == cube2.n_cells and types.count("5") == len(cube2.boundary_faces)
    j = lines.index("SCALARS region_id int 1")
    ids = np.array(lines[j + 2:j + 2 + len(types)], dtype=int)
    assert np.all(ids[:cube2.n_cells] == -1)
    assert set(ids[cube2.n_cells:]) == set(range(len(FACE_REGIONS)))


def test_fields_vtk_values(cube1, tmp_path):
    space = edge_space(cube1)
    A = np.arange(9.0).reshape(3, 3)
    from korncurl.fespace import interpolate
    P = interpolate(space, lambda x: np.broadcast_to(A, (len(x), 3, 3)))
    path = tmp_path / "f.vtk"
    export.write_fields_vtk(path, cube1, P)
    lines = path.read_text().splitlines()
    i = lines.index("TENSORS P double")
    first = np.array([l.split() for l in lines[i + 1:i + 4]], dtype=float)
    assert np.allclose(first, A, atol=1e-13)
    i = lines.index("TENSORS CurlP double")
    assert np.allclose(np.array(lines[i + 1].split(), dtype=float), 0, atol=1e-12)


def test_jsonl_roundtrip(tmp_path):
    path = tmp_path / "r.jsonl"
    recs = [{"a": np.float64(1.5), "b": np.arange(3), "c": {"d": np.int64(2)}}, {"x": float("inf")}]
    export.append_jsonl(path, recs[:1])
    export.append_jsonl(path, recs[1:])
    back = export.read_jsonl(path)
    assert back[0] == {"a": 1.5, "b": [0, 1, 2], "c": {"d": 2}}
    assert not export.all_finite(back[1])
