import csv
import io
import json
import math

import numpy as np
import pytest

from extremal_dm import cli
from extremal_dm.extremal_solver import SolverError

QUBIT = {"type": "qubit", "h": [1.0, math.sqrt(2.0), math.e, math.pi]}
BEC = {"type": "bec", "a": 0.5, "b": 0.5, "c": 0.5}


def run(tmp_path, command, doc=None, *extra, name="out.csv"):
    args = [command]
    if doc is not None:
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(doc))
        args += ["--config", str(cfg)]
    out = tmp_path / name
    code = cli.main(args + ["--out", str(out)] + list(extra))
    text = out.read_text() if out.exists() else None
    return code, text


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_qubit(tmp_path):
    code, text = run(tmp_path, "spectrum", {"model": QUBIT})
    assert code == 0
    assert text.splitlines()[0] == "index,energy,eigenvalue"
    h = math.sqrt(2 + math.e**2 + math.pi**2)
    energies = [float(r["energy"]) for r in rows_of(text)]
    np.testing.assert_allclose(energies, [(1 - h) / 2, (1 + h) / 2], atol=1e-12)


def test_spectrum_bec_json(tmp_path):
    code, text = run(tmp_path, "spectrum", {"model": BEC}, "--format", "json", name="o.json")
    assert code == 0
    doc = json.loads(text)
    assert doc["columns"] == ["index", "energy", "eigenvalue"]
    assert doc["summary"]["found"] == doc["summary"]["expected"] == 3
    assert doc["summary"]["max_discrepancy"] < 1e-10


def test_spectrum_raw_matrix_file(tmp_path, rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    a = a + a.conj().T
    path = tmp_path / "m.json"
    path.write_text(json.dumps([[[z.real, z.imag] for z in row] for row in a]))
    code, text = run(tmp_path, "spectrum", {"model": {"type": "matrix", "path": str(path)}})
    assert code == 0
    got = [float(r["energy"]) for r in rows_of(text)]
    np.testing.assert_allclose(got, np.linalg.eigvalsh(a), atol=1e-8)


def test_spectrum_rejects_mixed_constants(tmp_path):
    code, _ = run(tmp_path, "spectrum", {"model": BEC, "constants": [0.29, 0.02]})
    assert code == cli.EXIT_INPUT


@pytest.mark.parametrize("doc", [
    {"model": {"type": "nope"}},
    {"model": {"type": "bec", "a": 1}},
    {"model": {"type": "matrix", "rows": [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]}},
    {"model": QUBIT, "bogus": 1},
    {"model": QUBIT, "constants": [0.1], "sweep": {"variable": "c2", "start": 0, "stop": 0.1, "step": 0}},
    {"model": QUBIT, "constants": [0.1], "sweep": {"variable": "c3", "start": 0, "stop": 0.1, "step": 0.1}},
    {"model": QUBIT, "constants": [0.1, 0.2], "sweep": {"variable": "h0", "start": 0, "stop": 1, "step": 1}},
])
def test_invalid_input_exit_code(tmp_path, doc):
    code, _ = run(tmp_path, "sweep", doc)
    assert code == cli.EXIT_INPUT


def test_missing_config_file(tmp_path):
    assert cli.main(["sweep", "--config", str(tmp_path / "absent.json")]) == cli.EXIT_INPUT


def test_config_from_stdin(tmp_path, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({"model": QUBIT})))
    out = tmp_path / "s.csv"
    assert cli.main(["spectrum", "--config", "-", "--out", str(out)]) == 0
    assert len(rows_of(out.read_text())) == 2


def test_sweep_flags_infeasible_points(tmp_path):
    doc = {"model": {"type": "qubit", "h": [1, 0, 0, 1]}, "constants": [0.1],
           "sweep": {"variable": "c2", "start": 0.2, "stop": 0.3, "step": 0.05}}
    code, text = run(tmp_path, "sweep", doc)
    assert code == 0
    rows = rows_of(text)
    assert list(rows[0]) == cli.SWEEP_COLUMNS
    assert [r["branch_index"] for r in rows] == ["0", "1", "0", "-1"]
    assert rows[-1]["energy"] == "nan"
    assert float(rows[2]["energy"]) == 0.5


def test_sweep_seventeen_digits_and_newlines(tmp_path):
    doc = {"model": QUBIT, "constants": [0.0],
           "sweep": {"variable": "c2", "start": 0.1, "stop": 0.1, "points": 1}}
    _, text = run(tmp_path, "sweep", doc)
    assert "\r" not in text and text.endswith("\n")
    value = text.splitlines()[1].split(",")[0]
    assert value == "0.10000000000000001"


def test_flags_override_config(tmp_path):
    doc = {"model": BEC, "samples": 5, "seed": 1, "format": "json"}
    code, text = run(tmp_path, "inequality", doc, "--samples", "7", "--seed", "2", "--format", "csv")
    assert code == 0
    rows = rows_of(text)
    assert len(rows) == 7 and list(rows[0]) == cli.INEQUALITY_COLUMNS
    assert all(r["passes"] == "true" for r in rows)
    _, again = run(tmp_path, "inequality", doc, "--samples", "7", "--seed", "2", "--format", "csv",
                   name="again.csv")
    assert again == text


def test_inequality_zero_hamiltonian(tmp_path):
    doc = {"model": {"type": "qubit", "h": [0, 0, 0, 0]}, "samples": 50}
    _, text = run(tmp_path, "inequality", doc)
    for r in rows_of(text):
        assert float(r["slack"]) == pytest.approx(math.log(2) - float(r["entropy"]), abs=1e-12)


def test_surface_single_point(tmp_path):
    doc = {"surface": {"kind": "entropy_energy", "h": [2, 2, 1], "delta": [0, 0, 1]}}
    code, text = run(tmp_path, "surface", doc)
    assert code == 0
    (row,) = rows_of(text)
    assert float(row["F"]) == pytest.approx(math.log(math.cosh(1.0)), abs=1e-15)


def test_surface_rejects_delta_one(tmp_path):
    doc = {"surface": {"kind": "entropy_energy", "delta": [0, 1, 3]}}
    assert run(tmp_path, "surface", doc)[0] == cli.EXIT_INPUT


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverError("no stationary point", 0.5)
    monkeypatch.setattr(cli, "solve_extremal", boom)
    code, text = run(tmp_path, "spectrum", {"model": BEC})
    assert code == cli.EXIT_SOLVER and text is None


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    real = cli.solve_extremal

    def corrupted(p, opts):
        sols = real(p, opts)
        sols[0].energy += 1e-3
        return sols
    monkeypatch.setattr(cli, "solve_extremal", corrupted)
    code, text = run(tmp_path, "spectrum", {"model": BEC})
    assert code == cli.EXIT_INVARIANT and text is None


def test_spectrum_missing_branch_is_invariant_failure(tmp_path, monkeypatch):
    real = cli.solve_extremal
    monkeypatch.setattr(cli, "solve_extremal", lambda p, opts: real(p, opts)[:2])
    code, text = run(tmp_path, "spectrum", {"model": BEC})
    assert code == cli.EXIT_INVARIANT
    assert text.splitlines()[-1].split(",")[1] == "nan"


def test_figure_fig1_branches_merge(tmp_path):
    code, text = run(tmp_path, "figure", None, "fig1")
    assert code == 0
    rows = rows_of(text)
    assert list(rows[0]) == ["series"] + cli.SWEEP_COLUMNS
    values = sorted({r["sweep_value"] for r in rows}, key=float)
    assert len(values) == 51 and values[-1] == "0.25"
    last = [r for r in rows if r["sweep_value"] == "0.25"]
    assert len(last) == 1 and float(last[0]["energy"]) == pytest.approx(0.5, abs=1e-12)
    assert all(sum(r["sweep_value"] == v for r in rows) == 2 for v in values[:-1])


def test_sweep_grid_endpoints():
    np.testing.assert_array_equal(cli.sweep_grid({"start": 0, "stop": 0.25, "step": 0.005})[[0, -1]], [0, 0.25])
    assert len(cli.sweep_grid({"start": 0, "stop": 1, "step": 0.3})) == 4
    with pytest.raises(cli.ConfigError):
        cli.sweep_grid({"start": 1, "stop": 0, "step": 0.1})
