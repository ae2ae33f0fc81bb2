import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest

from fibrelin.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main
from fibrelin.ode import Trajectory

SCHEMA = json.loads(resources.files("fibrelin").joinpath("data/report.schema.json").read_text())


def validate(doc):
    jsonschema.validate(doc, SCHEMA)
    return doc


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fixture_path(data_dir):
    return data_dir / "example.fl"


class TestAnalyze:
    def test_text(self, capsys, fixture_path):
        code, out, _ = run(capsys, "analyze", fixture_path)
        assert code == EXIT_OK
        assert "relative degree" in out.lower()
        assert "u + x1*x2" in out
        assert "-x1*(1 + x2*exp(x2))" in out

    def test_json(self, capsys, fixture_path):
        code, out, _ = run(capsys, "analyze", fixture_path, "--json", "--point", "0,0,0")
        doc = validate(json.loads(out))
        assert code == EXIT_OK and doc["pass"]
        assert doc["r"] == 2
        assert doc["det_at_point"] == -1.0
        assert doc["phi"] == ["x3", "x2"]
        assert doc["psi"] == "u + x1*x2"
        assert doc["zero_dynamics"]["symbolic"] == ["-x1*(1 + x2*exp(x2))", "0", "0"]
        assert doc["zero_dynamics"]["depends_on_input"] is False

    def test_byte_stable(self, capsys, fixture_path):
        first = run(capsys, "analyze", fixture_path, "--json")[1]
        second = run(capsys, "analyze", fixture_path, "--json")[1]
        assert first == second

    def test_heuristic_completion(self, capsys, data_dir):
        code, out, _ = run(capsys, "analyze", data_dir / "example_nocomplement.fl", "--json")
        doc = validate(json.loads(out))
        assert code == EXIT_OK
        assert doc["completion_source"] == "heuristic"
        assert doc["zero_dynamics"]["symbolic"] == ["-x1 + u*exp(x2)", "0", "0"]
        assert doc["zero_dynamics"]["depends_on_input"] is True

    def test_out_file(self, capsys, fixture_path, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run(capsys, "analyze", fixture_path, "--json", "--out", target)
        assert code == EXIT_OK and out == ""
        validate(json.loads(target.read_text()))

    def test_malformed_file(self, capsys, tmp_path, fixture_path):
        bad = tmp_path / "bad.fl"
        bad.write_text(fixture_path.read_text().replace("g = [", "g = [exp(x2, "))
        code, out, _ = run(capsys, "analyze", bad)
        doc = validate(json.loads(out))
        assert code == EXIT_INPUT and doc["exit_code"] == EXIT_INPUT
        assert doc["error"]["line"] is not None

    def test_missing_file(self, capsys, tmp_path):
        code, out, _ = run(capsys, "analyze", tmp_path / "nope.fl")
        assert code == EXIT_INPUT
        validate(json.loads(out))

    def test_bad_point(self, capsys, fixture_path):
        code, out, _ = run(capsys, "analyze", fixture_path, "--point", "1,2")
        assert code == EXIT_INPUT

    def test_singular_point_is_numeric_error(self, capsys, tmp_path):
        f = tmp_path / "cubic.fl"
        f.write_text('system "cubic"\nstates x1 x2\ninput u\nf = [0, x1]\ng = [0, 1]\nh = x2\n'
                     'complement = [x1^3]\npoint = [0, 0]\n')
        code, out, _ = run(capsys, "analyze", f, "--json")
        assert code == EXIT_NUMERIC
        validate(json.loads(out))


class TestSimulate:
    def test_zero_mode(self, capsys, fixture_path):
        code, out, err = run(capsys, "simulate", fixture_path, "--mode", "zero", "--x0", "1,0,0")
        assert code == EXIT_OK
        tr = Trajectory.from_csv(out)
        assert tr.final[0] == pytest.approx(math.exp(-1), abs=1e-6)
        summary = validate(json.loads(err))
        assert summary["final"]["x1"] == pytest.approx(0.367879, abs=1e-6)
        assert summary["warnings"] == []

    def test_linear_from_rest(self, capsys, fixture_path):
        code, out, _ = run(capsys, "simulate", fixture_path, "--mode", "linear", "--x0", "0,0")
        assert code == EXIT_OK
        assert out.splitlines()[0] == "t,z1,z2,v"
        assert np.all(Trajectory.from_csv(out).states == 0)

    def test_lifted_projects_onto_linear(self, capsys, fixture_path, example_nf, tmp_path):
        lin_csv, lifted_csv = tmp_path / "lin.csv", tmp_path / "lifted.csv"
        run(capsys, "simulate", fixture_path, "--mode", "linear", "--x0", "0.3,-0.7",
            "--input", "sin(t)", "--out", lin_csv)
        code, out, _ = run(capsys, "simulate", fixture_path, "--mode", "lifted", "--x0", "0.1,-0.7,0.3",
                           "--input", "sin(t)", "--out", lifted_csv)
        assert code == EXIT_OK
        validate(json.loads(out))
        lin = Trajectory.from_csv(lin_csv.read_text())
        lifted = Trajectory.from_csv(lifted_csv.read_text())
        phi = example_nf.phi_program()
        assert max(np.max(np.abs(phi(x) - z)) for x, z in zip(lifted.states, lin.states)) <= 1e-6

    def test_full_header(self, capsys, fixture_path):
        code, out, _ = run(capsys, "simulate", fixture_path, "--t-end", "0.01")
        assert code == EXIT_OK
        assert out.splitlines()[0] == "t,x1,x2,x3,u"
        assert len(out.splitlines()) == 12

    def test_byte_stable(self, capsys, fixture_path):
        args = ("simulate", fixture_path, "--mode", "lifted", "--input", "cos(2*t)", "--t-end", "0.2")
        assert run(capsys, *args)[1] == run(capsys, *args)[1]

    def test_blow_up(self, capsys, tmp_path):
        f = tmp_path / "blow.fl"
        f.write_text('system "blow"\nstates x1 x2\ninput u\nf = [x1^2, 0]\ng = [0, 1]\nh = x2\n')
        code, out, _ = run(capsys, "simulate", f, "--x0", "1,0", "--t-end", "3", "--dt", "0.01")
        assert code == EXIT_NUMERIC
        doc = validate(json.loads(out))
        assert doc["error"]["type"] == "NonFinite"

    def test_state_in_input_rejected(self, capsys, fixture_path):
        code, _, _ = run(capsys, "simulate", fixture_path, "--input", "x1 + t")
        assert code == EXIT_INPUT


class TestVerify:
    def test_passes(self, capsys, fixture_path):
        code, out, _ = run(capsys, "verify", fixture_path, "--trials", "100", "--seed", "42")
        doc = validate(json.loads(out))
        assert code == EXIT_OK and doc["pass"]
        worst = doc["worst_residual"]
        assert worst["suite"] in doc["suites"]
        assert worst["observed"] <= worst["tol"]
        for name, check in doc["suites"].items():
            assert check["pass"], name

    def test_zero_trials(self, capsys, fixture_path):
        code, out, _ = run(capsys, "verify", fixture_path, "--trials", "0")
        doc = validate(json.loads(out))
        assert code == EXIT_OK and doc["suites"] == {}

    def test_square_phi_is_diagnostic(self, capsys, tmp_path):
        f = tmp_path / "di.fl"
        f.write_text('system "di"\nstates x1 x2\ninput u\nf = [x2, 0]\ng = [0, 1]\nh = x1\n')
        code, out, _ = run(capsys, "verify", f, "--trials", "5")
        doc = validate(json.loads(out))
        assert code == EXIT_OK
        assert doc["diagnostics"]

    def test_tolerance_from_environment(self, capsys, fixture_path, monkeypatch):
        monkeypatch.setenv("FIBRELIN_TOL", "1e-30")
        code, out, _ = run(capsys, "verify", fixture_path, "--trials", "20")
        doc = json.loads(out)
        assert doc["tol"] == 1e-30
        assert code == (EXIT_OK if doc["pass"] else 1)
        failing = [name for name, c in doc["suites"].items() if not c["pass"]]
        assert all(doc["suites"][n]["observed"] > doc["suites"][n]["tol"] for n in failing)

    def test_tol_flag_beats_environment(self, capsys, fixture_path, monkeypatch):
        monkeypatch.setenv("FIBRELIN_TOL", "1e-30")
        code, out, _ = run(capsys, "verify", fixture_path, "--trials", "10", "--tol", "1e-8")
        assert json.loads(out)["tol"] == 1e-8 and code == EXIT_OK

    def test_byte_stable(self, capsys, fixture_path):
        args = ("verify", fixture_path, "--trials", "10", "--seed", "3")
        assert run(capsys, *args)[1] == run(capsys, *args)[1]


class TestLift:
    def test_round_trip(self, capsys, fixture_path, tmp_path):
        curve = tmp_path / "z.csv"
        run(capsys, "simulate", fixture_path, "--mode", "linear", "--x0", "0.3,-0.7",
            "--input", "sin(t)", "--out", curve)
        code, out, err = run(capsys, "lift", fixture_path, curve)
        assert code == EXIT_OK
        summary = validate(json.loads(err))
        assert summary["projection_residual"]["observed"] <= 1e-6
        lifted = Trajectory.from_csv(out)
        assert lifted.states.shape[1] == 3

    def test_explicit_start(self, capsys, fixture_path, tmp_path):
        curve = tmp_path / "z.csv"
        run(capsys, "simulate", fixture_path, "--mode", "linear", "--x0", "0.3,-0.7", "--out", curve)
        code, out, err = run(capsys, "lift", fixture_path, curve, "--x0", "2,-0.7,0.3")
        assert code == EXIT_OK
        assert json.loads(err)["x0"] == [2.0, -0.7, 0.3]

    def test_wrong_width(self, capsys, fixture_path, tmp_path):
        curve = tmp_path / "z.csv"
        curve.write_text("t,z1,v\n0,0,0\n0.1,0,0\n")
        code, out, _ = run(capsys, "lift", fixture_path, curve)
        assert code == EXIT_INPUT
        validate(json.loads(out))


def test_module_entry_point(fixture_path):
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "fibrelin", "analyze", str(fixture_path), "--json"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["r"] == 2
