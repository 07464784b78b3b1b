import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from nodalfree import cli, io
from nodalfree.bloch import QubitInvariants, closed_form_spectrum
from nodalfree.errors import IncompleteExtraction

QUBIT_SEGMENTS = [{"axis": [0, 1, 0], "angle": 1.5707963267948966},
                  {"axis": [0, 0, 1], "angle": 1.0}]

CONFIGS = {
    "evolve": {"kind": "evolve", "params": {"segments": QUBIT_SEGMENTS, "parallelize": True}},
    "evolve-csv": {"kind": "evolve", "params": {"segments": QUBIT_SEGMENTS},
                   "output": {"path": "path.csv", "format": "csv"}},
    "spectrum": {"kind": "spectrum", "params": {"segments": [
        {"h": io.matrix_to_literal(np.array([[1, 0.3 - 0.2j, 0], [0.3 + 0.2j, 0, 1j], [0, -1j, -0.5]])),
         "duration": 1.0}]}},
    "qubit-sweep": {"kind": "qubit-sweep", "params": {"etas": {"num": 5}, "omegas": {"num": 6}}},
    "fig1": {"kind": "fig1", "params": {"orange_azimuths": [0.5, 2.0, 5.0], "flip_azimuths": {"num": 5}}},
    "gates": {"kind": "gates", "params": {"n": 4, "labels": ["00", "01", "11", "10"]}},
    "interfere": {"kind": "interfere", "seed": 4, "params": {"cycle": 4, "chi": {"num": 37}},
                  "output": {"path": "scan.csv"}},
    "verify-all": {"kind": "verify-all", "params": {"only": [8]}},
}


def _write(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def _run(tmp_path, config, *extra, out="out"):
    return cli.main(["--config", _write(tmp_path, config), "--out-dir", str(tmp_path / out), *extra])


def _outputs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestValidate:
    def test_missing_segments(self):
        diags = cli.validate({"kind": "evolve", "params": {}})
        assert len(diags) == 1 and diags[0].field == "params.segments"

    def test_negative_duration(self):
        diags = cli.validate({"kind": "evolve", "params": {"segments": [
            {"axis": [0, 0, 1], "angle": 1.0, "duration": -1}]}})
        assert len(diags) == 1
        assert diags[0].field == "params.segments[0].duration" and "range" in diags[0].message

    def test_valid_fig1(self):
        assert cli.validate({"kind": "fig1"}) == []
        assert cli.validate(CONFIGS["fig1"]) == []

    @pytest.mark.parametrize("name", sorted(CONFIGS))
    def test_examples_are_valid(self, name):
        assert cli.validate(CONFIGS[name]) == []

    @pytest.mark.parametrize("config, field", [
        ({}, "kind"),
        ({"kind": "plot"}, "kind"),
        ({"kind": "fig1", "colour": 1}, "colour"),
        ({"kind": "fig1", "seed": -1}, "seed"),
        ({"kind": "fig1", "output": {"format": "csv"}}, "output.format"),
        ({"kind": "fig1", "params": {"orange_azimuths": [7.0]}}, "params.orange_azimuths"),
        ({"kind": "gates", "params": {"n": 3}}, "params.n"),
        ({"kind": "gates", "params": {"n": 16}}, "params.n"),
        ({"kind": "gates", "params": {"labels": ["00", "00", "01", "10"]}}, "params.labels"),
        ({"kind": "gates", "params": {"factors": [[0, 1]]}}, "params.factors"),
        ({"kind": "evolve", "params": {"segments": [{"h": {"dim": 2, "entries": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}}]}},
         "params.segments[0].h"),
        ({"kind": "evolve", "params": {"segments": QUBIT_SEGMENTS, "state": [[1, 0], [1, 0]]}}, "params.state"),
        ({"kind": "evolve", "params": {"segments": QUBIT_SEGMENTS, "samples_per_segment": 0}},
         "params.samples_per_segment"),
        ({"kind": "interfere", "params": {}}, "params"),
        ({"kind": "interfere", "params": {"unitary": io.matrix_to_literal(np.ones((2, 2)))}}, "params.unitary"),
        ({"kind": "spectrum", "params": {"segments": QUBIT_SEGMENTS, "gammas": [[0, 0]]}}, "params.gammas"),
        ({"kind": "verify-all", "params": {"only": [11]}}, "params.only"),
    ])
    def test_diagnostics_name_the_field(self, config, field):
        diags = cli.validate(config)
        assert diags and diags[0].field == field

    def test_empty_iff_run_accepts(self, tmp_path):
        bad = {"kind": "evolve", "params": {"segments": "none"}}
        assert cli.validate(bad)
        assert _run(tmp_path, bad) == 2


class TestExitCodes:
    def test_syntax_error_reports_line(self, tmp_path, caplog):
        path = tmp_path / "c.json"
        path.write_text('{"kind": "fig1",\n "seed": 0,,}')
        assert cli.main(["--config", str(path)]) == 2
        assert "line 2" in caplog.text

    def test_non_finite_config(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"kind": "fig1", "seed": NaN}')
        assert cli.main(["--config", str(path)]) == 2

    def test_missing_file(self, tmp_path):
        assert cli.main(["--config", str(tmp_path / "nope.json")]) == 2

    def test_verify_only(self, tmp_path):
        assert _run(tmp_path, {"kind": "fig1"}, "--verify") == 0
        assert not (tmp_path / "out").exists()
        assert _run(tmp_path, {"kind": "evolve"}, "--verify") == 2

    def test_numerical_failure_with_provenance(self, tmp_path, monkeypatch, caplog):
        def failing(*args, **kwargs):
            raise IncompleteExtraction("stalled", found=[0.1], missing_dim=1)

        monkeypatch.setattr(cli.interferometer, "extract_phases", failing)
        assert _run(tmp_path, CONFIGS["interfere"]) == 3
        assert "[interferometer] IncompleteExtraction" in caplog.text

    def test_failed_acceptance_is_nonzero(self, tmp_path, monkeypatch):
        from nodalfree.acceptance import CheckResult
        bad = CheckResult(1, "forced", False, 1.0, 0.5)
        monkeypatch.setattr(cli.acceptance, "CHECKS", (lambda seed: bad,))
        assert _run(tmp_path, {"kind": "verify-all"}) == 1


class TestScenarios:
    def test_qubit_sweep_matches_closed_form(self, tmp_path):
        assert _run(tmp_path, CONFIGS["qubit-sweep"]) == 0
        with open(tmp_path / "out" / "qubit-sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["eta", "omega", "tau_plus", "tau_minus", "gamma2_re", "gamma2_im"]
        assert len(rows) == 30
        for r in rows:
            eta, omega = float(r["eta"]), float(r["omega"])
            lo, hi = closed_form_spectrum(QubitInvariants(eta, omega))
            assert abs(np.angle(np.exp(1j * (float(r["tau_plus"]) - hi)))) < 1e-6
            assert abs(np.angle(np.exp(1j * (float(r["tau_minus"]) - lo)))) < 1e-6
            assert abs(complex(float(r["gamma2_re"]), float(r["gamma2_im"])) - (eta**2 - 1)) < 1e-8

    def test_fig1_report(self, tmp_path):
        assert _run(tmp_path, CONFIGS["fig1"]) == 0
        rep = json.loads((tmp_path / "out" / "fig1.json").read_text())
        assert rep["gate_fixed_at_Z"] and rep["max_omega_minus_phi"] < 1e-6
        for r in rep["bit_flips"]:
            assert abs(r["exchange_solid_angle"] - 2 * np.pi) < 1e-4
            assert abs(abs(r["arg_gamma12"]) - np.pi) < 1e-12
            assert abs(np.angle(np.exp(1j * (r["caption_phi"] - (np.pi - 2 * r["alpha"]))))) < 1e-9
        for fit in rep["azimuth_fits"]:
            assert abs(fit["slope"] - 1) < 1e-9 and fit["max_residual"] < 1e-9

    def test_gates_table_on_stdout(self, tmp_path, capsys):
        assert _run(tmp_path, CONFIGS["gates"]) == 0
        out = capsys.readouterr().out
        assert "B" in out and "yes" in out
        data = json.loads((tmp_path / "out" / "gates.json").read_text())
        assert {"labels", "phases", "matrix"} <= set(data)
        row = next(r for r in data["comparison"] if r["target"] == "B")
        assert row["equal"]

    def test_gates_product_search(self, tmp_path):
        config = {"kind": "gates", "params": {"n": 8, "factors": [[0, np.pi], [0, np.pi / 2], [0, np.pi / 4]]}}
        assert _run(tmp_path, config) == 0
        data = json.loads((tmp_path / "out" / "gates.json").read_text())
        assert next(r for r in data["comparison"] if r["target"] == "Z⊗S⊗T")["equal"]

    def test_interfere_outputs(self, tmp_path):
        assert _run(tmp_path, CONFIGS["interfere"]) == 0
        summary = json.loads((tmp_path / "out" / "scan.json").read_text())
        phases = sorted(e["phase"] for e in summary["extracted"])
        assert np.allclose(phases, np.pi / 4 * np.array([-3, -1, 1, 3]), atol=1e-3)
        header = (tmp_path / "out" / "scan.csv").read_bytes().split(b"\r\n")[0]
        assert header == b"chi,intensity"

    def test_spectrum_export_round_trips(self, tmp_path):
        assert _run(tmp_path, CONFIGS["spectrum"]) == 0
        text = (tmp_path / "out" / "spectrum.json").read_text()
        spec, gammas = io.spectrum_from_json(text)
        again = io.dumps(io.spectrum_to_json(spec)).strip()
        assert json.loads(again)["phases"] == json.loads(text)["phases"]
        assert (0, 1, 2) in gammas and len(gammas) == 8

    def test_evolve_outputs(self, tmp_path):
        assert _run(tmp_path, CONFIGS["evolve"]) == 0
        data = json.loads((tmp_path / "out" / "evolve.json").read_text())
        assert data["pt_residual"] < 1e-8 and data["parallelized"]
        assert abs(complex(*data["det_final"]) - 1) < 1e-9
        assert _run(tmp_path, CONFIGS["evolve-csv"]) == 0
        header = (tmp_path / "out" / "path.csv").read_bytes().split(b"\r\n")[0]
        assert header == b"s,nx,ny,nz,segment_id"

    def test_evolve_csv_needs_qubit(self, tmp_path):
        config = {"kind": "evolve", "params": {"segments": [{"h": io.matrix_to_literal(np.eye(3))}]},
                  "output": {"format": "csv"}}
        assert _run(tmp_path, config) == 2


class TestDeterminism:
    @pytest.mark.parametrize("name", sorted(CONFIGS))
    def test_byte_identical(self, tmp_path, name):
        assert _run(tmp_path, CONFIGS[name], out="a") in (0, 1)
        assert _run(tmp_path, CONFIGS[name], out="b") in (0, 1)
        a, b = _outputs(tmp_path / "a"), _outputs(tmp_path / "b")
        assert a and a == b

    def test_thread_pool_keeps_input_order(self, tmp_path, monkeypatch):
        _run(tmp_path, CONFIGS["qubit-sweep"], out="serial")
        monkeypatch.setenv("HOLONOMY_THREADS", "4")
        _run(tmp_path, CONFIGS["qubit-sweep"], out="pooled")
        assert _outputs(tmp_path / "serial") == _outputs(tmp_path / "pooled")

    def test_seed_override(self, tmp_path):
        _run(tmp_path, CONFIGS["interfere"], out="a")
        _run(tmp_path, CONFIGS["interfere"], "--seed-override", "9", out="b")
        a = json.loads((tmp_path / "a" / "scan.json").read_text())
        b = json.loads((tmp_path / "b" / "scan.json").read_text())
        assert a["F"] == b["F"]
        assert a["extracted"] != b["extracted"]


def test_module_entry_point_logs_to_stderr(tmp_path):
    cfg = _write(tmp_path, {"kind": "fig1", "params": {"orange_azimuths": [1.0], "flip_azimuths": [0.0]}})
    proc = subprocess.run([sys.executable, "-m", "nodalfree", "--config", cfg, "--out-dir", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == ""
    assert "running fig1" in proc.stderr
