import csv
import json
import math

import jsonschema
import numpy as np
import pytest

from rhls.cli import main
from rhls.constants import c_explicit_lambda2
from rhls.report import SCHEMA_VERSION, RunReport, load_schema

SCHEMA = load_schema()


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    report = json.loads(out) if out else None
    if report is not None:
        jsonschema.validate(report, SCHEMA)
    return code, report, out


class TestConstants:
    def test_both(self, capsys):
        code, rep, _ = run(capsys, "constants", "--n", "2", "--lambda", "2", "--method", "both")
        assert code == 0
        assert rep["outputs"]["relative_discrepancy"] <= 1e-6
        assert rep["schema_version"] == SCHEMA_VERSION

    def test_closed_form_needs_lambda2(self, capsys):
        code, rep, _ = run(capsys, "constants", "--n", "2", "--lambda", "0.5", "--method", "closed-form")
        assert code == 2 and rep is None

    def test_n3_spherical(self, capsys):
        code, rep, _ = run(capsys, "constants", "--n", "3", "--lambda", "2")
        assert code == 0
        assert rep["outputs"]["c_spherical"] == pytest.approx(c_explicit_lambda2(3), abs=1e-5)

    def test_invalid_n(self, capsys):
        assert run(capsys, "constants", "--n", "1", "--lambda", "2")[0] == 2

    def test_convergence_failure(self, capsys):
        assert run(capsys, "constants", "--n", "2", "--lambda", "1e-9")[0] == 3

    def test_byte_identical(self, capsys):
        args = ("constants", "--n", "2", "--lambda", "1.3", "--method", "spherical")
        assert run(capsys, *args)[2] == run(capsys, *args)[2]

    def test_report_file(self, capsys, tmp_path):
        path = tmp_path / "r.json"
        _, _, out = run(capsys, "constants", "--n", "2", "--lambda", "2", "--report", str(path))
        assert path.read_text() == out

    def test_record_time(self, capsys):
        _, rep, _ = run(capsys, "constants", "--n", "2", "--lambda", "2", "--record-time")
        assert rep["wall_time_ms"] >= 0


class TestUsage:
    @pytest.mark.parametrize("argv", [[], ["nope"], ["constants", "--n", "2"], ["constants", "--n", "x", "--lambda", "2"]])
    def test_bad_usage(self, capsys, argv):
        assert main(argv) == 64

    def test_help(self, capsys):
        assert main(["--help"]) == 0

    def test_config_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"colour": 1}))
        assert main(["constants", "--n", "2", "--lambda", "2", "--config", str(cfg)]) == 64

    def test_config_unreadable(self, capsys, tmp_path):
        assert main(["constants", "--n", "2", "--lambda", "2", "--config", str(tmp_path / "missing.json")]) == 64

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        # a config this loose changes the reported error estimate; the flag restores the default tolerance
        cfg.write_text(json.dumps({"rel_tol": 1e-3}))
        base = run(capsys, "constants", "--n", "2", "--lambda", "1.3")[1]
        loose = run(capsys, "constants", "--n", "2", "--lambda", "1.3", "--config", str(cfg))[1]
        back = run(capsys, "constants", "--n", "2", "--lambda", "1.3", "--config", str(cfg), "--rel-tol", "1e-12")[1]
        assert loose["outputs"]["c_spherical"] == pytest.approx(base["outputs"]["c_spherical"], rel=1e-3)
        assert back["outputs"] == run(capsys, "constants", "--n", "2", "--lambda", "1.3", "--rel-tol", "1e-12")[1]["outputs"]


class TestScan:
    def test_rows_and_format(self, capsys, tmp_path):
        out = tmp_path / "scan.csv"
        code, rep, _ = run(capsys, "scan", "--n", "2", "--lambda-from", "1e-3", "--lambda-to", "2", "--steps", "20", "--out", str(out))
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["lambda", "c_spherical", "c_near_zero", "abs_err_estimate"]
        data = np.array(rows[1:], float)
        assert data.shape == (21, 4)
        assert np.all(np.diff(data[:, 0]) > 0)
        assert data[-1, 1] == pytest.approx(c_explicit_lambda2(2), rel=1e-10)
        # continuity: no jumps beyond what the slope allows
        assert np.all(np.abs(np.diff(data[:, 1])) < 0.2)
        # 17 significant digits round-trip every double
        assert all(float(f"{float(x):.17g}") == float(x) for x in rows[1][:2])
        assert rep["outputs"]["rows"] == 21

    def test_single_step(self, capsys, tmp_path):
        out = tmp_path / "s.csv"
        assert run(capsys, "scan", "--n", "2", "--lambda-from", "0.5", "--lambda-to", "1", "--steps", "1", "--out", str(out))[0] == 0
        assert len(out.read_text().splitlines()) == 3

    def test_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run(capsys, "scan", "--n", "3", "--lambda-from", "0.5", "--lambda-to", "2", "--steps", "3", "--out", str(path))
        assert a.read_bytes() == b.read_bytes()

    def test_reversed_range(self, capsys, tmp_path):
        assert main(["scan", "--n", "2", "--lambda-from", "2", "--lambda-to", "1", "--steps", "3", "--out", str(tmp_path / "x")]) == 64

    def test_failed_row_flagged(self, capsys, tmp_path):
        out = tmp_path / "f.csv"
        code, rep, _ = run(capsys, "scan", "--n", "2", "--lambda-from", "1e-9", "--lambda-to", "1", "--steps", "1", "--out", str(out))
        assert code == 3
        assert rep["outputs"]["failed_rows"] == 1
        assert out.read_text().splitlines()[1].split(",")[1] == "nan"


class TestVerify:
    def test_pass_with_extremal(self, capsys):
        code, rep, _ = run(capsys, "verify", "--n", "2", "--lambda", "2", "--trials", "10", "--seed", "1")
        assert code == 0
        assert rep["outputs"]["pass"] and rep["outputs"]["extremal_ok"]
        assert abs(rep["outputs"]["extremal_quotient"] - rep["outputs"]["constant"]) <= 1e-4

    def test_seeded_reproducible(self, capsys):
        args = ("verify", "--n", "2", "--lambda", "2", "--trials", "4", "--seed", "3", "--skip-extremal")
        assert run(capsys, *args)[2] == run(capsys, *args)[2]

    def test_zero_trials(self, capsys):
        assert main(["verify", "--n", "2", "--lambda", "2", "--trials", "0"]) == 64

    def test_workers_do_not_change_output(self, capsys):
        args = ("verify", "--n", "2", "--lambda", "1", "--trials", "4", "--seed", "2", "--skip-extremal", "--samples", "20000")
        assert run(capsys, *args)[2] == run(capsys, *args, "--workers", "2")[2]


class TestOtherCommands:
    def test_minimize(self, capsys, tmp_path):
        out = tmp_path / "prof.csv"
        code, rep, _ = run(capsys, "minimize", "--n", "2", "--lambda", "2", "--grid", "128", "--seed", "7", "--out", str(out))
        assert code == 0
        assert rep["outputs"]["relative_error"] <= 1e-2
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["r", "value"] and len(rows) == 129

    def test_loghls(self, capsys):
        code, rep, _ = run(capsys, "loghls", "--n", "2")
        assert code == 0 and abs(rep["outputs"]["deficit_at_extremal"]) <= 1e-5

    @pytest.mark.slow
    def test_check_system(self, capsys):
        code, rep, _ = run(capsys, "check-system", "--n", "2", "--lambda", "2")
        assert code == 0
        o = rep["outputs"]
        assert o["res_u"] <= 1e-6 and o["res_v"] <= 1e-6 and o["equations_ok"]
        assert o["amplitude"] == pytest.approx((math.pi**2 / 2) ** 0.2, rel=1e-10)
        assert not o["trace_ok"]

    @pytest.mark.slow
    def test_check_system_strict_trace_fails(self, capsys):
        assert run(capsys, "check-system", "--n", "2", "--lambda", "2", "--strict-trace")[0] == 1


class TestReport:
    def test_missing_error_estimate(self):
        rep = RunReport("x")
        rep.outputs["a"] = 1.0
        with pytest.raises(ValueError):
            rep.to_json()

    def test_nonfinite_become_null(self):
        rep = RunReport("scan")
        rep.add("a", math.inf, math.nan)
        d = json.loads(rep.to_json())
        assert d["outputs"]["a"] is None and d["error_estimates"]["a"] is None
        jsonschema.validate(d, SCHEMA)

    def test_schema_rejects_missing_fields(self):
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"command": "x"}, SCHEMA)
