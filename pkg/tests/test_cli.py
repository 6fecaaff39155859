import copy
import json

import numpy as np
import pytest

from sisobarrier import config as cfgmod
from sisobarrier.cli import (
    EXIT_CONFIG,
    EXIT_CONSISTENCY,
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_RUNTIME,
    cmd_verify,
    main,
)
from sisobarrier.simulator import SimulationTrace


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


class TestConfigParsing:
    def test_physical_block_matches_explicit_coefficients(self, exo_raw, exo_cfg):
        explicit = copy.deepcopy(exo_raw)
        explicit["plant"] = {
            "n": 2,
            "a": [[12.0, 12.0], [4.0, 12.0]],
            "b": [[0.0, 0.0], [4.0, 12.0]],
            "ties": [["a2", "b2"]],
            "true": {"a": [12.0, 8.0], "b": [0.0, 8.0]},
        }
        cfg = cfgmod.parse_config(explicit)
        assert cfg.plant == exo_cfg.plant
        assert np.array_equal(cfg.a_true, exo_cfg.a_true)
        assert np.array_equal(cfg.b_true, exo_cfg.b_true)

    def test_schema_violation_reports_path(self, exo_raw):
        bad = copy.deepcopy(exo_raw)
        del bad["constraints"]
        with pytest.raises(cfgmod.ConfigError, match="constraints"):
            cfgmod.parse_config(bad)

    def test_threshold_cross_check(self, exo_raw):
        bad = copy.deepcopy(exo_raw)
        bad["supervisor"] = {"B_lower": -0.01, "B_upper": -0.02}
        with pytest.raises(cfgmod.ConfigError, match="threshold"):
            cfgmod.parse_config(bad)

    def test_true_instance_must_sit_in_box(self, exo_raw):
        bad = copy.deepcopy(exo_raw)
        bad["plant"]["physical"]["k_h_true"] = 14.0
        with pytest.raises(cfgmod.ConfigError, match="outside"):
            cfgmod.parse_config(bad)

    def test_tie_breaking_instance_rejected(self, exo_raw):
        bad = copy.deepcopy(exo_raw)
        bad["plant"] = {
            "n": 2,
            "a": [[12.0, 12.0], [4.0, 12.0]],
            "b": [[0.0, 0.0], [4.0, 12.0]],
            "ties": [["a2", "b2"]],
            "true": {"a": [12.0, 8.0], "b": [0.0, 11.0]},
        }
        with pytest.raises(cfgmod.ConfigError):
            cfgmod.parse_config(bad)


class TestCertificateFile:
    def test_round_trip_exact(self, tmp_path, exo_cert_file):
        path = tmp_path / "cert.json"
        cfgmod.write_certificate(path, exo_cert_file)
        back = cfgmod.read_certificate(path)
        for Q1, Q2 in zip(back.Q_list, exo_cert_file.Q_list):
            assert np.array_equal(Q1, Q2)
        assert np.array_equal(back.a_hat, exo_cert_file.a_hat)
        assert back.alpha == exo_cert_file.alpha
        assert back.rho == exo_cert_file.rho
        assert back.config_hash == exo_cert_file.config_hash
        assert back.residuals == exo_cert_file.residuals

    def test_missing_key_rejected(self, tmp_path, exo_cert_file):
        path = tmp_path / "cert.json"
        cfgmod.write_certificate(path, exo_cert_file)
        payload = json.loads(path.read_text())
        del payload["alpha"]
        path.write_text(json.dumps(payload))
        with pytest.raises(cfgmod.ConfigError, match="missing"):
            cfgmod.read_certificate(path)


class TestSynthesizeCommand:
    def test_cli_synthesize_and_verify(self, tmp_path, exo_config_path, capsys):
        out = tmp_path / "cert.json"
        assert main(["synthesize", "--config", str(exo_config_path), "--out", str(out)]) == EXIT_OK
        cert = cfgmod.read_certificate(out)
        assert cert.alpha >= cert.alpha0 == 0.5
        assert len(cert.Q_list) == 2
        assert main(["verify", "--certificate", str(out), "--config", str(exo_config_path)]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "alpha" in printed and "PASS" in printed

    def test_infeasible_gain_exits_two(self, tmp_path, exo_raw):
        bad = copy.deepcopy(exo_raw)
        bad["constraints"]["gain"] = 2.0
        cfg_path = write_json(tmp_path / "bad.json", bad)
        out = tmp_path / "cert.json"
        assert main(["synthesize", "--config", cfg_path, "--out", str(out)]) == EXIT_INFEASIBLE
        assert not out.exists()

    def test_malformed_json_exits_one(self, tmp_path):
        cfg_path = tmp_path / "broken.json"
        cfg_path.write_text("{not json")
        assert main(["synthesize", "--config", str(cfg_path), "--out", str(tmp_path / "c.json")]) == EXIT_CONFIG

    def test_schema_error_exits_one(self, tmp_path, exo_raw):
        bad = copy.deepcopy(exo_raw)
        bad["synthesis"]["alpha0"] = -1.0
        cfg_path = write_json(tmp_path / "bad.json", bad)
        assert main(["synthesize", "--config", cfg_path, "--out", str(tmp_path / "c.json")]) == EXIT_CONFIG

    def test_usage_error_exits_one(self):
        assert main(["synthesize", "--config"]) == EXIT_CONFIG

    def test_help_exits_zero(self):
        assert main(["--help"]) == EXIT_OK


class TestVerifyCommand:
    def test_scaled_Q_fails_containment(self, tmp_path, exo_config_path, exo_certificate_path):
        payload = json.loads(open(exo_certificate_path).read())
        payload["Q_list"] = [(1.5 * np.asarray(Q)).tolist() for Q in payload["Q_list"]]
        tampered = write_json(tmp_path / "tampered.json", payload)
        assert main(["verify", "--certificate", tampered, "--config", str(exo_config_path)]) == EXIT_CONSISTENCY
        result = cmd_verify(tampered, exo_config_path)
        assert "input_containment" in result.failures()

    def test_tampered_a_hat_fails_decay(self, tmp_path, exo_config_path, exo_certificate_path):
        payload = json.loads(open(exo_certificate_path).read())
        payload["a_hat"] = [1.0, 0.5]
        tampered = write_json(tmp_path / "tampered.json", payload)
        result = cmd_verify(tampered, exo_config_path)
        assert not result.ok
        assert "estimator_decay" in result.failures()

    def test_fresh_certificate_all_pass(self, exo_config_path, exo_certificate_path):
        result = cmd_verify(exo_certificate_path, exo_config_path)
        assert result.ok
        assert result.failures() == []


class TestSimulateCommand:
    def test_scenario_one_summary(self, tmp_path, exo_config_path, exo_certificate_path, capsys):
        out = tmp_path / "s1.csv"
        code = main(["simulate", "--config", str(exo_config_path),
                     "--certificate", str(exo_certificate_path),
                     "--scenario", "boundary-release", "--out", str(out)])
        assert code == EXIT_OK
        header = out.read_text().splitlines()[0]
        assert header == "t,x1,x2,y,u_applied,u_nominal,source,B_true,B_hat_max,err_bound,B_hat_v1,B_hat_v2"
        trace = SimulationTrace.from_csv(out)
        assert np.all(np.diff(trace.B_true) <= 1e-6)
        assert "max|y|" in capsys.readouterr().out

    def test_hash_mismatch_exits_three(self, tmp_path, exo_raw, exo_certificate_path):
        other = copy.deepcopy(exo_raw)
        other["constraints"]["u_max"] = 1.5
        cfg_path = write_json(tmp_path / "other.json", other)
        code = main(["simulate", "--config", cfg_path,
                     "--certificate", str(exo_certificate_path),
                     "--scenario", "boundary-release", "--out", str(tmp_path / "t.csv")])
        assert code == EXIT_CONSISTENCY

    def test_scenario_edit_keeps_certificate_valid(self, tmp_path, exo_raw, exo_certificate_path):
        extended = copy.deepcopy(exo_raw)
        extended["scenarios"].append({
            "name": "zero",
            "x0": [0.0, 0.0],
            "input": {"kind": "zero"},
            "duration": 0.2,
            "dt": 1e-3,
        })
        cfg_path = write_json(tmp_path / "ext.json", extended)
        out = tmp_path / "zero.csv"
        code = main(["simulate", "--config", cfg_path,
                     "--certificate", str(exo_certificate_path),
                     "--scenario", "zero", "--out", str(out)])
        assert code == EXIT_OK
        trace = SimulationTrace.from_csv(out)
        assert np.array_equal(trace.x, np.zeros_like(trace.x))
        assert np.array_equal(trace.u_applied, np.zeros_like(trace.u_applied))

    def test_unknown_scenario_exits_one(self, tmp_path, exo_config_path, exo_certificate_path):
        code = main(["simulate", "--config", str(exo_config_path),
                     "--certificate", str(exo_certificate_path),
                     "--scenario", "nope", "--out", str(tmp_path / "t.csv")])
        assert code == EXIT_CONFIG

    def test_csv_roundtrip_precision(self, tmp_path, exo_config_path, exo_certificate_path):
        out = tmp_path / "s.csv"
        main(["simulate", "--config", str(exo_config_path),
              "--certificate", str(exo_certificate_path),
              "--scenario", "boundary-release", "--out", str(out)])
        trace = SimulationTrace.from_csv(out)
        buf_path = tmp_path / "again.csv"
        trace.to_csv(buf_path)
        assert out.read_text() == buf_path.read_text()


class TestPlotCommand:
    @pytest.fixture()
    def trace_csv(self, tmp_path, exo_config_path, exo_certificate_path):
        out = tmp_path / "s1.csv"
        extended = json.loads(open(exo_config_path).read())
        extended["scenarios"][0]["duration"] = 2.0
        cfg_path = write_json(tmp_path / "short.json", extended)
        assert main(["simulate", "--config", cfg_path,
                     "--certificate", str(exo_certificate_path),
                     "--scenario", "boundary-release", "--out", str(out)]) == EXIT_OK
        return out

    def test_plot_with_certificate(self, tmp_path, trace_csv, exo_certificate_path):
        svg = tmp_path / "out.svg"
        code = main(["plot", "--trace", str(trace_csv), "--out", str(svg),
                     "--certificate", str(exo_certificate_path)])
        assert code == EXIT_OK
        content = svg.read_text()
        assert "<svg" in content

    def test_plot_without_certificate(self, tmp_path, trace_csv):
        svg = tmp_path / "plain.svg"
        assert main(["plot", "--trace", str(trace_csv), "--out", str(svg)]) == EXIT_OK
        assert "<svg" in svg.read_text()

    def test_single_row_trace(self, tmp_path, trace_csv):
        lines = trace_csv.read_text().splitlines()
        single = tmp_path / "single.csv"
        single.write_text("\n".join(lines[:2]) + "\n")
        svg = tmp_path / "single.svg"
        assert main(["plot", "--trace", str(single), "--out", str(svg)]) == EXIT_OK
        assert "<svg" in svg.read_text()

    def test_empty_trace_fails(self, tmp_path, trace_csv):
        empty = tmp_path / "empty.csv"
        empty.write_text(trace_csv.read_text().splitlines()[0] + "\n")
        code = main(["plot", "--trace", str(empty), "--out", str(tmp_path / "x.svg")])
        assert code == EXIT_RUNTIME
