"""CLI surface: subcommands, exit codes, artifacts, manifests."""

import json
from pathlib import Path

import numpy as np
import pytest

from ipslab.cli import main
from ipslab.artifacts import read_distribution


def write_cfg(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


CLOCK_TRACE_CFG = {
    "volume": {"d": 1, "side": 5, "q": 3},
    "model": {"name": "driven-clock", "params": {"eps": 0.5, "base": 0.2}},
    "mu": {"kind": "uniform"},
    "nu0": {"kind": "mu"},
    "window": {"kind": "box", "radius": 1},
    "times": {"start": 0.0, "stop": 1.0, "num": 4},
}


class TestExitCodes:
    def test_config_parse_error_is_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"volume": {')
        assert main(["trace", "--config", str(bad), "--out-dir", str(tmp_path / "o")]) == 2

    def test_missing_field_is_exit_2_with_field_path(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "c.json", {"volume": {"d": 1, "side": 3}})
        assert main(["trace", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 2
        assert "volume" in capsys.readouterr().err

    def test_unknown_field_is_exit_2(self, tmp_path, capsys):
        payload = dict(CLOCK_TRACE_CFG, volume={"d": 1, "side": 5, "q": 3, "oops": 1})
        cfg = write_cfg(tmp_path, "c.json", payload)
        assert main(["trace", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 2
        assert "oops" in capsys.readouterr().err

    def test_infeasible_size_is_exit_3(self, tmp_path):
        payload = {
            "volume": {"d": 2, "side": 5, "q": 3},
            "model": {"name": "independent-flip", "params": {}},
            "nu0": {"kind": "point", "spins": [0] * 25},
            "t": 1.0,
        }
        cfg = write_cfg(tmp_path, "c.json", payload)
        assert main(["evolve", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 3

    def test_failed_audit_is_exit_1(self, tmp_path):
        payload = {
            "volume": {"d": 1, "side": 4, "q": 2},
            "model": {"name": "frozen-fa", "params": {}},
        }
        cfg = write_cfg(tmp_path, "c.json", payload)
        assert main(["audit", "--config", cfg, "--out-dir", str(tmp_path / "o")]) == 1
        report = json.loads((tmp_path / "o" / "audit.json").read_text())
        r3 = [c for c in report["conditions"] if c["name"] == "R3"][0]
        assert not r3["passed"] and r3["witness"] is not None


class TestTrace:
    def test_stationary_start_writes_zero_columns(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", CLOCK_TRACE_CFG)
        out = tmp_path / "out"
        assert main(["trace", "--config", cfg, "--out-dir", str(out)]) == 0
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "# schema=ipslab.trace.v1"
        header = lines[2].split(",")
        data = [dict(zip(header, row.split(","))) for row in lines[3:]]
        for row in data:
            for col in header[1:]:
                assert abs(float(row[col])) < 1e-10

    def test_manifest_records_config_and_versions(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", CLOCK_TRACE_CFG)
        out = tmp_path / "out"
        main(["trace", "--config", cfg, "--out-dir", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["volume"]["side"] == 5
        assert "numpy" in manifest["versions"]
        assert manifest["command"] == "trace"


class TestEvolve:
    def test_roundtrip_through_binary(self, tmp_path):
        payload = {
            "volume": {"d": 1, "side": 3, "q": 2},
            "model": {"name": "glauber-ising", "params": {"beta": 0.4}},
            "nu0": {"kind": "point", "spins": [1, 0, 1]},
            "t": 0.7,
        }
        cfg = write_cfg(tmp_path, "c.json", payload)
        out = tmp_path / "o"
        assert main(["evolve", "--config", cfg, "--out-dir", str(out)]) == 0
        header, dist = read_distribution(out / "distribution.bin")
        assert header["side"] == 3 and header["q"] == 2
        assert dist.weights.sum() == pytest.approx(1.0, abs=1e-12)
        blob = json.loads((out / "distribution.json").read_text())
        np.testing.assert_allclose(blob["weights"], dist.weights)


class TestVerifyCommand:
    def test_fast_profile_passes_and_reports(self, tmp_path):
        out = tmp_path / "v"
        code = main(["verify", "--tolerance-profile", "fast", "--out-dir", str(out),
                     "--seed", "77"])
        assert code == 0
        report = json.loads((out / "verify_report.json").read_text())
        assert report["all_pass"] is True
        assert report["profile"] == "fast"
        names = {r["check"] for r in report["results"]}
        assert "loss-identity" in names and "control-zero-rate-r3" in names


class TestKmcCommand:
    def test_ensemble_mode(self, tmp_path):
        payload = {
            "volume": {"d": 1, "side": 3, "q": 2},
            "model": {"name": "independent-flip", "params": {}},
            "window": {"kind": "box", "radius": 1},
            "mode": "ensemble",
            "t": 0.5,
            "n_traj": 300,
        }
        cfg = write_cfg(tmp_path, "c.json", payload)
        out = tmp_path / "o"
        assert main(["kmc", "--config", cfg, "--out-dir", str(out), "--seed", "3"]) == 0
        lines = (out / "cylinder_estimates.csv").read_text().splitlines()
        assert lines[0] == "# schema=ipslab.cylinder-estimates.v1"
        counts = [int(r.split(",")[1]) for r in lines[3:]]
        assert sum(counts) == 300

    def test_scan_mode(self, tmp_path):
        payload = {
            "volume": {"d": 1, "side": 3, "q": 2},
            "model": {"name": "soft-fa", "params": {"eps": 0.5, "p_one": 0.3}},
            "window": {"kind": "sites", "sites": [1]},
            "mode": "scan",
            "tau": 0.5,
            "t_grid": [0.5, 1.0],
            "method": "exact",
        }
        cfg = write_cfg(tmp_path, "c.json", payload)
        out = tmp_path / "o"
        assert main(["kmc", "--config", cfg, "--out-dir", str(out)]) == 0
        text = (out / "mass_floor.csv").read_text()
        assert "# schema=ipslab.mass-floor.v1" in text


class TestSequenceCommand:
    def test_amplitude_mode(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {"mode": "amplitude", "C": 1.0, "d": 3})
        out = tmp_path / "o"
        assert main(["sequence", "--config", cfg, "--out-dir", str(out)]) == 0
        rep = json.loads((out / "sequence_report.json").read_text())
        assert rep["amplitude"]["value"] == pytest.approx(0.36951, abs=1e-4)

    def test_shells_mode_writes_csv(self, tmp_path):
        cfg = write_cfg(tmp_path, "c.json", {"mode": "shells", "d": 3, "a": 0.1, "n": 6})
        out = tmp_path / "o"
        assert main(["sequence", "--config", cfg, "--out-dir", str(out)]) == 0
        lines = (out / "shell_table.csv").read_text().splitlines()
        assert lines[0] == "# schema=ipslab.shell-table.v1"
        assert lines[2] == "k,shell_size,alpha"


class TestDemo:
    def test_fast_demo_produces_all_artifacts(self, tmp_path):
        out = tmp_path / "demo"
        assert main(["demo", "--fast", "--out-dir", str(out)]) == 0
        expected = {
            "trace_clock.csv",
            "trace_stationary.csv",
            "trace_softfa2d.csv",
            "site_tables_clock.json",
            "site_tables_stationary.json",
            "site_tables_softfa2d.json",
            "residuals.json",
            "mass_floor.csv",
            "mass_floor_frozen.csv",
            "shell_table_d3.csv",
            "sequence_report.json",
            "demo_summary.json",
            "manifest.json",
        }
        assert expected <= {p.name for p in out.iterdir()}
        summary = json.loads((out / "demo_summary.json").read_text())
        assert summary["clock"]["stationarity_residual"] <= 1e-12
        assert summary["clock"]["cycle_ratio"] >= 1.5
        assert summary["mass_floor"]["frozen_control"] == 0.0
        assert summary["mass_floor"]["healthy"] > 0.0
