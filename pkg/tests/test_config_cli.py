import json
import time
from pathlib import Path

import numpy as np
import pytest

from pseudomode import ConfigError, load_scenario, parse_scenario
from pseudomode.cli import main

REPO = Path(__file__).resolve().parent.parent
SHIPPED = sorted((REPO / "configs").glob("*.json"))


def base_doc(**overrides):
    doc = {
        "scenario": "markovian",
        "system": {"preset": "tls_sigma_minus"},
        "bath": {"kind": "flat", "f2": 1.0},
        "time": {"t0": 0.0, "t1": 1.0, "n_points": 11},
        "output": "out.csv",
    }
    doc.update(overrides)
    return doc


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_csv(path):
    lines = path.read_text().split("\n")
    header = lines[0].split(",")
    rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:] if ln])
    return header, rows


class TestParsing:
    def test_minimal_document(self):
        cfg = parse_scenario(base_doc())
        assert cfg.scenario == "markovian"
        assert cfg.grid.n_points == 11

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_scenario(base_doc(extra=1))

    def test_unknown_nested_key(self):
        doc = base_doc()
        doc["bath"]["typo"] = 3
        with pytest.raises(ConfigError, match="typo"):
            parse_scenario(doc)

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="scenario"):
            parse_scenario(base_doc(scenario="magic"))

    def test_duplicate_keys_rejected(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text('{"scenario": "markovian", "scenario": "compare"}')
        with pytest.raises(ConfigError, match="duplicate"):
            load_scenario(path)

    def test_invalid_dimension(self):
        doc = base_doc()
        doc["system"] = {"preset": "oscillator", "d_S": 1}
        with pytest.raises(ConfigError):
            parse_scenario(doc)

    def test_oracle_scenarios_require_tls(self):
        doc = base_doc(scenario="volterra")
        doc["bath"] = {"kind": "lorentzian", "g": 1.0, "gamma": 0.5}
        doc["system"] = {"preset": "oscillator", "d_S": 3}
        with pytest.raises(ConfigError, match="tls_sigma_minus"):
            parse_scenario(doc)

    def test_lorentzian_required_for_embedding(self):
        with pytest.raises(ConfigError, match="lorentzian"):
            parse_scenario(base_doc(scenario="pseudomode"))

    def test_trajectories_block_gated(self):
        doc = base_doc()
        doc["trajectories"] = {"n_traj": 10, "seed": 1}
        with pytest.raises(ConfigError, match="trajectories"):
            parse_scenario(doc)

    def test_negative_rate_rejected(self):
        doc = base_doc()
        doc["bath"] = {"kind": "flat", "f2": -1.0}
        with pytest.raises(ConfigError):
            parse_scenario(doc)


class TestCliRuns:
    def test_markovian_decay_csv(self, tmp_path):
        doc = base_doc()
        doc["time"] = {"t0": 0.0, "t1": 2.0, "n_points": 21}
        path = write_config(tmp_path, doc)
        assert main(["run", str(path), "--out", str(tmp_path), "--quiet"]) == 0
        header, rows = read_csv(tmp_path / "out.csv")
        assert header == ["t", "P_e"]
        assert abs(rows[-1, 1] - np.exp(-2.0)) < 1e-6

    def test_compare_strong_coupling(self, tmp_path, capsys):
        doc = {
            "scenario": "compare",
            "system": {"preset": "tls_sigma_minus"},
            "bath": {"kind": "lorentzian", "g": 1.0, "omega0": 5.0, "gamma": 0.2},
            "time": {"t0": 0.0, "t1": 10.0, "n_points": 201},
            "numerics": {"d_A": 3, "rel_tol": 1e-10, "abs_tol": 1e-12},
            "output": "cmp.csv",
        }
        path = write_config(tmp_path, doc)
        assert main(["run", str(path), "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "max |pseudomode - volterra|" in out
        header, rows = read_csv(tmp_path / "cmp.csv")
        assert header[:4] == ["t", "P_e_pseudomode", "P_e_volterra", "P_e_discrete_bath"]
        assert rows[:, 4].max() < 1e-4  # pseudomode vs volterra column
        assert rows[:, 5].max() < 2e-3  # pseudomode vs discrete bath

    def test_byte_identical_reruns(self, tmp_path):
        doc = {
            "scenario": "trajectories",
            "system": {"preset": "tls_sigma_minus"},
            "bath": {"kind": "flat", "f2": 1.0},
            "time": {"t0": 0.0, "t1": 1.0, "n_points": 11},
            "numerics": {"rel_tol": 1e-6, "abs_tol": 1e-9},
            "trajectories": {"n_traj": 200, "seed": 11},
            "output": "traj.csv",
        }
        path = write_config(tmp_path, doc)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["run", str(path), "--out", str(out_a), "--quiet"]) == 0
        assert main(["run", str(path), "--out", str(out_b), "--quiet"]) == 0
        assert (out_a / "traj.csv").read_bytes() == (out_b / "traj.csv").read_bytes()

    def test_seed_override_changes_output(self, tmp_path):
        doc = {
            "scenario": "trajectories",
            "system": {"preset": "tls_sigma_minus"},
            "bath": {"kind": "flat", "f2": 1.0},
            "time": {"t0": 0.0, "t1": 1.0, "n_points": 6},
            "numerics": {"rel_tol": 1e-6, "abs_tol": 1e-9},
            "trajectories": {"n_traj": 100, "seed": 11},
            "output": "traj.csv",
        }
        path = write_config(tmp_path, doc)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["run", str(path), "--out", str(out_a), "--quiet"]) == 0
        assert main(["run", str(path), "--out", str(out_b), "--seed", "12", "--quiet"]) == 0
        assert (out_a / "traj.csv").read_bytes() != (out_b / "traj.csv").read_bytes()

    def test_oscillator_observable_column(self, tmp_path):
        doc = base_doc()
        doc["system"] = {"preset": "oscillator", "d_S": 4, "initial_fock": 2}
        path = write_config(tmp_path, doc)
        assert main(["run", str(path), "--out", str(tmp_path), "--quiet"]) == 0
        header, rows = read_csv(tmp_path / "out.csv")
        assert header == ["t", "n_mean"]
        assert rows[0, 1] == pytest.approx(2.0)

    def test_csv_full_precision_round_trip(self, tmp_path):
        path = write_config(tmp_path, base_doc())
        assert main(["run", str(path), "--out", str(tmp_path), "--quiet"]) == 0
        text = (tmp_path / "out.csv").read_text()
        assert "\r" not in text
        header, rows = read_csv(tmp_path / "out.csv")
        assert rows[1, 1] != round(rows[1, 1], 6)  # more than 6 significant digits survive


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        path = write_config(tmp_path, base_doc(scenario="nope"))
        assert main(["run", str(path), "--out", str(tmp_path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_file_is_2(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 2

    def test_invalid_json_is_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["run", str(path), "--out", str(tmp_path)]) == 2

    def test_seed_override_outside_trajectories_is_2(self, tmp_path):
        path = write_config(tmp_path, base_doc())
        assert main(["run", str(path), "--out", str(tmp_path), "--seed", "3"]) == 2

    def test_integration_failure_is_3(self, tmp_path, capsys):
        doc = {
            "scenario": "pseudomode",
            "system": {"preset": "tls_sigma_minus"},
            "bath": {"kind": "lorentzian", "g": 1.0, "omega0": 0.0, "gamma": 1e200},
            "time": {"t0": 0.0, "t1": 1.0, "n_points": 3},
            "numerics": {"d_A": 2},
            "output": "x.csv",
        }
        path = write_config(tmp_path, doc)
        assert main(["run", str(path), "--out", str(tmp_path)]) == 3
        assert "integration failure" in capsys.readouterr().err

    def test_truncation_failure_is_4(self, tmp_path, capsys):
        # consecutive truncations agree only to integrator roundoff (~1e-9
        # here); a tolerance below that floor exhausts the doubling ladder
        doc = {
            "scenario": "pseudomode",
            "system": {"preset": "tls_sigma_minus"},
            "bath": {"kind": "lorentzian", "g": 1.0, "omega0": 0.0, "gamma": 0.5},
            "time": {"t0": 0.0, "t1": 0.5, "n_points": 3},
            "numerics": {"d_A": "auto", "truncation_tol": 1e-12,
                         "rel_tol": 1e-5, "abs_tol": 1e-8},
            "output": "x.csv",
        }
        path = write_config(tmp_path, doc)
        assert main(["run", str(path), "--out", str(tmp_path)]) == 4
        assert "truncation failure" in capsys.readouterr().err


@pytest.mark.parametrize("config", SHIPPED, ids=lambda p: p.stem)
def test_shipped_configs_run_quickly(config, tmp_path):
    start = time.monotonic()
    assert main(["run", str(config), "--out", str(tmp_path), "--quiet"]) == 0
    assert time.monotonic() - start < 60.0
    produced = list(tmp_path.glob("*.csv"))
    assert len(produced) == 1
