"""
Tests for the command line: verbs, outputs and exit codes.
"""

import csv
import json
import sys

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from conftest import random_model
from fiberdl import cli, constants, version
from fiberdl.errors import NumericalError
from fiberdl.experiments.manager import ExperimentManager


def run_cli(monkeypatch, capsys, *argv):
    monkeypatch.setattr(sys, "argv", ["fiberdl", *argv])
    code = cli.main()
    lines = [line for line in capsys.readouterr().out.splitlines() if line.strip()]
    return code, lines


def last_status(lines):
    return json.loads(lines[-1])


def read_csv(path):
    with open(path) as handle:
        return list(csv.reader(handle))


def write_overlay(tmp_path, data, name="overlay.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


SMALL = {
    "signal": {"num_symbols": 64, "analog_oversampling": 4},
    "link": {"num_spans": 2},
    "channel": {"steps_per_span": 2},
    "evaluate": {"powers_dbm": [0.0, 2.0], "num_frames": 2, "dbp_steps_per_span": [1]},
}


class TestExitCodes:
    """Status reporting"""

    def test_version(self, monkeypatch, capsys):
        code, lines = run_cli(monkeypatch, capsys, "--display-version")
        assert code == constants.EXIT_OK
        assert lines == [version]

    def test_no_command(self, monkeypatch, capsys):
        code, _ = run_cli(monkeypatch, capsys)
        assert code == constants.EXIT_CONFIG_ERROR

    def test_unknown_preset(self, monkeypatch, capsys):
        code, lines = run_cli(monkeypatch, capsys, "tcd", "--preset", "no-such-preset")
        assert code == constants.EXIT_CONFIG_ERROR
        assert last_status(lines)["status"] == "error"

    def test_wdm_grid_outside_simulation_band(self, monkeypatch, capsys, tmp_path):
        overlay = write_overlay(tmp_path, {"wdm": {"channels": 5, "spacing_hz": 100e9}})
        code, lines = run_cli(monkeypatch, capsys, "simulate", "--preset", "desk-10g7", "--config", overlay,
                              "--out", str(tmp_path / "wdm"))
        assert code == constants.EXIT_CONFIG_ERROR
        assert "channel 0" in last_status(lines)["message"]

    def test_filter_longer_than_frame(self, monkeypatch, capsys, tmp_path):
        overlay = write_overlay(tmp_path, {"signal": {"num_symbols": 16}, "model": {"half_lengths": 40}})
        code, lines = run_cli(monkeypatch, capsys, "train", "--config", overlay, "--out", str(tmp_path / "long"))
        assert code == constants.EXIT_CONFIG_ERROR
        assert last_status(lines)["status"] == "error"

    def test_prune_target_above_filter(self, monkeypatch, capsys, tmp_path):
        overlay = write_overlay(tmp_path, {"prune": {"target_half_lengths": 9}, "train": {"iterations": 1}})
        code, lines = run_cli(monkeypatch, capsys, "train", "--config", overlay, "--out", str(tmp_path / "prune"))
        assert code == constants.EXIT_CONFIG_ERROR
        assert last_status(lines)["status"] == "error"

    def test_numerical_failure(self, monkeypatch, capsys):
        def fail(self):
            raise NumericalError("activations blew up", layer=2)

        monkeypatch.setattr(ExperimentManager, "tcd", fail)
        code, lines = run_cli(monkeypatch, capsys, "tcd")
        assert code == constants.EXIT_NUMERICAL_ERROR
        assert last_status(lines)["layer"] == 2


class TestTcd:
    """Dispersive memory of the configured link"""

    def test_desk_preset(self, monkeypatch, capsys):
        code, lines = run_cli(monkeypatch, capsys, "tcd", "--preset", "desk-10g7")
        assert code == constants.EXIT_OK
        assert abs(last_status(lines)["t_cd"] - 68.6 * 400.0 / 2000.0) < 0.2


class TestSimulate:
    """Baseline SNR tables"""

    def test_reproducible_across_threads(self, monkeypatch, capsys, tmp_path):
        overlay = write_overlay(tmp_path, SMALL)
        outputs = []
        for threads in ("1", "2"):
            out = tmp_path / f"run{threads}"
            code, lines = run_cli(monkeypatch, capsys, "simulate", "--config", overlay,
                                  "--threads", threads, "--seed", "4", "--out", str(out))
            assert code == constants.EXIT_OK
            assert last_status(lines)["status"] == "success"
            outputs.append(out)

        first, second = outputs
        assert_array_equal(np.load(first / "received.npy"), np.load(second / "received.npy"))
        assert (first / "simulate_snr.csv").read_text() == (second / "simulate_snr.csv").read_text()
        header = read_csv(first / "simulate_snr.csv")[0]
        assert header == ["power_dbm", "cdc_snr_db", "dbp_1stps_snr_db"]
        manifest = json.loads((first / "manifest-simulate.json").read_text())
        assert manifest["seed"] == 4
        assert "threads" not in manifest["config"]

    def test_noiseless_linear_flags(self, monkeypatch, capsys, tmp_path):
        overlay = write_overlay(tmp_path, SMALL)
        code, lines = run_cli(monkeypatch, capsys, "simulate", "--config", overlay, "--noiseless",
                              "--gamma", "0", "--out", str(tmp_path / "clean"))
        assert code == constants.EXIT_OK
        peaks = last_status(lines)["peak_snr_db"]
        assert peaks["cdc"] > 100.0
        assert peaks["dbp_1stps"] > 100.0


class TestTrainAndEvaluate:
    """Training with pruning, then evaluation of the dump"""

    def test_alternating_preset(self, monkeypatch, capsys, tmp_path):
        overlay = write_overlay(tmp_path, {
            "signal": {"num_symbols": 64},
            "channel": {"steps_per_span": 1},
            "train": {"iterations": 62, "batch_size": 1, "log_interval": 0},
            "evaluate": {"powers_dbm": [0.0], "num_frames": 1, "dbp_steps_per_span": [1]},
        })
        out = tmp_path / "alt"
        code, lines = run_cli(monkeypatch, capsys, "train", "--preset", "desk-10g7-alt53",
                              "--config", overlay, "--out", str(out))
        assert code == constants.EXIT_OK
        assert last_status(lines)["total_taps"] == 77

        dump = json.loads((out / "model.json").read_text())
        assert dump["total_taps"] == 77
        assert dump["iteration"] == 62
        history = read_csv(out / "history.csv")
        assert len(history) == 63

        code, lines = run_cli(monkeypatch, capsys, "evaluate", "--preset", "desk-10g7-alt53",
                              "--config", overlay, "--out", str(out))
        assert code == constants.EXIT_OK
        header = read_csv(out / "evaluate_snr.csv")[0]
        assert header == ["power_dbm", "ldbp_snr_db", "ldbp_linear_only_snr_db", "cdc_snr_db", "dbp_1stps_snr_db"]

    def test_missing_model_dump(self, monkeypatch, capsys, tmp_path):
        code, _ = run_cli(monkeypatch, capsys, "evaluate", "--out", str(tmp_path / "empty"))
        assert code == constants.EXIT_CONFIG_ERROR


class TestResponse:
    """Filter response export"""

    def test_overall_is_sum_of_steps(self, monkeypatch, capsys, tmp_path):
        model = random_model(np.random.default_rng(0), [2, 3, 1])
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"model": model.to_dict()}))
        code, lines = run_cli(monkeypatch, capsys, "response", "--model", str(path), "--out", str(tmp_path))
        assert code == constants.EXIT_OK
        assert last_status(lines)["total_taps"] == 13

        rows = read_csv(tmp_path / "response.csv")
        header, body = rows[0], np.array(rows[1:], dtype=float)
        assert body.shape[0] == constants.RESPONSE_POINTS
        assert body[0, 0] == -0.5 and body[-1, 0] < 0.5
        steps = [header.index(f"step{i}_mag_db") for i in range(3)]
        overall = header.index("overall_mag_db")
        assert_allclose(body[:, overall], body[:, steps].sum(axis=1), atol=1e-7)


class TestResume:
    """Continuing training from a model dump"""

    def test_resume_matches_uninterrupted_run(self, monkeypatch, capsys, tmp_path):
        base = {
            "signal": {"num_symbols": 64},
            "channel": {"steps_per_span": 1},
            "train": {"batch_size": 2, "log_interval": 0, "power_set_dbm": [0.0, 3.0]},
        }
        long = write_overlay(tmp_path, {**base, "train": {**base["train"], "iterations": 4}}, "long.json")
        short = write_overlay(tmp_path, {**base, "train": {**base["train"], "iterations": 2}}, "short.json")

        code, _ = run_cli(monkeypatch, capsys, "train", "--config", long, "--out", str(tmp_path / "full"))
        assert code == constants.EXIT_OK
        code, _ = run_cli(monkeypatch, capsys, "train", "--config", short, "--out", str(tmp_path / "half"))
        assert code == constants.EXIT_OK
        code, lines = run_cli(monkeypatch, capsys, "train", "--config", long, "--out", str(tmp_path / "resumed"),
                              "--resume", str(tmp_path / "half" / "model.json"))
        assert code == constants.EXIT_OK
        assert last_status(lines)["iterations"] == 4

        full = json.loads((tmp_path / "full" / "model.json").read_text())
        resumed = json.loads((tmp_path / "resumed" / "model.json").read_text())
        assert resumed["model"] == full["model"]
        assert resumed["adam"] == full["adam"]
        assert [row[0] for row in read_csv(tmp_path / "resumed" / "history.csv")[1:]] == ["3", "4"]


class TestPruneCurve:
    """SNR versus total taps while pruning"""

    def test_rows_start_unpruned_and_lose_taps(self, monkeypatch, capsys, tmp_path):
        overlay = write_overlay(tmp_path, {
            "signal": {"num_symbols": 64},
            "channel": {"steps_per_span": 1},
            "train": {"iterations": 10, "batch_size": 1, "log_interval": 0},
            "prune": {"checkpoint_interval": 2},
            "evaluate": {"powers_dbm": [0.0], "num_frames": 1, "dbp_steps_per_span": [1]},
        })
        out = tmp_path / "curve"
        code, lines = run_cli(monkeypatch, capsys, "prune-curve", "--config", overlay, "--out", str(out))
        assert code == constants.EXIT_OK
        assert last_status(lines)["points"] == 4

        rows = read_csv(out / "prune_curve.csv")
        assert rows[0] == ["iteration", "total_taps", "snr_db", "t_cd"]
        body = rows[1:]
        assert [int(row[0]) for row in body] == [2, 4, 6, 8]
        assert [int(row[1]) for row in body] == [9, 7, 5, 3]
        assert len({row[3] for row in body}) == 1
        assert abs(float(body[0][3]) - last_status(lines)["t_cd"]) < 1e-3
        assert (out / "checkpoint-000002.json").exists()
