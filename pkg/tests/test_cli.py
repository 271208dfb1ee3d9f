import json
import subprocess
import sys

import pytest

from nadent.cli import main
from nadent.experiments import make_config, run_experiment, write_report


def run_cli(args):
    return main(args)


class TestConfigResolution:
    def test_defaults_per_experiment(self):
        cfg = make_config("gw-certificate")
        assert cfg.word_length == 10 and cfg.N == 6

    def test_unknown_experiment(self):
        with pytest.raises(ValueError):
            make_config("unknown")

    def test_config_file_and_flag_override(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"word_length": 4, "level_cap": 4}))
        code = run_cli(
            [
                "space-check",
                "--config",
                str(cfg_file),
                "--out",
                str(tmp_path / "out"),
                "--set",
                "level_cap=5",
            ]
        )
        assert code == 0
        report = json.loads((tmp_path / "out" / "space-check.json").read_text())
        assert report["config"]["word_length"] == 4
        assert report["config"]["level_cap"] == 5


class TestReports:
    def test_space_check_writes_json(self, tmp_path):
        code = run_cli(
            ["space-check", "--out", str(tmp_path), "--set", "word_length=3",
             "--set", "level_cap=3"]
        )
        assert code == 0
        data = json.loads((tmp_path / "space-check.json").read_text())
        assert data["ok"] and data["experiment"] == "space-check"
        assert data["backend"] in ("pure", "compiled")

    def test_failing_run_exits_nonzero(self, tmp_path):
        code = run_cli(
            [
                "counterexample",
                "--out",
                str(tmp_path),
                "--set",
                "word_length=4",
                "--set",
                "level_cap=4",
                "--set",
                "horizons=[1,2,8]",
            ]
        )
        assert code == 1
        data = json.loads((tmp_path / "counterexample.json").read_text())
        assert not data["ok"]

    def test_tables_written_as_csv(self, tmp_path):
        cfg = make_config(
            "counterexample",
            {
                "word_length": 5,
                "level_cap": 5,
                "horizons": [1, 2, 3],
                "y_word_length": 6,
                "y_level_cap": 6,
                "y_horizons": [1, 2, 3, 4, 5],
                "n1": 2,
                "n2": 2,
            },
        )
        report = run_experiment(cfg)
        paths = write_report(report, tmp_path)
        names = {p.name for p in paths}
        assert "counterexample.json" in names
        assert "counterexample__x_cover_counts.csv" in names
        csv_text = (tmp_path / "counterexample__x_cover_counts.csv").read_text()
        assert csv_text.splitlines()[0] == "n,count,log_count,exact_flag"

    def test_determinism_across_runs(self, tmp_path):
        cfg = {
            "word_length": 4,
            "level_cap": 4,
            "horizons": [1, 2, 3],
            "y_word_length": 5,
            "y_level_cap": 5,
            "y_horizons": [1, 2, 3, 4],
            "n1": 2,
            "n2": 2,
        }
        blobs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            args = ["counterexample", "--out", str(out)]
            for key, value in cfg.items():
                args += ["--set", f"{key}={json.dumps(value)}"]
            assert run_cli(args) == 0
            blobs.append(
                [
                    (p.name, p.read_bytes())
                    for p in sorted(out.iterdir())
                ]
            )
        assert blobs[0] == blobs[1]


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "nadent.cli",
                "space-check",
                "--out",
                str(tmp_path),
                "--set",
                "word_length=3",
                "--set",
                "level_cap=2",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "PASS" in proc.stdout
