"""Command-line runner: exit codes, outputs, override plumbing, determinism."""

import csv
import json

import pytest

from mmwloc import cli
from mmwloc.config import NetworkConfig, from_boundary_mapping, parse_config_text
from mmwloc.errors import ConfigError, NumericError


class TestConfigBoundary:
    def test_flat_file_parsing(self):
        text = """
        # deployment
        network.lambda_per_km = 50    # converted to 1/m
        network.p_t_dbm = 30
        network.noise_dbm_hz = -90
        """
        entries = parse_config_text(text)
        cfg = from_boundary_mapping(entries)
        assert cfg.bs_density == pytest.approx(0.05)
        assert cfg.p_t == pytest.approx(1.0)
        assert cfg.noise_psd == pytest.approx(1e-12)

    def test_noise_total_dbw(self):
        cfg = from_boundary_mapping({"network.noise_dbw": -30})
        assert cfg.noise_psd == pytest.approx(1e-3 / cfg.bandwidth)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            from_boundary_mapping({"network.bogus": 1})

    def test_bad_line_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("just words\n")

    def test_invalid_values_surface_as_config_error(self):
        with pytest.raises(ConfigError):
            NetworkConfig(bs_density=-1.0)


class TestCliRuns:
    def test_error_vs_dictionary_roundtrip(self, tmp_path):
        code = cli.main(["run", "error-vs-dictionary", "--out", str(tmp_path),
                         "--set", "experiment.k_max=6"])
        assert code == 0
        with open(tmp_path / "error_vs_dictionary.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 6
        assert float(rows[0]["p_bs"]) == 0.0
        manifest = json.loads((tmp_path / "error-vs-dictionary_manifest.json").read_text())
        assert manifest["experiment"] == "error-vs-dictionary"
        assert manifest["config"]["bs_density"] == pytest.approx(0.05)

    def test_dotted_network_flag(self, tmp_path):
        code = cli.main(["run", "error-vs-dictionary", "--out", str(tmp_path),
                         "--network.lambda_per_m", "0.02",
                         "--set", "experiment.k_max=2"])
        assert code == 0
        manifest = json.loads((tmp_path / "error-vs-dictionary_manifest.json").read_text())
        assert manifest["config"]["bs_density"] == pytest.approx(0.02)

    def test_dump_dictionary(self, tmp_path):
        code = cli.main(["dump-dictionary", "--out", str(tmp_path),
                         "--cell-size", "20", "--n-max", "4"])
        assert code == 0
        lines = (tmp_path / "beam_dictionary.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 10

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        code = cli.main(["run", "error-vs-dictionary", "--out", str(tmp_path),
                         "--set", "nonsense.key=1"])
        assert code == 2
        assert "nonsense.key" in capsys.readouterr().err

    def test_bad_value_exits_2(self, tmp_path):
        code = cli.main(["run", "error-vs-dictionary", "--out", str(tmp_path),
                         "--network.lambda_per_m", "not-a-number"])
        assert code == 2

    def test_numeric_error_exits_3(self, tmp_path, monkeypatch):
        def boom(spec):
            raise NumericError("quadrature failed in test")
        monkeypatch.setattr(cli, "run_experiment", boom)
        code = cli.main(["run", "error-vs-dictionary", "--out", str(tmp_path)])
        assert code == 3

    def test_validate_outputs_are_bit_identical_across_threads(self, tmp_path):
        # determinism guarantee: same (config, seed) regenerates the same
        # bytes regardless of the thread count
        args = ["validate", "--seed", "9", "--trials", "4000",
                "--set", "experiment.lambdas=0.05"]
        code = cli.main(args + ["--out", str(tmp_path / "a"), "--threads", "1"])
        assert code == 0
        code = cli.main(args + ["--out", str(tmp_path / "b"), "--threads", "4"])
        assert code == 0
        a = (tmp_path / "a" / "validate_analytical.csv").read_bytes()
        b = (tmp_path / "b" / "validate_analytical.csv").read_bytes()
        assert a == b

    def test_optimize_subcommand(self, tmp_path, capsys):
        code = cli.main(["optimize", "--out", str(tmp_path),
                         "--set", "network.lambda_per_m=0.05"])
        assert code == 0
        out = capsys.readouterr().out
        assert "k_star=" in out
        assert (tmp_path / "optimizer_per_k.csv").exists()

    def test_access_delay_experiment(self, tmp_path):
        code = cli.main(["run", "access-delay", "--out", str(tmp_path),
                         "--set", "experiment.lambda_points=3"])
        assert code == 0
        with open(tmp_path / "access_delay.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        for row in rows:
            assert (float(row["proposed_ms"]) < float(row["iterative_ms"])
                    < float(row["exhaustive_ms"]))
