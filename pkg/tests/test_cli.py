# tests/test_cli.py
import json

import pytest

from main import build_parser, run

DIST_TEST = """
kind = "dist-test"

[dist_test]
batch_sizes = [6]
samples = 500
gaussian_limit_batch_size = 500
"""


class TestParser:
    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["gamma-scan", "--runs", "20", "--threads", "2"])
        assert (args.command, args.runs, args.threads) == ("gamma-scan", 20, 2)
        args = parser.parse_args(["compare", "a", "b"])
        assert (str(args.result_a), str(args.result_b)) == ("a", "b")

    def test_compare_takes_only_an_output_directory(self):
        parser = build_parser()
        args = parser.parse_args(["compare", "a", "b", "--out", "diff"])
        assert not hasattr(args, "seed") and not hasattr(args, "threads")
        for flag in ("--seed", "--runs", "--threads"):
            with pytest.raises(SystemExit):
                parser.parse_args(["compare", "a", "b", flag, "3"])

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train-everything"])


class TestRun:
    def test_theory_table(self, clean_env, tmp_path, capsys):
        assert run(["theory-table", "--out", str(tmp_path)]) == 0
        assert capsys.readouterr().out.strip() == str(tmp_path / "manifest.json")
        assert (tmp_path / "theory_table.csv").is_file()

    def test_configuration_error(self, clean_env, tmp_path, capsys):
        assert run(["static-ensemble", "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        on_disk = json.loads((tmp_path / "error.json").read_text())
        assert on_disk["error"] == "CONFIG_ERROR"
        assert any("networks" in v for v in on_disk["details"]["violations"])
        assert '"error": "CONFIG_ERROR"' in err

    def test_error_report_on_stderr(self, clean_env, tmp_path, capsys):
        missing = tmp_path / "absent.toml"
        assert run(["gamma-scan", "--config", str(missing)]) == 2
        assert '"error": "CONFIG_ERROR"' in capsys.readouterr().err

    def test_undecodable_data_file_is_reported(self, clean_env, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_bytes(b"a,label\n\xff,0\n")
        config = tmp_path / "static.toml"
        config.write_text(
            f"runs = 2\n[data]\nsource = \"csv\"\npath = \"{data.as_posix()}\"\n"
            "[networks.relu]\ninput_dim = 1\nhidden_widths = [4]\n"
        )
        out = tmp_path / "out"
        code = run(["static-ensemble", "--config", str(config), "--out", str(out)])
        assert code == 1
        assert '"error": "DATA_FORMAT"' in capsys.readouterr().err

    def test_env_out_dir(self, clean_env, tmp_path):
        clean_env.setenv("IGB_OUT_DIR", str(tmp_path / "from_env"))
        assert run(["theory-table"]) == 0
        assert (tmp_path / "from_env" / "results.json").is_file()

    def test_replay_is_byte_identical(self, clean_env, tmp_path):
        config = tmp_path / "dist.toml"
        config.write_text(DIST_TEST)
        first, replay = tmp_path / "first", tmp_path / "replay"
        assert run(["dist-test", "--config", str(config), "--out", str(first), "--seed", "4"]) == 0
        manifest = first / "manifest.json"
        assert run(["dist-test", "--config", str(manifest), "--out", str(replay)]) == 0
        for name in ("results.json", "dist_test.csv"):
            assert (first / name).read_bytes() == (replay / name).read_bytes()
        assert json.loads(manifest.read_text())["resolved_config"]["base_seed"] == 4

    def test_compare(self, clean_env, tmp_path):
        for name in ("a", "b"):
            assert run(["theory-table", "--out", str(tmp_path / name)]) == 0
        out = tmp_path / "diff"
        assert run(["compare", str(tmp_path / "a"), str(tmp_path / "b"), "--out", str(out)]) == 0
        report = json.loads((out / "compare.json").read_text())
        assert all(row["gamma_delta"] == 0.0 for row in report["rows"])
