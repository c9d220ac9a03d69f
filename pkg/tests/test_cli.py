"""CLI surface tests: subcommands, flags, exit codes, figures, env fallback."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from romeo.cli import main

MINI = Path(__file__).parent / "data" / "mini_juliet"


@pytest.fixture()
def runner():
    return CliRunner()


def build_mini(runner, outdir, *extra):
    result = runner.invoke(
        main, ["build", "--input", str(MINI), "--output", str(outdir), "--seed", "0", *extra]
    )
    assert result.exit_code == 0, result.output
    return result


class TestIngestCommand:
    def test_ingest_writes_store(self, runner, tmp_path):
        out = tmp_path / "store"
        result = runner.invoke(main, ["ingest", "--input", str(MINI), "--output", str(out)])
        assert result.exit_code == 0, result.output
        assert "parsed 12 testcases, 0 failures" in result.output
        assert (out / "ingest_manifest.json").exists()
        assert len(list((out / "objects").glob("*.json"))) == 12

    def test_ingest_reports_failures_without_aborting(self, runner, tmp_path):
        tree = tmp_path / "tree"
        tree.mkdir()
        for name in ("CWE191_Integer_Underflow__int_sub_01", "CWE546_Suspicious_Comment__basic_01"):
            shutil.copy(MINI / f"{name}.dis", tree / f"{name}.dis")
            shutil.copy(MINI / f"{name}.sym", tree / f"{name}.sym")
        (tree / "CWE546_Suspicious_Comment__basic_01.dis").write_text("broken\n")
        result = runner.invoke(
            main, ["ingest", "--input", str(tree), "--output", str(tmp_path / "store")]
        )
        assert result.exit_code == 0
        assert "parsed 1 testcases, 1 failures" in result.output

    def test_empty_tree_warns(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(
            main, ["ingest", "--input", str(empty), "--output", str(tmp_path / "store")]
        )
        assert result.exit_code == 0
        assert "warning" in result.output.lower()


class TestBuildCommand:
    def test_build_outputs(self, runner, tmp_path):
        out = tmp_path / "dataset"
        result = build_mini(runner, out)
        assert "train=24 valid=3 test=3" in result.output
        for name in ("train.jsonl", "valid.jsonl", "test.jsonl", "stats.json", "manifest.json"):
            assert (out / name).exists()

    def test_no_context_flag(self, runner, tmp_path):
        out = tmp_path / "nocontext"
        build_mini(runner, out, "--no-context")
        records = [
            json.loads(line)
            for line in (out / "train.jsonl").read_text().splitlines()
        ]
        # exactly one function per text: a single header line
        for record in records:
            headers = [
                line for line in record["text"].split("\n") if line.startswith("!")
            ]
            assert len(headers) == 1

    def test_build_determinism_via_cli(self, runner, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        build_mini(runner, out_a)
        build_mini(runner, out_b)
        for name in ("train.jsonl", "valid.jsonl", "test.jsonl", "stats.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_env_fallback(self, runner, tmp_path):
        out_env = tmp_path / "env"
        result = runner.invoke(
            main,
            ["build", "--input", str(MINI), "--output", str(out_env)],
            env={"ROMEO_SEED": "7"},
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((out_env / "manifest.json").read_text())
        assert manifest["seed"] == 7

    def test_bad_label_mode_is_config_error(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["build", "--input", str(MINI), "--output", str(tmp_path / "x"),
             "--label-mode", "ternary"],
        )
        assert result.exit_code == 2

    def test_missing_input_is_config_error(self, runner, tmp_path):
        result = runner.invoke(
            main,
            ["build", "--input", str(tmp_path / "nope"), "--output", str(tmp_path / "x")],
        )
        assert result.exit_code == 2

    def test_fatal_build_error_exits_one(self, runner, tmp_path):
        # two-testcase corpus below the minimum split size
        tree = tmp_path / "tiny"
        tree.mkdir()
        name = "CWE546_Suspicious_Comment__basic_01"
        shutil.copy(MINI / f"{name}.dis", tree / f"{name}.dis")
        shutil.copy(MINI / f"{name}.sym", tree / f"{name}.sym")
        result = runner.invoke(
            main,
            ["build", "--input", str(tree), "--output", str(tmp_path / "x"),
             "--cwe", "404"],
        )
        assert result.exit_code == 1
        assert "stage split" in result.output

    def test_override_files(self, runner, tmp_path):
        allowlist = tmp_path / "allow.txt"
        allowlist.write_text("printf\nputs\nmemcpy\n_IO_stdin_used  # format strings\n")
        excludes = tmp_path / "excl.txt"
        excludes.write_text("main\n_start\n")
        roles = tmp_path / "roles.txt"
        roles.write_text(
            "primary_bad (?:^|[_:])bad(?:\\(.*\\))?$\n"
            "primary_good (?:^|[_:])good(?:\\(.*\\))?$\n"
            "secondary_good good.+\n"
        )
        out = tmp_path / "dataset"
        build_mini(
            runner, out,
            "--allowlist", str(allowlist),
            "--exclude-list", str(excludes),
            "--role-regexes", str(roles),
        )
        assert (out / "train.jsonl").exists()


class TestSubsetCommand:
    def test_subset_filters(self, runner, tmp_path):
        out = tmp_path / "subset"
        result = runner.invoke(
            main,
            ["subset", "--input", str(MINI), "--output", str(out),
             "--seed", "0", "--cwe", "121"],
        )
        assert result.exit_code == 0, result.output
        stats = json.loads((out / "stats.json").read_text())
        assert set(stats["per_cwe"]) == {"121"}

    def test_subset_requires_cwe(self, runner, tmp_path):
        result = runner.invoke(
            main, ["subset", "--input", str(MINI), "--output", str(tmp_path / "x")]
        )
        assert result.exit_code == 2


class TestStatsCommand:
    def test_prints_table_and_renders_figures(self, runner, tmp_path):
        out = tmp_path / "dataset"
        build_mini(runner, out)
        result = runner.invoke(main, ["stats", str(out)])
        assert result.exit_code == 0, result.output
        assert "CWE-191" in result.output
        assert "duplicate fraction" in result.output
        for figure in (
            "cwe_distribution.png",
            "flow_variant_distribution.png",
            "split_label_balance.png",
        ):
            path = out / figure
            assert path.exists() and path.stat().st_size > 0
            assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_no_figures_flag(self, runner, tmp_path):
        out = tmp_path / "dataset"
        build_mini(runner, out)
        result = runner.invoke(main, ["stats", str(out), "--no-figures"])
        assert result.exit_code == 0
        assert not (out / "cwe_distribution.png").exists()

    def test_missing_stats_file(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["stats", str(empty)])
        assert result.exit_code == 1

    def test_empty_dataset_prints_zero_table(self, runner, tmp_path):
        from romeo.dataset import DatasetBundle, compute_stats, serialize

        bundle = DatasetBundle(train=[], val=[], test=[])
        bundle.stats = compute_stats(bundle)
        outdir = tmp_path / "empty_dataset"
        serialize(bundle, outdir)
        result = runner.invoke(main, ["stats", str(outdir), "--no-figures"])
        assert result.exit_code == 0, result.output
        assert "train          0         0         0" in result.output


class TestTokenizeCommand:
    def test_trains_and_reports(self, runner, tmp_path):
        out = tmp_path / "dataset"
        build_mini(runner, out)
        result = runner.invoke(main, ["tokenize", str(out), "--vocab-size", "300"])
        assert result.exit_code == 0, result.output
        assert (out / "bpe.model").exists()
        assert "train" in result.output and "test" in result.output

    def test_missing_train_split_is_error(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        (empty / "manifest.json").write_text('{"seed": 0, "label_mode": "binary"}')
        result = runner.invoke(main, ["tokenize", str(empty)])
        assert result.exit_code == 1


class TestVersion:
    def test_version_flag(self, runner):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "romeo" in result.output
