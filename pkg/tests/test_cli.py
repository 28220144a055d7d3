"""CLI behaviour: exit codes, CSV/JSONL outputs, and the filter fuzz loop."""
import json

import pytest

from hetnav.cli import build_parser, main


def test_parser_help_lists_subcommands():
    help_text = build_parser().format_help()
    assert "run" in help_text
    assert "fuzz-filter" in help_text
    with pytest.raises(SystemExit):
        main([])  # a subcommand is required


def test_run_writes_metrics_and_prints_summary(tmp_path, capsys):
    csv_path = tmp_path / "metrics.csv"
    code = main(
        ["run", "--episodes", "3", "--steps", "8", "--metrics", str(csv_path)]
    )
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 4  # header + one row per episode
    out = capsys.readouterr().out
    assert "episodes=3" in out
    assert "metrics csv:" in out


def test_run_accepts_toml_config(tmp_path, capsys):
    scenario = tmp_path / "scenario.toml"
    scenario.write_text("n_t = 1\nmax_steps = 20\n")
    code = main(["run", "--config", str(scenario), "--episodes", "2", "--steps", "6"])
    assert code == 0
    assert "of 1" in capsys.readouterr().out  # target count from the file


def test_run_invalid_preset_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--preset", "R9"])
    assert excinfo.value.code == 2


def test_run_unknown_policy_returns_2(capsys):
    code = main(["run", "--episodes", "1", "--steps", "1", "--policy", "zigzag"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_run_missing_config_returns_2(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "absent.toml")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_run_job_count_leaves_csv_bytes_unchanged(tmp_path):
    # Enough episodes for two lane blocks, so --jobs 2 really forks workers.
    episodes = "130"
    path_a = tmp_path / "a.csv"
    path_b = tmp_path / "b.csv"
    base = ["run", "--episodes", episodes, "--steps", "5", "--policy", "greedy"]
    assert main(base + ["--jobs", "1", "--metrics", str(path_a)]) == 0
    assert main(base + ["--jobs", "2", "--metrics", str(path_b)]) == 0
    assert path_a.read_bytes() == path_b.read_bytes()


def test_run_trajectory_jsonl(tmp_path):
    traj_path = tmp_path / "rollout.jsonl"
    code = main(
        [
            "run", "--episodes", "2", "--steps", "5",
            "--policy", "random", "--traj", str(traj_path),
        ]
    )
    assert code == 0
    rows = [json.loads(line) for line in traj_path.read_text().splitlines()]
    assert rows
    assert set(rows[0]) == {"episode", "step", "agents", "events", "done"}
    assert rows[0]["episode"] == 0 and rows[0]["step"] == 1
    assert {row["episode"] for row in rows} == {0, 1}


def test_fuzz_filter_clean_run(capsys):
    code = main(["fuzz-filter", "--instances", "20", "--samples", "300"])
    assert code == 0
    out = capsys.readouterr().out
    assert "instances=20 mismatches=0" in out


def test_fuzz_filter_rejects_zero_instances(capsys):
    code = main(["fuzz-filter", "--instances", "0"])
    assert code == 2
    assert "--instances" in capsys.readouterr().err
