import json

import pytest

from rasim.cli import main

SMALL_WORKLOADS = [
    {"kind": "audio_eq", "total_kcycles": 2_800, "segment_count": 4},
    {"kind": "corner_detection", "total_kcycles": 12_000, "segment_count": 4},
]


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"runs": 1, "sim_time_ms": 1_000, "workloads": SMALL_WORKLOADS}))
    return str(path)


def test_run_writes_outputs(tmp_path, small_config, capsys):
    out = tmp_path / "out"
    assert main(["--config", small_config, "--out", str(out), "--quiet"]) == 0
    assert "policy: scalability" in capsys.readouterr().out
    for name in ["run_0_cpu.csv", "run_0_alloc.csv", "avg_cpu.csv", "events.csv", "summary.txt", "config.json"]:
        assert (out / name).exists()
    assert (out / "air_audio_eq.json").exists()
    saved = json.loads((out / "config.json").read_text())
    assert saved["runs"] == 1
    assert saved["output_dir"] == str(out)


def test_same_seed_gives_identical_files(tmp_path, small_config):
    for name in ("a", "b"):
        assert main(["--config", small_config, "--out", str(tmp_path / name), "--seed", "11", "--quiet"]) == 0
    for name in ["run_0_cpu.csv", "run_0_alloc.csv", "avg_cpu.csv", "events.csv"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_compare(tmp_path, small_config, capsys):
    out = tmp_path / "cmp"
    assert main(["--config", small_config, "--out", str(out), "--compare", "scalability,load", "--quiet"]) == 0
    printed = capsys.readouterr().out
    assert "avg_cpu_load" in printed
    assert (out / "compare.csv").exists()
    assert (out / "scalability" / "avg_cpu.csv").exists()
    assert (out / "load" / "avg_cpu.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["--runs", "three"],
        ["--sim-time-ms", "1.5"],
        ["--log-level", "LOUD"],
        ["--no-such-flag"],
    ],
)
def test_usage_errors_exit_with_one(argv, capsys):
    assert main(argv) == 1
    assert "usage: simulate" in capsys.readouterr().err


def test_help_exits_with_zero(capsys):
    assert main(["--help"]) == 0
    assert "--compare" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["--runs", "0"],
        ["--policy", "random"],
        ["--compare", "scalability"],
        ["--compare", "scalability,best"],
        ["--config", "/nonexistent/config.json"],
    ],
)
def test_config_errors_exit_with_one(argv, tmp_path, caplog):
    assert main(argv + ["--out", str(tmp_path), "--quiet"]) == 1
    assert "config error" in caplog.text


def test_schema_error_names_the_key(tmp_path, caplog):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"platform": {"num_cpus": 0}}))
    assert main(["--config", str(path), "--quiet"]) == 1
    assert "platform.num_cpus" in caplog.text


def test_compare_same_policy_twice(tmp_path, small_config):
    out = tmp_path / "twice"
    assert main(["--config", small_config, "--out", str(out), "--compare", "load,load", "--quiet"]) == 0
    header, *rows = (out / "compare.csv").read_text().splitlines()
    assert header == "metric,load,load"
    for row in rows:
        _, first, second = row.split(",")
        assert first == second
