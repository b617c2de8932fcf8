"""
End-to-end tests of the phototaxis command line.
"""

import hashlib
import json
import sys

import pandas as pd
import pytest
from typer.testing import CliRunner

from src.cli.main import app, run
from src.core.config import parse_config, template
from src.core.storage import QUANTILE_NOTE, load_population

runner = CliRunner()

TINY_CONFIG = """\
[evolution]
population_size = 4
generations = 2
chunk_size = 2
seed = 3

[trial]
duration = 0.2
"""


def flat(text: str) -> str:
    """Output with all whitespace removed (rich wraps long lines)."""
    return "".join(text.split())


@pytest.fixture(autouse=True)
def registry(mock_env):
    return mock_env


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_CONFIG)
    return path


@pytest.fixture
def evolved(tmp_path, tiny_config):
    out = tmp_path / "evolved"
    result = runner.invoke(app, ["evolve", str(tiny_config), "--out", str(out), "-q"])
    assert result.exit_code == 0, result.output
    return out


def simulate(population, out, *args):
    return runner.invoke(
        app, ["simulate", str(population), "--out", str(out), "--duration", "1", *args]
    )


def test_evolve_writes_outputs(evolved):
    assert (evolved / "population.json").exists()
    history = pd.read_csv(evolved / "history.csv")
    assert list(history.columns) == ["generation", "best", "mean", "light_angle"]
    assert list(history["generation"]) == [0, 1]

    manifest = json.loads((evolved / "manifest.json").read_text())
    assert manifest["command"] == "evolve"
    assert manifest["seed"] == 3
    assert {o["path"] for o in manifest["outputs"]} == {"population.json", "history.csv"}
    for output in manifest["outputs"]:
        data = (evolved / output["path"]).read_bytes()
        assert output["sha256"] == hashlib.sha256(data).hexdigest()


def test_evolve_needs_a_config(tmp_path):
    result = runner.invoke(app, ["evolve", "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "--template" in result.output


def test_malformed_config_points_at_line(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[evolution]\npopulation_size = 4\nseed = = 1\n")
    result = runner.invoke(app, ["evolve", str(bad), "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "bad.toml:3:" in flat(result.output)
    assert not (tmp_path / "out").exists()


def test_out_of_range_config_names_key(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[interference]\nlambda = 1.5\n")
    result = runner.invoke(app, ["evolve", str(bad), "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "interference.lambda" in flat(result.output)


def test_replay_is_byte_identical(tmp_path, tiny_config, evolved):
    again = tmp_path / "again"
    result = runner.invoke(
        app, ["evolve", str(tiny_config), "--out", str(again), "-q", "--workers", "2"]
    )
    assert result.exit_code == 0, result.output
    for name in ("population.json", "history.csv"):
        assert (again / name).read_bytes() == (evolved / name).read_bytes()


def test_template_and_overrides(tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(
        app, ["evolve", "-t", "exp1", "-g", "0", "--seed", "4", "--out", str(out), "-q"]
    )
    assert result.exit_code == 0, result.output
    stored = load_population(out / "population.json")
    assert stored.population.generation == 0
    assert stored.population.rng_seed == 4
    assert stored.config.evolution.generations == 0


def test_continue_with_zero_generations(tmp_path, tiny_config, evolved):
    out = tmp_path / "continued"
    result = runner.invoke(
        app,
        ["evolve", str(tiny_config), "--from", str(evolved / "population.json"),
         "-g", "0", "--out", str(out), "-q"],
    )
    assert result.exit_code == 0, result.output
    before = load_population(evolved / "population.json").population
    after = load_population(out / "population.json").population
    assert after == before

    reseeded = tmp_path / "reseeded"
    result = runner.invoke(
        app,
        ["evolve", str(tiny_config), "--from", str(evolved / "population.json"),
         "-g", "0", "--seed", "9", "--out", str(reseeded), "-q"],
    )
    assert result.exit_code == 0, result.output
    assert load_population(reseeded / "population.json").population == before


def test_descendant_run(tmp_path, tiny_config, evolved):
    out = tmp_path / "descendant"
    result = runner.invoke(
        app,
        ["evolve", str(tiny_config), "--from", str(evolved / "population.json"),
         "-g", "1", "--seed", "9", "--out", str(out), "-q"],
    )
    assert result.exit_code == 0, result.output
    pop = load_population(out / "population.json").population
    assert pop.generation == 3
    assert pop.rng_seed == 9


def test_simulate_writes_one_log_per_light(tmp_path, evolved):
    out = tmp_path / "sim"
    result = simulate(evolved / "population.json", out, "-l", "12", "-l", "3")
    assert result.exit_code == 0, result.output

    log = pd.read_csv(out / "log_light12.csv")
    assert len(log) == 101
    assert {"t", "x", "y", "alpha", "psi_left", "m_right", "y_10"} <= set(log.columns)
    assert (out / "log_light03.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["arguments"]["duration"] == 1.0


def test_simulate_explicit_coordinates(tmp_path, evolved):
    out = tmp_path / "sim"
    result = simulate(evolved / "population.json", out, "--light-xy", "1.5,-2", "-m", "0")
    assert result.exit_code == 0, result.output
    assert sorted(p.name for p in out.glob("log_*.csv")) == ["log_xy01.csv"]


@pytest.mark.parametrize(
    "args", [["-m", "nobody"], ["-l", "13"], ["-l", "noon"], ["--light-xy", "1;2"]]
)
def test_simulate_bad_selection(tmp_path, evolved, args):
    result = simulate(evolved / "population.json", tmp_path / "sim", *args)
    assert result.exit_code == 1


def test_simulate_missing_population(tmp_path):
    result = simulate(tmp_path / "absent.json", tmp_path / "sim")
    assert result.exit_code == 1


def test_lesion_is_invisible_without_interference(tmp_path, evolved):
    population = evolved / "population.json"
    plain = simulate(population, tmp_path / "plain", "-l", "2")
    lesioned = simulate(
        population, tmp_path / "lesioned", "-l", "2", "--lesion-interference", "both"
    )
    assert plain.exit_code == lesioned.exit_code == 0
    name = "log_light02.csv"
    assert (tmp_path / "plain" / name).read_bytes() == (tmp_path / "lesioned" / name).read_bytes()


def test_probe_with_scripted_stimulus(tmp_path, evolved):
    out = tmp_path / "probe"
    result = runner.invoke(
        app,
        ["probe", str(evolved / "population.json"), "--out", str(out), "-d", "1",
         "--left", "onset=0.2,peak=1,decay=0.2,plateau=0.3"],
    )
    assert result.exit_code == 0, result.output
    log = pd.read_csv(out / "probe.csv")
    assert len(log) == 101
    assert log["s_left"].max() == pytest.approx(1.0)
    assert (log["s_right"] == 0.0).all()


@pytest.mark.parametrize(
    "script", ["onset=30,plateau=1", "onset", "onset=fast", "onset=1,speed=2"]
)
def test_probe_rejects_bad_scripts(tmp_path, evolved, script):
    result = runner.invoke(
        app,
        ["probe", str(evolved / "population.json"), "--out", str(tmp_path / "p"),
         "-d", "10", "--left", script],
    )
    assert result.exit_code == 1


def test_stats_pools_logs(tmp_path, evolved):
    sim = tmp_path / "sim"
    simulate(evolved / "population.json", sim, "-l", "1", "-l", "7")
    out = tmp_path / "stats"
    result = runner.invoke(
        app,
        ["stats", str(sim / "log_light01.csv"), str(sim / "log_light07.csv"),
         "--start", "0", "--end", "1", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output

    lines = (out / "stats.csv").read_text().splitlines()
    assert lines[0] == QUANTILE_NOTE
    stats = pd.read_csv(out / "stats.csv", comment="#")
    assert list(stats["motor"]) == ["m_left", "m_right"]
    assert list(stats["count"]) == [200, 200]
    assert len(pd.read_csv(out / "samples.csv")) == 200


def test_stats_empty_window_is_a_runtime_error(tmp_path, evolved):
    sim = tmp_path / "sim"
    simulate(evolved / "population.json", sim, "-l", "1")
    result = runner.invoke(
        app,
        ["stats", str(sim / "log_light01.csv"), "--start", "0.5", "--end", "0.5",
         "--out", str(tmp_path / "stats")],
    )
    assert result.exit_code == 2


def test_stats_unreadable_log(tmp_path):
    result = runner.invoke(
        app, ["stats", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "stats")]
    )
    assert result.exit_code == 1


def test_classify_orbit(tmp_path, evolved):
    sim = tmp_path / "sim"
    runner.invoke(
        app, ["simulate", str(evolved / "population.json"), "--out", str(sim), "-d", "5", "-l", "4"]
    )
    log = str(sim / "log_light04.csv")

    result = runner.invoke(app, ["classify", log, "-l", "4", "--start", "0", "--end", "5"])
    assert result.exit_code == 0, result.output
    assert any(label in result.output for label in ("Type1", "Type2", "Unclassified"))

    short = runner.invoke(app, ["classify", log, "-l", "4", "--start", "0", "--end", "2"])
    assert short.exit_code == 2

    neither = runner.invoke(app, ["classify", log, "--start", "0", "--end", "5"])
    assert neither.exit_code == 1


def test_peaks_of_probe_log(tmp_path, evolved):
    out = tmp_path / "probe"
    runner.invoke(
        app,
        ["probe", str(evolved / "population.json"), "--out", str(out), "-d", "1",
         "--left", "onset=0.2,peak=1,decay=0.2,plateau=0.3"],
    )
    result = runner.invoke(app, ["peaks", str(out / "probe.csv"), "--column", "s_left"])
    assert result.exit_code == 0, result.output
    assert "1 peak(s) in s_left" in result.output

    from_start = runner.invoke(
        app, ["peaks", str(out / "probe.csv"), "--column", "s_left", "--start", "0.1"]
    )
    assert from_start.exit_code == 0, from_start.output
    assert "1 peak(s) in s_left" in from_start.output

    missing = runner.invoke(app, ["peaks", str(out / "probe.csv"), "--column", "nope"])
    assert missing.exit_code == 2


def test_defaults_prints_a_loadable_config():
    result = runner.invoke(app, ["defaults", "-t", "exp3"])
    assert result.exit_code == 0
    assert parse_config(result.output) == template("exp3")


def test_defaults_unknown_template():
    result = runner.invoke(app, ["defaults", "-t", "exp9"])
    assert result.exit_code == 1


def test_runs_are_recorded(evolved):
    result = runner.invoke(app, ["runs", "list"])
    assert result.exit_code == 0
    assert "evolve" in result.output
    assert "finished" in result.output

    missing = runner.invoke(app, ["runs", "show", "no-such-run"])
    assert missing.exit_code == 1


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert "phototaxis" in result.output


def test_usage_errors_exit_with_one(monkeypatch):
    monkeypatch.setattr(sys, "argv", ["phototaxis", "simulate"])
    with pytest.raises(SystemExit) as info:
        run()
    assert info.value.code == 1
