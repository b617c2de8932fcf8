"""
Tests for the run registry: tables, queries and the recorder.
"""

from datetime import datetime, timedelta

import pytest
from sqlalchemy.exc import OperationalError

from src.core.database import get_session_context
from src.core.evolution import GenerationSummary
from src.core.models import GenerationRecord, Run
from src.core.registry import (
    RunRecorder,
    finish_run,
    find_run,
    list_runs,
    record_generations,
    start_run,
)


def summary(generation: int, best: float) -> GenerationSummary:
    return GenerationSummary(generation, best, best + 1.0, 0.5, ())


def test_run_creation(test_db_session):
    """A started run is pending until finished."""
    run = start_run(test_db_session, "evolve", seed=3, config_name="exp1")
    test_db_session.commit()

    retrieved = test_db_session.query(Run).filter_by(command="evolve").first()
    assert retrieved is not None
    assert retrieved.id == run.id
    assert retrieved.seed == 3
    assert retrieved.status == "running"
    assert retrieved.is_finished is False
    assert retrieved.duration_seconds is None


def test_finish_run(test_db_session):
    run = start_run(test_db_session, "simulate")
    finish_run(test_db_session, run.id)
    test_db_session.commit()

    assert run.is_finished is True
    assert run.duration_seconds is not None
    assert run.duration_seconds >= 0


def test_finish_unknown_run(test_db_session):
    assert finish_run(test_db_session, "missing") is None


def test_failed_run_keeps_message(test_db_session):
    run = start_run(test_db_session, "stats")
    finish_run(test_db_session, run.id, "failed", "empty window")
    test_db_session.commit()

    assert run.status == "failed"
    assert run.message == "empty window"


def test_generation_records(test_db_session):
    """Generations come back ordered, and the last one gives the best score."""
    run = start_run(test_db_session, "evolve")
    record_generations(test_db_session, run.id, [summary(1, 2.0), summary(0, 3.0)])
    test_db_session.commit()
    test_db_session.refresh(run)

    assert [g.generation for g in run.generations] == [0, 1]
    assert run.best_score == 2.0
    assert test_db_session.query(GenerationRecord).count() == 2


def test_best_score_without_generations(test_db_session):
    run = start_run(test_db_session, "probe")
    assert run.best_score is None


def test_list_runs_newest_first(test_db_session):
    now = datetime(2026, 1, 1)
    for offset, command in enumerate(["evolve", "simulate", "evolve"]):
        run = start_run(test_db_session, command)
        run.started_at = now + timedelta(minutes=offset)
    test_db_session.commit()

    runs = list_runs(test_db_session)
    assert [r.command for r in runs] == ["evolve", "simulate", "evolve"][::-1]
    assert len(list_runs(test_db_session, command="evolve")) == 2
    assert len(list_runs(test_db_session, limit=1)) == 1


def test_find_run_by_prefix(test_db_session):
    run = start_run(test_db_session, "evolve")
    test_db_session.commit()

    assert find_run(test_db_session, run.id[:8]) is run
    assert find_run(test_db_session, "zzzz") is None


def test_recorder_writes_run_and_generations(mock_env):
    with RunRecorder("evolve", seed=5, config_name="exp2") as recorder:
        recorder.add_generation(summary(0, 4.0))
        recorder.add_generation(summary(1, 3.5))

    assert recorder.run_id is not None
    assert mock_env["db_path"].exists()
    with get_session_context() as session:
        run = session.get(Run, recorder.run_id)
        assert run.status == "finished"
        assert run.seed == 5
        assert [g.best for g in run.generations] == [4.0, 3.5]


def test_recorder_marks_failures(mock_env):
    with pytest.raises(RuntimeError):
        with RunRecorder("simulate") as recorder:
            raise RuntimeError("boom")

    with get_session_context() as session:
        run = session.get(Run, recorder.run_id)
        assert run.status == "failed"
        assert run.message == "boom"


def test_disabled_recorder_touches_nothing(mock_env):
    with RunRecorder("evolve", enabled=False) as recorder:
        recorder.add_generation(summary(0, 1.0))

    assert recorder.run_id is None
    assert not mock_env["db_path"].exists()


def test_recording_off_through_environment(mock_env, monkeypatch):
    from src.core.settings import get_settings

    monkeypatch.setenv("PHOTOTAXIS_RECORD_RUNS", "false")
    get_settings.cache_clear()
    with RunRecorder("probe") as recorder:
        pass
    assert recorder.enabled is False
    assert recorder.run_id is None


def test_registry_failure_never_fails_the_command(mock_env, mocker, caplog):
    mocker.patch(
        "src.core.registry.get_session_context",
        side_effect=OperationalError("INSERT", {}, Exception("database is locked")),
    )
    with RunRecorder("evolve") as recorder:
        recorder.add_generation(summary(0, 1.0))

    assert recorder.enabled is False
    assert "run registry unavailable" in caplog.text
