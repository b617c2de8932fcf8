"""
Run-registry queries.

Every command records itself here. Registry failures are logged and never
fail the command that triggered them.
"""

import logging
from datetime import datetime
from pathlib import Path
from types import TracebackType
from typing import List, Optional, Type

from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session

from src.core.database import get_session_context
from src.core.evolution import GenerationSummary
from src.core.models import GenerationRecord, Run
from src.core.settings import get_settings

logger = logging.getLogger(__name__)


def start_run(
    session: Session,
    command: str,
    *,
    seed: Optional[int] = None,
    config_name: Optional[str] = None,
    output_dir: Optional[Path] = None,
) -> Run:
    run = Run(
        command=command,
        seed=seed,
        config_name=config_name,
        output_dir=str(output_dir) if output_dir is not None else None,
        status="running",
        started_at=datetime.utcnow(),
    )
    session.add(run)
    session.flush()
    return run


def finish_run(
    session: Session, run_id: str, status: str = "finished", message: Optional[str] = None
) -> Optional[Run]:
    run = session.get(Run, run_id)
    if run is None:
        return None
    run.status = status
    run.message = message
    run.finished_at = datetime.utcnow()
    return run


def record_generations(
    session: Session, run_id: str, summaries: List[GenerationSummary]
) -> None:
    session.add_all(
        GenerationRecord(
            run_id=run_id,
            generation=s.generation,
            best=s.best,
            mean=s.mean,
            light_angle=s.light_angle,
        )
        for s in summaries
    )


def list_runs(
    session: Session, limit: int = 20, command: Optional[str] = None
) -> List[Run]:
    """Most recent runs first."""
    query = session.query(Run)
    if command:
        query = query.filter(Run.command == command)
    return query.order_by(Run.started_at.desc()).limit(limit).all()


def find_run(session: Session, id_prefix: str) -> Optional[Run]:
    """Run whose id starts with `id_prefix` (None if absent or ambiguous)."""
    matches = session.query(Run).filter(Run.id.startswith(id_prefix)).limit(2).all()
    return matches[0] if len(matches) == 1 else None


class RunRecorder:
    """Context manager that registers one command invocation.

    Usage:
        with RunRecorder("evolve", seed=3, output_dir=out) as recorder:
            ...
            recorder.add_generation(summary)
    """

    def __init__(
        self,
        command: str,
        *,
        seed: Optional[int] = None,
        config_name: Optional[str] = None,
        output_dir: Optional[Path] = None,
        enabled: Optional[bool] = None,
    ) -> None:
        self.command = command
        self.seed = seed
        self.config_name = config_name
        self.output_dir = output_dir
        self.enabled = get_settings().record_runs if enabled is None else enabled
        self.run_id: Optional[str] = None
        self._pending: List[GenerationSummary] = []

    def __enter__(self) -> "RunRecorder":
        if not self.enabled:
            return self
        try:
            with get_session_context() as session:
                run = start_run(
                    session,
                    self.command,
                    seed=self.seed,
                    config_name=self.config_name,
                    output_dir=self.output_dir,
                )
                self.run_id = run.id
        except (SQLAlchemyError, OSError) as exc:
            logger.warning("run registry unavailable: %s", exc)
            self.enabled = False
        return self

    def add_generation(self, summary: GenerationSummary) -> None:
        if self.enabled:
            self._pending.append(summary)

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        if not self.enabled or self.run_id is None:
            return
        status = "finished" if exc is None else "failed"
        try:
            with get_session_context() as session:
                record_generations(session, self.run_id, self._pending)
                finish_run(session, self.run_id, status, str(exc) if exc else None)
        except (SQLAlchemyError, OSError) as error:
            logger.warning("could not update run %s: %s", self.run_id, error)
