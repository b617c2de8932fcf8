"""
Run-registry tables.

Two tables:
- runs: one row per command invocation (evolve, simulate, probe, stats...)
- generations: per-generation summary of evolve runs
"""

from datetime import datetime
from typing import Optional
import uuid

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, func
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


def generate_uuid() -> str:
    """Generate UUID for primary keys."""
    return str(uuid.uuid4())


class Run(Base):
    """One command invocation and where its outputs went."""

    __tablename__ = "runs"

    id = Column(String, primary_key=True, default=generate_uuid)
    command = Column(String(20), nullable=False, index=True)
    status = Column(String(20), default="running")  # running/finished/failed
    seed = Column(Integer)
    config_name = Column(String(200))
    output_dir = Column(Text)
    message = Column(Text)  # error text of failed runs

    started_at = Column(DateTime, server_default=func.now())
    finished_at = Column(DateTime)

    generations = relationship(
        "GenerationRecord",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="GenerationRecord.generation",
    )

    @property
    def is_finished(self) -> bool:
        return self.status == "finished"

    @property
    def duration_seconds(self) -> Optional[float]:
        if self.started_at is None or self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()

    @property
    def best_score(self) -> Optional[float]:
        """Best cost of the last recorded generation."""
        if not self.generations:
            return None
        return self.generations[-1].best

    def __repr__(self) -> str:
        return f"<Run {self.command} {self.id[:8]} status={self.status}>"


class GenerationRecord(Base):
    """Best/mean cost of one generation of an evolve run."""

    __tablename__ = "generations"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String, ForeignKey("runs.id", ondelete="CASCADE"), index=True)
    generation = Column(Integer, nullable=False)
    best = Column(Float)
    mean = Column(Float)
    light_angle = Column(Float)
    recorded_at = Column(DateTime, default=datetime.utcnow)

    run = relationship("Run", back_populates="generations")

    def __repr__(self) -> str:
        return f"<Generation {self.generation} best={self.best:.4f}>"
