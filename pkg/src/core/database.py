"""
Database connection and session management.

Simple SQLite with WAL mode for the run registry.
"""

from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

from sqlalchemy import create_engine, event
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import NullPool

from src.core.models import Base
from src.core.settings import get_settings


def get_db_path() -> Path:
    """Registry path from PHOTOTAXIS_DB_PATH, default ~/.phototaxis/runs.db."""
    return get_settings().resolved_db_path()


@event.listens_for(Engine, "connect")
def set_sqlite_pragma(dbapi_conn, connection_record):
    """WAL mode so concurrent commands can share the registry."""
    cursor = dbapi_conn.cursor()
    cursor.execute("PRAGMA journal_mode=WAL")
    cursor.execute("PRAGMA synchronous=NORMAL")
    cursor.execute("PRAGMA foreign_keys=ON")
    cursor.close()


def create_engine_instance(db_path: Optional[Path] = None) -> Engine:
    """Create SQLAlchemy engine with proper configuration."""
    db_path = db_path or get_db_path()
    return create_engine(
        f"sqlite:///{db_path}",
        connect_args={"timeout": 30},
        poolclass=NullPool,
        echo=False,
    )


def init_database(db_path: Optional[Path] = None) -> None:
    """Initialize database tables if they don't exist."""
    engine = create_engine_instance(db_path)
    Base.metadata.create_all(engine)


def get_session(db_path: Optional[Path] = None) -> Session:
    """Get a database session (caller commits and closes)."""
    engine = create_engine_instance(db_path)
    SessionLocal = sessionmaker(bind=engine, expire_on_commit=False)
    return SessionLocal()


@contextmanager
def get_session_context(db_path: Optional[Path] = None) -> Iterator[Session]:
    """Session that commits on success and rolls back on error.

    Usage:
        with get_session_context() as session:
            session.add(...)
    """
    init_database(db_path)
    session = get_session(db_path)
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()
