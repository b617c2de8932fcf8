"""
Pytest configuration and fixtures.
"""

import logging
from pathlib import Path

import numpy as np
import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import Session, sessionmaker

from src.core.evolution import EvolutionConfig
from src.core.genome import NetworkGenome, genome_length, random_genome
from src.core.models import Base
from src.core.settings import get_settings
from src.core.trial import TrialConfig
from src.core.world import LightPosition

N = 10


@pytest.fixture(scope="function")
def test_db_session() -> Session:
    """Create an in-memory test database session."""
    engine = create_engine("sqlite:///:memory:", echo=False)
    Base.metadata.create_all(engine)

    SessionLocal = sessionmaker(bind=engine, expire_on_commit=False)
    session = SessionLocal()

    yield session

    session.close()
    Base.metadata.drop_all(engine)


@pytest.fixture(scope="function")
def mock_env(tmp_path: Path, monkeypatch):
    """Point the run registry at a temp database."""
    db_path = tmp_path / "test.db"
    monkeypatch.setenv("PHOTOTAXIS_DB_PATH", str(db_path))
    monkeypatch.delenv("PHOTOTAXIS_WORKERS", raising=False)
    get_settings.cache_clear()

    yield {
        "db_path": db_path,
        "tmp_path": tmp_path,
    }

    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def reset_package_logger():
    """CLI callbacks install a rich handler; give caplog its propagation back."""
    yield
    logger = logging.getLogger("src")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def still_genome() -> NetworkGenome:
    """All genes 0.5: zero weights and biases, so the motors never move."""
    return NetworkGenome(id="still", genes=[0.5] * genome_length(N))


@pytest.fixture
def moving_genome() -> NetworkGenome:
    return random_genome(np.random.default_rng(7), N, centre_crossing=True, genome_id="mover")


@pytest.fixture
def short_trial() -> TrialConfig:
    return TrialConfig(duration=1.0, light=LightPosition(0.0, 3.0))


@pytest.fixture
def tiny_evolution() -> EvolutionConfig:
    return EvolutionConfig(
        population_size=6,
        generations=3,
        trial=TrialConfig(duration=0.2),
        chunk_size=2,
        seed=11,
    )
