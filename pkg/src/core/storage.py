"""
Output files.

Population (JSON), history, trial logs and stats (CSV), and the per-command
manifest. Every data file is written atomically: a temp file in the target
directory, then os.replace.
"""

import hashlib
import io
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, NamedTuple, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src import __version__
from src.core.config import ExperimentConfig
from src.core.errors import ConfigError, StorageError
from src.core.evolution import GenerationSummary, NetworkGenome, Population
from src.core.trial import TrialLog

POPULATION_FORMAT = "phototaxis-population"
POPULATION_VERSION = 1
MANIFEST_NAME = "manifest.json"
HISTORY_COLUMNS = ["generation", "best", "mean", "light_angle"]
QUANTILE_NOTE = "# quantiles: linear interpolation between closest ranks"


def atomic_write_bytes(path: Path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


# Population files


class PopulationFile(NamedTuple):
    population: Population
    config: ExperimentConfig


class PopulationDocument(BaseModel):
    """On-disk layout of a population file."""

    model_config = ConfigDict(extra="forbid")

    format: Literal["phototaxis-population"] = POPULATION_FORMAT
    version: Literal[1] = POPULATION_VERSION
    generation: int = Field(ge=0)
    seed: int
    next_id: int = Field(ge=0)
    config: ExperimentConfig
    members: List[NetworkGenome]

    @classmethod
    def of(cls, pop: Population, config: ExperimentConfig) -> "PopulationDocument":
        return cls(
            generation=pop.generation,
            seed=pop.rng_seed,
            next_id=pop.next_id,
            config=config,
            members=list(pop.members),
        )

    def population(self) -> Population:
        return Population(
            members=self.members,
            generation=self.generation,
            rng_seed=self.seed,
            next_id=self.next_id,
        )


def population_document(pop: Population, config: ExperimentConfig) -> Dict[str, Any]:
    return PopulationDocument.of(pop, config).model_dump(mode="json", by_alias=True)


def save_population(path: Path, pop: Population, config: ExperimentConfig) -> Path:
    text = json.dumps(population_document(pop, config), indent=2) + "\n"
    return atomic_write_text(path, text)


def load_population(path: Path) -> PopulationFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"{path}: cannot read population file: {exc}") from exc
    try:
        document = PopulationDocument.model_validate_json(text)
        return PopulationFile(document.population(), document.config)
    except (ValidationError, ConfigError) as exc:
        raise StorageError(f"{path}: not a valid population file: {exc}") from exc


# Tables


def _csv_text(frame: pd.DataFrame, header_lines: Iterable[str] = ()) -> str:
    buffer = io.StringIO()
    for line in header_lines:
        buffer.write(f"{line}\n")
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_table(
    path: Path, frame: pd.DataFrame, header_lines: Iterable[str] = ()
) -> Path:
    """Full-precision CSV (pandas writes the shortest round-trip repr)."""
    return atomic_write_text(path, _csv_text(frame, header_lines))


def read_table(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, comment="#", float_precision="round_trip")
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise StorageError(f"{path}: cannot read table: {exc}") from exc


def history_frame(history: Sequence[GenerationSummary]) -> pd.DataFrame:
    rows = [
        (s.generation, s.best, s.mean, s.light_angle) for s in history
    ]
    return pd.DataFrame(rows, columns=HISTORY_COLUMNS)


def write_history(path: Path, history: Sequence[GenerationSummary]) -> Path:
    return write_table(path, history_frame(history))


def write_log(path: Path, log: TrialLog) -> Path:
    return write_table(path, log.frame)


def read_log(path: Path) -> TrialLog:
    return TrialLog(read_table(path))


def write_stats(path: Path, frame: pd.DataFrame) -> Path:
    return write_table(path, frame, header_lines=[QUANTILE_NOTE])


# Manifest


class OutputEntry(BaseModel):
    path: str
    sha256: str
    size: int


class RunManifest(BaseModel):
    """What a command produced, and from what."""

    model_config = ConfigDict(extra="forbid")

    command: str
    tool_version: str = __version__
    seed: Optional[int] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    arguments: Dict[str, Any] = Field(default_factory=dict)
    started_at: datetime
    finished_at: datetime
    outputs: List[OutputEntry] = Field(default_factory=list)

    @classmethod
    def build(
        cls,
        command: str,
        outputs: Sequence[Path],
        *,
        started_at: datetime,
        directory: Path,
        config: Optional[ExperimentConfig] = None,
        seed: Optional[int] = None,
        arguments: Optional[Dict[str, Any]] = None,
    ) -> "RunManifest":
        entries = []
        for output in outputs:
            output = Path(output)
            try:
                relative = str(output.resolve().relative_to(Path(directory).resolve()))
            except ValueError:
                relative = str(output)
            entries.append(
                OutputEntry(
                    path=relative, sha256=file_digest(output), size=output.stat().st_size
                )
            )
        return cls(
            command=command,
            seed=seed,
            config=config.model_dump(mode="json", by_alias=True) if config else {},
            arguments=arguments or {},
            started_at=started_at,
            finished_at=utcnow(),
            outputs=entries,
        )


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def write_manifest(directory: Path, manifest: RunManifest) -> Path:
    return atomic_write_text(
        Path(directory) / MANIFEST_NAME, manifest.model_dump_json(indent=2) + "\n"
    )


def read_manifest(path: Path) -> RunManifest:
    try:
        return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValidationError) as exc:
        raise StorageError(f"{path}: cannot read manifest: {exc}") from exc
