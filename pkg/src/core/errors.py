"""
Exception hierarchy.

Library code raises these; the CLI maps them to exit codes
(config/storage -> 1, numeric/analysis -> 2).
"""

from typing import Optional


class PhototaxisError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PhototaxisError):
    """Invalid configuration or parameter values."""

    def __init__(
        self,
        message: str,
        *,
        key: Optional[str] = None,
        line: Optional[int] = None,
        source: Optional[str] = None,
    ) -> None:
        self.key = key
        self.line = line
        self.source = source
        super().__init__(message)

    def __str__(self) -> str:
        message = super().__str__()
        if self.key:
            message = f"{self.key}: {message}"
        if self.line is not None:
            prefix = f"{self.source}:" if self.source else "line "
            message = f"{prefix}{self.line}: {message}"
        return message


class GenomeError(ConfigError):
    """Genome length or gene values do not match the network layout."""


class ScriptError(ConfigError):
    """Malformed or out-of-range stimulus script."""


class NumericError(PhototaxisError):
    """A non-finite value appeared during simulation."""


class AnalysisError(PhototaxisError):
    """Analysis preconditions violated (empty window, missing columns...)."""


class StorageError(PhototaxisError):
    """File could not be read, or has the wrong format or version."""
