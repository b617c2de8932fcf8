"""
Analysis of trial logs.

Motor-activity statistics over a time window, orbit classification and
offline peak finding. Everything works on TrialLog frames, whether fresh
from the engine or read back from CSV.
"""

import math
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy import signal

from src.core.config import AnalysisConfig
from src.core.errors import AnalysisError
from src.core.interference import InterferenceSpec, psi_of_motor
from src.core.trial import TrialLog
from src.core.world import LightPosition

MOTOR_COLUMNS = ("m_left", "m_right")
MIN_CLASSIFY_WINDOW = 5.0


class Window(NamedTuple):
    """Half-open time window [start, end)."""

    start: float
    end: float

    @property
    def length(self) -> float:
        return self.end - self.start


class MotorSummary(BaseModel):
    """Box-plot numbers of one sample (Tukey whiskers at 1.5 IQR)."""

    model_config = ConfigDict(frozen=True)

    count: int
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


class MotorStats(NamedTuple):
    left: MotorSummary
    right: MotorSummary
    window: Window
    samples: pd.DataFrame

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"motor": name, **summary.model_dump()}
            for name, summary in zip(MOTOR_COLUMNS, (self.left, self.right))
        ]
        return pd.DataFrame(rows)


class OrbitType(str, Enum):
    TYPE1 = "Type1"
    TYPE2 = "Type2"
    UNCLASSIFIED = "Unclassified"


class OrbitLabel(BaseModel):
    """Orbit class plus the evidence it was decided on."""

    model_config = ConfigDict(frozen=True)

    label: OrbitType
    forward_fraction: float
    sign_changes: int
    max_distance: float
    median_distance: float


class PeakReport(NamedTuple):
    times: np.ndarray
    values: np.ndarray

    @property
    def period(self) -> Optional[float]:
        if len(self.times) < 2:
            return None
        return float(np.mean(np.diff(self.times)))


def summarize(values: np.ndarray) -> MotorSummary:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise AnalysisError("no samples to summarize")
    q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    reach = 1.5 * (q3 - q1)
    inside = values[(values >= q1 - reach) & (values <= q3 + reach)]
    return MotorSummary(
        count=int(values.size),
        min=float(np.min(values)),
        q1=float(q1),
        median=float(median),
        mean=float(np.mean(values)),
        q3=float(q3),
        max=float(np.max(values)),
        whisker_low=float(np.min(inside)),
        whisker_high=float(np.max(inside)),
    )


def _require(frame: pd.DataFrame, columns: Sequence[str]) -> None:
    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise AnalysisError(f"log is missing columns: {', '.join(missing)}")


def window_rows(log: TrialLog, window: Window) -> pd.DataFrame:
    """Rows with start <= t < end, to half a step either way."""
    frame = log.frame
    _require(frame, ["t"])
    if window.end <= window.start:
        raise AnalysisError(f"empty window [{window.start:g}, {window.end:g})")
    t = frame["t"].to_numpy(dtype=float)
    if t.size == 0:
        raise AnalysisError("log has no rows")
    tol = 0.5 * float(np.median(np.diff(t))) if t.size > 1 else 1e-9
    if window.start < t[0] - tol or window.end > t[-1] + tol:
        raise AnalysisError(
            f"window [{window.start:g}, {window.end:g}) lies outside the log "
            f"(t = {t[0]:g}..{t[-1]:g})"
        )
    rows = frame[(t >= window.start - tol) & (t < window.end - tol)]
    if rows.empty:
        raise AnalysisError(f"no samples in window [{window.start:g}, {window.end:g})")
    return rows


def pooled_samples(logs: Sequence[TrialLog], window: Window) -> pd.DataFrame:
    """Motor samples of every log inside the window, concatenated."""
    if not logs:
        raise AnalysisError("no logs given")
    parts = []
    for log in logs:
        _require(log.frame, MOTOR_COLUMNS)
        parts.append(window_rows(log, window)[list(MOTOR_COLUMNS)])
    return pd.concat(parts, ignore_index=True)


def motor_stats(
    logs: Sequence[TrialLog],
    window: Window,
    interference: Optional[InterferenceSpec] = None,
) -> MotorStats:
    """Pooled motor statistics; optionally of psi(m) instead of m."""
    samples = pooled_samples(logs, window)
    if interference is not None:
        kind = interference.kind
        samples = pd.DataFrame(
            {
                column: psi_of_motor(kind, samples[column].to_numpy(), interference)
                for column in MOTOR_COLUMNS
            }
        )
    return MotorStats(
        left=summarize(samples["m_left"].to_numpy()),
        right=summarize(samples["m_right"].to_numpy()),
        window=window,
        samples=samples,
    )


def sign_changes(values: np.ndarray) -> int:
    """Sign flips, skipping exact zeros."""
    signs = np.sign(np.asarray(values, dtype=float))
    signs = signs[signs != 0]
    return int(np.count_nonzero(np.diff(signs)))


def classify_orbit(
    log: TrialLog,
    window: Window,
    light: LightPosition,
    thresholds: Optional[AnalysisConfig] = None,
) -> OrbitLabel:
    """Type2: mostly forward. Type1: back-and-forth while staying close."""
    thresholds = thresholds or AnalysisConfig()
    _require(log.frame, ["t", "x", "y", *MOTOR_COLUMNS])
    if window.length < MIN_CLASSIFY_WINDOW:
        raise AnalysisError(
            f"classification window must span at least {MIN_CLASSIFY_WINDOW:g} time units"
        )
    rows = window_rows(log, window)

    net = rows["m_left"].to_numpy() + rows["m_right"].to_numpy()
    forward = float(np.mean(net > 0))
    changes = sign_changes(net)
    distance = np.hypot(rows["x"].to_numpy() - light.x, rows["y"].to_numpy() - light.y)
    median = float(np.median(distance))
    farthest = float(np.max(distance))

    if forward >= thresholds.forward_fraction:
        label = OrbitType.TYPE2
    elif (
        changes >= thresholds.min_sign_changes
        and farthest < thresholds.distance_ratio * median
    ):
        label = OrbitType.TYPE1
    else:
        label = OrbitType.UNCLASSIFIED

    return OrbitLabel(
        label=label,
        forward_fraction=forward,
        sign_changes=changes,
        max_distance=farthest,
        median_distance=median,
    )


def find_peaks(
    log: TrialLog,
    column: str,
    window: Optional[Window] = None,
    prominence: Optional[float] = None,
) -> PeakReport:
    """Local maxima of one log column (scipy.signal.find_peaks)."""
    _require(log.frame, ["t", column])
    rows = window_rows(log, window) if window is not None else log.frame
    values = rows[column].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise AnalysisError(f"column {column} contains non-finite values")
    indices, _ = signal.find_peaks(values, prominence=prominence)
    return PeakReport(
        times=rows["t"].to_numpy(dtype=float)[indices], values=values[indices]
    )


def final_distances(
    logs: Sequence[TrialLog], lights: Sequence[LightPosition], tail: float = 0.0
) -> List[float]:
    """Distance to the light at the end of each log (mean over `tail` time units)."""
    result = []
    for log, light in zip(logs, lights):
        _require(log.frame, ["t", "x", "y"])
        frame = log.frame
        t = frame["t"].to_numpy(dtype=float)
        rows = frame[t >= t[-1] - tail] if tail > 0 else frame.iloc[[-1]]
        distance = np.hypot(rows["x"].to_numpy() - light.x, rows["y"].to_numpy() - light.y)
        result.append(float(np.mean(distance)))
    return result


def span(log: TrialLog) -> Tuple[float, float]:
    t = log.column("t")
    if t.size == 0 or not math.isfinite(t[-1]):
        raise AnalysisError("log has no usable time column")
    return float(t[0]), float(t[-1])
