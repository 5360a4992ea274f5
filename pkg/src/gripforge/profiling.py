"""Spatiotemporal grip-force features: windowed averages and variability.

The core feature is the average amplitude (AmV) over fixed, disjoint,
non-overlapping 2000 ms windows: 100 samples at 50 Hz, AmV = window sum / 100.
Session variability is the population standard deviation (divide by N) of the
raw millivolt samples; this choice is fixed for bit-reproducibility even
though the sample/population difference is negligible at typical N.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .acquisition import SAMPLE_PERIOD_MS, Session
from .sensors import ELIGIBLE_SENSORS, EXCLUDED_SENSORS

WINDOW_MS_DEFAULT = 2000


@dataclass(frozen=True)
class SensorSeries:
    """Grid-aligned sample values of one sensor within one session.

    ``values`` holds one entry per 20 ms slot from the session start.  Slots
    lost to stream gaps are NaN (dtype float64); gap-free series keep their
    exact integer dtype.
    """

    sensor: int
    values: np.ndarray
    t0_ms: int = 0

    @property
    def has_gaps(self) -> bool:
        return self.values.dtype.kind == "f" and bool(np.isnan(self.values).any())


def sensor_series(session: Session, sensor: int) -> SensorSeries:
    """Extract one sensor's series on the uniform 20 ms grid.

    Grid slots not covered by a sample must be explicit gap annotations;
    anything else violates the uniform-spacing invariant and raises.
    """
    t, v = session.sensor_arrays(sensor)
    t0 = session.start_ms
    if t[0] < t0:
        raise ValueError(f"sensor S{sensor} has samples before the session start")
    slots = (t - t0) // SAMPLE_PERIOD_MS
    n_slots = int(slots[-1]) + 1
    if n_slots == t.size:
        return SensorSeries(sensor=sensor, values=v, t0_ms=t0)
    gap_slots = {(g - t0) // SAMPLE_PERIOD_MS for g in session.events("gap")}
    missing = set(range(n_slots)) - set(slots.tolist())
    if not missing <= gap_slots:
        raise ValueError(
            f"sensor S{sensor} misses grid slots without gap annotations: "
            f"{sorted(missing - gap_slots)[:5]}"
        )
    values = np.full(n_slots, np.nan, dtype=np.float64)
    values[slots] = v
    return SensorSeries(sensor=sensor, values=values, t0_ms=t0)


@dataclass(frozen=True)
class WindowedProfile:
    """AmV values over consecutive full windows of one sensor series.

    Windows overlapping a gap are flagged; their AmV is the mean of the
    samples actually present and they are dropped from downstream statistics
    unless explicitly included.
    """

    sensor: int
    window_ms: int
    start_ms: np.ndarray
    amv_mv: np.ndarray
    flagged: np.ndarray
    dropped_tail: int

    def clean(self) -> tuple[np.ndarray, np.ndarray]:
        """(start_ms, amv) of gap-free windows only."""
        keep = ~self.flagged
        return self.start_ms[keep], self.amv_mv[keep]


def window_amv(series: SensorSeries, window_ms: int = WINDOW_MS_DEFAULT) -> WindowedProfile:
    """Average amplitude over consecutive disjoint fixed-size windows.

    AmV of a full window is exactly (sum of its samples) / samples-per-window;
    the incomplete trailing window is dropped and reported, never padded.
    """
    if window_ms <= 0 or window_ms % SAMPLE_PERIOD_MS != 0:
        raise ValueError(f"window_ms must be a positive multiple of {SAMPLE_PERIOD_MS}")
    n = series.values.size
    if n == 0:
        raise ValueError("empty series")
    per_window = window_ms // SAMPLE_PERIOD_MS
    n_windows = n // per_window
    dropped = n - n_windows * per_window
    blocks = series.values[: n_windows * per_window].reshape(n_windows, per_window)
    if series.values.dtype.kind == "f":
        flagged = np.isnan(blocks).any(axis=1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN windows
            amv = np.nanmean(blocks, axis=1)
    else:
        flagged = np.zeros(n_windows, dtype=bool)
        amv = blocks.sum(axis=1, dtype=np.int64) / per_window
    starts = series.t0_ms + np.arange(n_windows, dtype=np.int64) * window_ms
    return WindowedProfile(
        sensor=series.sensor, window_ms=window_ms, start_ms=starts,
        amv_mv=amv, flagged=flagged, dropped_tail=dropped,
    )


def session_std(values) -> float:
    """Population standard deviation: sqrt(sum((x - mean)^2) / N)."""
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        raise ValueError("empty series")
    return float(np.std(arr))


@dataclass(frozen=True)
class SessionStats:
    n: int
    mean_mv: float
    std_mv: float
    min_mv: float
    max_mv: float
    sem_mv: float


def descriptive(values) -> SessionStats:
    """Order-free descriptive statistics of a sample series."""
    arr = np.asarray(values, dtype=np.float64)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        raise ValueError("empty series")
    std = float(np.std(arr))
    return SessionStats(
        n=int(arr.size),
        mean_mv=float(arr.mean()),
        std_mv=std,
        min_mv=float(arr.min()),
        max_mv=float(arr.max()),
        sem_mv=std / math.sqrt(arr.size),
    )


@dataclass(frozen=True)
class VariabilityPoint:
    session_index: int
    sensor: str  # 'S<k>' or 'pooled'
    std_mv: float


def _check_sensor_filter(sensors) -> tuple[int, ...]:
    chosen = tuple(sensors) if sensors is not None else ELIGIBLE_SENSORS
    bad = sorted(set(chosen) & EXCLUDED_SENSORS)
    if bad:
        warnings.warn(
            f"sensor filter includes excluded sensors {['S%d' % s for s in bad]}; "
            "S1/S4 produce too little output to be meaningful",
            stacklevel=3,
        )
    return chosen


def variability_curve(
    sessions: list[Session], sensors=None, mode: str = "pooled"
) -> list[VariabilityPoint]:
    """Per-session STD series, ordered by session index.

    ``pooled`` concatenates all filtered sensors of a session into one group
    before taking the STD (the default used for skill comparisons);
    ``per-sensor`` yields one point per (session, sensor).
    """
    if not sessions:
        raise ValueError("no sessions")
    if mode not in ("pooled", "per-sensor"):
        raise ValueError(f"mode must be 'pooled' or 'per-sensor', got {mode!r}")
    chosen = _check_sensor_filter(sensors)
    points: list[VariabilityPoint] = []
    for session in sorted(sessions, key=lambda s: s.session_index):
        per_sensor = [session.sensor_arrays(k)[1] for k in chosen]
        if mode == "pooled":
            points.append(
                VariabilityPoint(
                    session_index=session.session_index,
                    sensor="pooled",
                    std_mv=session_std(np.concatenate(per_sensor)),
                )
            )
        else:
            for k, vals in zip(chosen, per_sensor):
                points.append(
                    VariabilityPoint(
                        session_index=session.session_index,
                        sensor=f"S{k}",
                        std_mv=session_std(vals),
                    )
                )
    return points


@dataclass(frozen=True)
class TaskMetrics:
    duration_s: float
    incident_count: int
    step_durations_s: dict[str, float] = field(default_factory=dict)


def task_metrics(session: Session) -> TaskMetrics:
    """Duration, incident count and per-step durations from annotations."""
    duration = session.duration_s  # raises if start/end missing
    steps = sorted(
        (t, e) for t, e in session.annotations if e.startswith("step")
    )
    step_durations: dict[str, float] = {}
    for i, (t, event) in enumerate(steps):
        t_next = steps[i + 1][0] if i + 1 < len(steps) else session.end_ms
        step_durations[event] = (t_next - t) / 1000.0
    return TaskMetrics(
        duration_s=duration,
        incident_count=len(session.events("incident")),
        step_durations_s=step_durations,
    )
