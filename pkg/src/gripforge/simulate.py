"""Synthetic expert/novice session generator.

Produces sessions whose per-sensor statistics, durations, incident counts
and task-step structure follow configured skill profiles, so the whole
analytics chain can be exercised and reproduced at desk scale.

The bundled default profiles carry the published dominant-hand parameters
for the three functionally relevant sensors (S5 middle/gross grip, S6
ring/support, S7 pinky/precision), the session durations and the incident
totals (expert 3, novice 20).  Targets for the remaining sensors are
modeling defaults only: they follow the qualitative pattern (higher novice
magnitude and variability) and must not be treated as measured values.

Noise model: per-sample sigma is back-derived from the target standard
error of the session mean, sigma = sem * sqrt(n_samples), then samples are
drawn normally and clipped to the physical [0, 3300] mV range.  Between the
first and last session, all targets interpolate linearly.  Every session
owns an independent random stream derived from (master seed, user, hand,
session index), which makes generation order-independent and byte-exact
reproducible.
"""

from __future__ import annotations

import math
import re
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import HANDS, SAMPLE_PERIOD_MS, V_MV_MAX, Sample, Session

N_SESSIONS = 10
ALL_SENSORS = tuple(range(1, 13))


@dataclass(frozen=True, slots=True)
class SensorTargets:
    """First-session and last-session (mean, sem) targets for one sensor."""

    first_mean: float
    first_sem: float
    last_mean: float
    last_sem: float

    def __post_init__(self) -> None:
        for name in ("first_mean", "first_sem", "last_mean", "last_sem"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for mean in (self.first_mean, self.last_mean):
            if not 0 <= mean <= V_MV_MAX:
                raise ValueError(f"target mean {mean} outside [0, {V_MV_MAX}] mV")
        for sem in (self.first_sem, self.last_sem):
            if sem <= 0:
                raise ValueError(f"target sem {sem} must be positive")


@dataclass(frozen=True)
class SkillProfile:
    """Per-sensor statistical parameters defining a synthetic user."""

    label: str
    dominant_glove: str
    duration_first_s: float
    duration_last_s: float
    targets: dict[int, SensorTargets]
    incident_rate: float = 0.0
    fixed_incidents: tuple[tuple[str, int], ...] = ()
    step_fractions_first: tuple[float, float, float, float] = (0.40, 0.25, 0.20, 0.15)
    step_fractions_last: tuple[float, float, float, float] = (0.40, 0.25, 0.20, 0.15)

    def __post_init__(self) -> None:
        if self.dominant_glove not in ("left", "right"):
            raise ValueError(f"dominant_glove must be left/right, got {self.dominant_glove!r}")
        if self.duration_first_s <= 0 or self.duration_last_s <= 0:
            raise ValueError("session durations must be positive")
        if self.incident_rate < 0:
            raise ValueError("incident_rate must be non-negative")
        for hand, idx in self.fixed_incidents:
            if hand not in HANDS or not 1 <= idx <= N_SESSIONS:
                raise ValueError(f"bad fixed incident ({hand!r}, {idx})")
        for fractions in (self.step_fractions_first, self.step_fractions_last):
            if len(fractions) != 4 or any(f <= 0 for f in fractions):
                raise ValueError("step fractions must be 4 positive values")
            if abs(sum(fractions) - 1.0) > 1e-9:
                raise ValueError(f"step fractions must sum to 1, got {sum(fractions)}")
        for sensor, t in self.targets.items():
            if not 1 <= sensor <= 12:
                raise ValueError(f"sensor index {sensor} out of 1..12")
            if not isinstance(t, SensorTargets):
                raise TypeError(f"targets[{sensor}] must be SensorTargets")


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the generator; the 20 ms sampling period is fixed."""

    seed: int = 0
    sample_period_ms: int = SAMPLE_PERIOD_MS
    sessions: int = N_SESSIONS
    sensors: tuple[int, ...] = ALL_SENSORS
    #: Non-dominant-hand sigma grows by this relative amount by the last
    #: session, mirroring the fatigue drift seen in the non-preferred hand.
    nondominant_std_growth: float = 0.5
    #: Grip perturbation added around incident times; off by default because
    #: the effect of an incident on grip force depends on the incident type.
    incident_amplitude_mv: float = 0.0

    def __post_init__(self) -> None:
        if self.sample_period_ms != SAMPLE_PERIOD_MS:
            raise ValueError(f"sample period is fixed at {SAMPLE_PERIOD_MS} ms")
        if not 1 <= self.sessions <= N_SESSIONS:
            raise ValueError(f"sessions must be in 1..{N_SESSIONS}")
        if any(not 1 <= s <= 12 for s in self.sensors):
            raise ValueError("sensor indices must be in 1..12")
        if self.nondominant_std_growth < 0 or self.incident_amplitude_mv < 0:
            raise ValueError("growth factor and incident amplitude must be non-negative")


def _session_fraction(session_index: int) -> float:
    if not 1 <= session_index <= N_SESSIONS:
        raise ValueError(f"session_index {session_index} outside 1..{N_SESSIONS}")
    return (session_index - 1) / (N_SESSIONS - 1)


def interpolate_profile(
    profile: SkillProfile, session_index: int
) -> dict[int, tuple[float, float]]:
    """Per-sensor (mean, sem) targets for one session.

    Linear interpolation between the first-session and last-session targets;
    exact at both endpoints.
    """
    frac = _session_fraction(session_index)
    out = {}
    for sensor, t in profile.targets.items():
        out[sensor] = (
            t.first_mean + frac * (t.last_mean - t.first_mean),
            t.first_sem + frac * (t.last_sem - t.first_sem),
        )
    return out


def session_duration_s(profile: SkillProfile, session_index: int) -> float:
    frac = _session_fraction(session_index)
    return profile.duration_first_s + frac * (profile.duration_last_s - profile.duration_first_s)


def step_fractions(profile: SkillProfile, session_index: int) -> tuple[float, ...]:
    frac = _session_fraction(session_index)
    raw = [
        a + frac * (b - a)
        for a, b in zip(profile.step_fractions_first, profile.step_fractions_last)
    ]
    total = sum(raw)
    return tuple(f / total for f in raw)


def _session_rng(seed: int, label: str, hand: str, session_index: int) -> np.random.Generator:
    key = [seed, zlib.crc32(label.encode("utf-8")), HANDS.index(hand), session_index]
    return np.random.default_rng(np.random.SeedSequence(key))


def simulate_session(
    profile: SkillProfile,
    config: GeneratorConfig,
    session_index: int,
    hand: str = "dominant",
) -> Session:
    """Generate one session; deterministic given (profile, config, index, hand)."""
    if hand not in HANDS:
        raise ValueError(f"hand must be one of {HANDS}, got {hand!r}")
    targets = interpolate_profile(profile, session_index)
    missing = [s for s in config.sensors if s not in targets]
    if missing:
        raise ValueError(f"profile {profile.label!r} lacks targets for sensors {missing}")
    rng = _session_rng(config.seed, profile.label, hand, session_index)

    duration_ms = int(round(session_duration_s(profile, session_index) * 1000))
    duration_ms -= duration_ms % SAMPLE_PERIOD_MS
    n = duration_ms // SAMPLE_PERIOD_MS
    if n == 0:
        raise ValueError("session too short for one sample")
    t_grid = np.arange(n, dtype=np.int64) * SAMPLE_PERIOD_MS

    growth = 1.0
    if hand == "non_dominant":
        growth += config.nondominant_std_growth * _session_fraction(session_index)

    glove = profile.dominant_glove
    if hand == "non_dominant":
        glove = "right" if glove == "left" else "left"

    # Incidents first so an amplitude knob can perturb the traces below.
    incident_times: list[int] = []
    n_fixed = sum(1 for h, i in profile.fixed_incidents if h == hand and i == session_index)
    n_drawn = int(rng.poisson(profile.incident_rate)) if profile.incident_rate > 0 else 0
    if n > 1:
        for _ in range(n_fixed + n_drawn):
            incident_times.append(int(rng.integers(1, n)) * SAMPLE_PERIOD_MS)
    incident_times = sorted(set(incident_times))

    values: dict[int, np.ndarray] = {}
    for sensor in sorted(config.sensors):
        mean, sem = targets[sensor]
        sigma = sem * math.sqrt(n) * growth
        trace = rng.normal(mean, sigma, size=n)
        if config.incident_amplitude_mv > 0:
            for t_inc in incident_times:
                trace += config.incident_amplitude_mv * np.exp(
                    -(((t_grid - t_inc) / 150.0) ** 2)
                )
        values[sensor] = np.clip(np.rint(trace), 0, V_MV_MAX).astype(np.int64)

    samples = [
        Sample(glove=glove, sensor=sensor, t_ms=int(t_grid[i]), v_mv=int(values[sensor][i]))
        for i in range(n)
        for sensor in sorted(config.sensors)
    ]

    annotations: list[tuple[int, str]] = [(0, "start"), (duration_ms, "end")]
    cum = 0.0
    for step, fraction in enumerate(step_fractions(profile, session_index), start=1):
        t_step = int(round(cum * duration_ms / SAMPLE_PERIOD_MS)) * SAMPLE_PERIOD_MS
        annotations.append((min(t_step, duration_ms - SAMPLE_PERIOD_MS), f"step{step}"))
        cum += fraction
    annotations += [(t, "incident") for t in incident_times]

    return Session(
        user=profile.label, hand=hand, session_index=session_index,
        samples=samples, annotations=annotations,
    )


def simulate_cohort(
    expert: SkillProfile, novice: SkillProfile, config: GeneratorConfig
) -> list[Session]:
    """All sessions x both hands x both users, ordered (user, hand, index)."""
    sessions: list[Session] = []
    for profile in (expert, novice):
        for hand in HANDS:
            for idx in range(1, config.sessions + 1):
                sessions.append(simulate_session(profile, config, idx, hand=hand))
    return sessions


def _targets(**by_sensor: tuple[float, float, float, float]) -> dict[int, SensorTargets]:
    return {
        int(name[1:]): SensorTargets(*vals) for name, vals in by_sensor.items()
    }


#: Published dominant-hand values for S5/S6/S7, durations and incidents;
#: everything else is a modeling placeholder (see module docstring).
DEFAULT_EXPERT_PROFILE = SkillProfile(
    label="expert",
    dominant_glove="left",
    duration_first_s=10.20,
    duration_last_s=7.48,
    incident_rate=0.0,
    fixed_incidents=(("non_dominant", 8), ("non_dominant", 9), ("non_dominant", 10)),
    step_fractions_first=(0.40, 0.25, 0.20, 0.15),
    step_fractions_last=(0.40, 0.25, 0.20, 0.15),
    targets=_targets(
        S1=(10, 0.10, 8, 0.10),
        S2=(420, 2.6, 385, 2.9),
        S3=(310, 2.2, 288, 2.4),
        S4=(12, 0.10, 9, 0.10),
        S5=(241, 4.3, 78, 4.9),
        S6=(576, 3.8, 474, 4.5),
        S7=(594, 1.8, 609, 2.2),
        S8=(210, 2.0, 190, 2.2),
        S9=(340, 2.4, 312, 2.6),
        S10=(265, 2.1, 240, 2.3),
        S11=(180, 1.9, 166, 2.0),
        S12=(390, 2.7, 355, 2.9),
    ),
)

DEFAULT_NOVICE_PROFILE = SkillProfile(
    label="novice",
    dominant_glove="right",
    duration_first_s=24.56,
    duration_last_s=18.78,
    incident_rate=1.0,
    fixed_incidents=(),
    step_fractions_first=(0.55, 0.20, 0.15, 0.10),
    step_fractions_last=(0.40, 0.25, 0.20, 0.15),
    targets=_targets(
        S1=(12, 0.08, 10, 0.08),
        S2=(665, 3.4, 610, 3.6),
        S3=(730, 3.6, 655, 3.8),
        S4=(9, 0.08, 8, 0.08),
        S5=(790, 2.7, 640, 3.6),
        S6=(504, 2.4, 445, 3.3),
        S7=(98, 1.2, 78, 1.6),
        S8=(540, 3.2, 470, 3.4),
        S9=(150, 2.9, 175, 3.1),
        S10=(705, 3.5, 630, 3.7),
        S11=(330, 3.0, 360, 3.2),
        S12=(580, 3.3, 505, 3.5),
    ),
)


_PROFILE_KV = re.compile(r"^([a-z_]+)=(.*)$")


def save_profile(path: str | Path, profile: SkillProfile) -> None:
    """Write a profile in the plain-text key=value format."""
    lines = [
        "# gripforge-profile v1",
        f"label={profile.label}",
        f"dominant_glove={profile.dominant_glove}",
        f"duration_first_s={profile.duration_first_s!r}",
        f"duration_last_s={profile.duration_last_s!r}",
        f"incident_rate={profile.incident_rate!r}",
        "step_fractions_first=" + ",".join(repr(f) for f in profile.step_fractions_first),
        "step_fractions_last=" + ",".join(repr(f) for f in profile.step_fractions_last),
    ]
    lines += [f"fixed_incident={hand},{idx}" for hand, idx in profile.fixed_incidents]
    for sensor in sorted(profile.targets):
        t = profile.targets[sensor]
        lines.append(
            f"sensor=S{sensor} first={t.first_mean!r},{t.first_sem!r} "
            f"last={t.last_mean!r},{t.last_sem!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_profile(path: str | Path) -> SkillProfile:
    """Read a profile file written by :func:`save_profile`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# gripforge-profile v1"):
        raise ValueError(f"{path}: not a gripforge profile file")
    scalars: dict[str, str] = {}
    fixed: list[tuple[str, int]] = []
    targets: dict[int, SensorTargets] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("sensor="):
            m = re.match(
                r"sensor=S(\d+)\s+first=([^,]+),(\S+)\s+last=([^,]+),(\S+)$", line
            )
            if not m:
                raise ValueError(f"{path}:{lineno}: bad sensor line: {raw!r}")
            targets[int(m.group(1))] = SensorTargets(
                float(m.group(2)), float(m.group(3)), float(m.group(4)), float(m.group(5))
            )
        elif line.startswith("fixed_incident="):
            hand, idx = line.split("=", 1)[1].split(",")
            fixed.append((hand, int(idx)))
        else:
            m = _PROFILE_KV.match(line)
            if not m:
                raise ValueError(f"{path}:{lineno}: bad profile line: {raw!r}")
            scalars[m.group(1)] = m.group(2)
    try:
        return SkillProfile(
            label=scalars["label"],
            dominant_glove=scalars["dominant_glove"],
            duration_first_s=float(scalars["duration_first_s"]),
            duration_last_s=float(scalars["duration_last_s"]),
            incident_rate=float(scalars.get("incident_rate", "0")),
            fixed_incidents=tuple(fixed),
            step_fractions_first=tuple(
                float(f) for f in scalars["step_fractions_first"].split(",")
            ),
            step_fractions_last=tuple(
                float(f) for f in scalars["step_fractions_last"].split(",")
            ),
            targets=targets,
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing profile key {exc}") from exc
