"""FSR physics and force/voltage calibration for the sensor gloves.

Each glove carries twelve force sensitive resistors (FSRs) wired through
10 kOhm pull-down voltage dividers and read by a 3.3 V microcontroller ADC.
An unloaded FSR sits above 10 MOhm (output near 0 mV); at full task load its
resistance falls to a few hundred ohm, pushing the divider output towards
the 3.22 V ceiling:

    v_out = r_pulldown * v_supply / (r_pulldown + r_fsr)

Force/voltage behaviour is close to linear below 1500 mV, which covers the
whole working range of the grip task (forces stay under 1100 g).  Converting
measured millivolt back to grams goes through a per-sensor calibration curve
of (force_gram, tension_mv) knots; interpolation between knots is piecewise
linear and out-of-range voltages are rejected rather than extrapolated.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

V_SUPPLY_MV = 3300.0
R_PULLDOWN_OHM = 10_000.0
#: Task forces never exceeded this; calibration curves must cover it.
FORCE_COVERAGE_G = 1100.0
LINEAR_RANGE_MV = (0.0, 1500.0)

#: S1 and S4 produce too little output to be useful and are excluded
#: from all downstream analyses.
EXCLUDED_SENSORS = frozenset({1, 4})
ELIGIBLE_SENSORS = (2, 3, 5, 6, 7, 8, 9, 10, 11, 12)


class Locus(str, enum.Enum):
    FINGERTIP = "fingertip"
    MIDDLE_PHALANX = "middle_phalanx"
    PALM = "palm"


class FingerRole(str, enum.Enum):
    GROSS_GRIP = "gross_grip"   # S5, middle finger
    SUPPORT = "support"         # S6, ring finger
    PRECISION = "precision"     # S7, pinky
    OTHER = "other"


@dataclass(frozen=True, slots=True)
class SensorId:
    """Identity and placement of one glove sensor."""

    index: int
    diameter_mm: int
    locus: Locus
    finger_role: FingerRole = FingerRole.OTHER

    def __post_init__(self) -> None:
        if not 1 <= self.index <= 12:
            raise ValueError(f"sensor index must be in 1..12, got {self.index}")
        if self.diameter_mm not in (5, 10):
            raise ValueError(f"sensor diameter must be 5 or 10 mm, got {self.diameter_mm}")

    @property
    def excluded(self) -> bool:
        return self.index in EXCLUDED_SENSORS

    @property
    def analysis_eligible(self) -> bool:
        return not self.excluded

    @property
    def label(self) -> str:
        return f"S{self.index}"


def _layout() -> dict[int, SensorId]:
    # Fingertip and palm sensors are 10 mm, the four middle-phalanx ones 5 mm.
    # Functional roles of S5/S6/S7 are fixed; remaining placements are the
    # default glove build and carry no analysis weight.
    ids = [
        SensorId(1, 10, Locus.PALM),
        SensorId(2, 10, Locus.FINGERTIP),
        SensorId(3, 10, Locus.FINGERTIP),
        SensorId(4, 10, Locus.PALM),
        SensorId(5, 10, Locus.FINGERTIP, FingerRole.GROSS_GRIP),
        SensorId(6, 10, Locus.FINGERTIP, FingerRole.SUPPORT),
        SensorId(7, 10, Locus.FINGERTIP, FingerRole.PRECISION),
        SensorId(8, 5, Locus.MIDDLE_PHALANX),
        SensorId(9, 5, Locus.MIDDLE_PHALANX),
        SensorId(10, 5, Locus.MIDDLE_PHALANX),
        SensorId(11, 5, Locus.MIDDLE_PHALANX),
        SensorId(12, 10, Locus.PALM),
    ]
    return {s.index: s for s in ids}


SENSOR_LAYOUT: dict[int, SensorId] = _layout()


@dataclass(frozen=True, slots=True)
class DividerParams:
    """Voltage divider constants: pull-down resistance and supply rail."""

    r_pulldown_ohm: float = R_PULLDOWN_OHM
    v_supply_mv: float = V_SUPPLY_MV

    def __post_init__(self) -> None:
        if self.r_pulldown_ohm <= 0:
            raise ValueError("r_pulldown_ohm must be positive")
        if self.v_supply_mv <= 0:
            raise ValueError("v_supply_mv must be positive")


def fsr_to_voltage(r_fsr_ohm: float, params: DividerParams = DividerParams()) -> float:
    """Divider output in millivolt for a given FSR resistance.

    Strictly decreasing in ``r_fsr_ohm`` and bounded in (0, v_supply) for any
    finite positive resistance.

    Raises:
        ValueError: if ``r_fsr_ohm`` is not strictly positive.
    """
    if r_fsr_ohm <= 0:
        raise ValueError(f"FSR resistance must be positive, got {r_fsr_ohm}")
    return params.r_pulldown_ohm * params.v_supply_mv / (params.r_pulldown_ohm + r_fsr_ohm)


@dataclass(frozen=True)
class CalibrationCurve:
    """Monotone force<->voltage mapping for one sensor.

    ``knots`` are (force_gram, tension_mv) pairs ordered by force.  A valid
    curve starts at (0 g, 0 mV), increases strictly in both columns and
    covers at least 1100 g; use :func:`validate_calibration` to check.
    """

    knots: tuple[tuple[float, float], ...]
    linear_range_mv: tuple[float, float] = LINEAR_RANGE_MV

    def __post_init__(self) -> None:
        if not self.knots:
            raise ValueError("calibration curve needs at least one knot")
        object.__setattr__(
            self, "knots", tuple((float(g), float(mv)) for g, mv in self.knots)
        )

    @property
    def max_mv(self) -> float:
        return max(mv for _, mv in self.knots)

    @property
    def max_force_g(self) -> float:
        return max(g for g, _ in self.knots)

    @classmethod
    def synthetic_default(cls) -> "CalibrationCurve":
        """Two-knot linear curve spanning the full task range.

        Placeholder for bench-measured knots, which are per-sensor input.
        """
        return cls(knots=((0.0, 0.0), (1100.0, 1500.0)))


@dataclass
class CalibrationReport:
    """Findings from checking a calibration curve against its invariants."""

    findings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.findings


def validate_calibration(curve: CalibrationCurve) -> CalibrationReport:
    """Check curve invariants, returning findings instead of raising."""
    report = CalibrationReport()
    first_g, first_mv = curve.knots[0]
    if (first_g, first_mv) != (0.0, 0.0):
        report.findings.append(
            f"first knot must be (0 g, 0 mV), got ({first_g} g, {first_mv} mV)"
        )
    for (g0, mv0), (g1, mv1) in zip(curve.knots, curve.knots[1:]):
        if g1 <= g0:
            report.findings.append(f"force not strictly increasing at knot ({g1} g, {mv1} mV)")
        if mv1 <= mv0:
            report.findings.append(f"tension not strictly increasing at knot ({g1} g, {mv1} mV)")
    if curve.max_force_g < FORCE_COVERAGE_G:
        report.findings.append(
            f"coverage ends at {curve.max_force_g} g, below the {FORCE_COVERAGE_G:.0f} g task maximum"
        )
    return report


def voltage_to_force(v_mv: float, curve: CalibrationCurve) -> float:
    """Convert a divider reading to grams via piecewise-linear interpolation.

    Exact at knots and monotone non-decreasing in ``v_mv``.  No
    extrapolation: readings above the last knot raise.

    Raises:
        ValueError: negative voltage, voltage above the last knot, or an
            invalid curve.
    """
    report = validate_calibration(curve)
    if not report.passed:
        raise ValueError("invalid calibration curve: " + "; ".join(report.findings))
    if v_mv < 0:
        raise ValueError(f"voltage must be non-negative, got {v_mv} mV")
    if v_mv > curve.max_mv:
        raise ValueError(
            f"voltage {v_mv} mV above calibrated range (max {curve.max_mv} mV); not extrapolating"
        )
    mv = np.array([k[1] for k in curve.knots])
    grams = np.array([k[0] for k in curve.knots])
    return float(np.interp(v_mv, mv, grams))


_CAL_HEADER = re.compile(r"#\s*calibration\s+v1\s+sensor=(\d+)\s*$")


def write_calibration(path: str | Path, curve: CalibrationCurve, sensor_index: int) -> None:
    """Write `force_gram,tension_mv` knot lines under a `# calibration v1` header."""
    lines = [f"# calibration v1 sensor={sensor_index}"]
    lines += [f"{g:g},{mv:g}" for g, mv in curve.knots]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_calibration(path: str | Path) -> tuple[int, CalibrationCurve]:
    """Read a calibration file back as (sensor_index, curve)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise ValueError(f"{path}: empty calibration file")
    m = _CAL_HEADER.match(text[0])
    if not m:
        raise ValueError(f"{path}:1: bad calibration header: {text[0]!r}")
    knots = []
    for lineno, raw in enumerate(text[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        try:
            g_str, mv_str = line.split(",")
            knots.append((float(g_str), float(mv_str)))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad knot line: {raw!r}") from exc
    return int(m.group(1)), CalibrationCurve(knots=tuple(knots))
