"""Stream frame codec and on-disk session format for 50 Hz glove data.

The gloves push one frame per 20 ms sampling tick over a 115200 bps serial
link.  Frame layout, 33 bytes, little-endian multi-byte fields:

    offset  size  field
    0       1     sync byte, 0xAA
    1       1     glove id: 0x01 left, 0x02 right
    2       2     sequence number (u16, wraps)
    4       4     t_ms since session start (u32)
    8       24    twelve u16 sensor voltages in mV, S1..S12
    32      1     checksum: XOR of bytes 1..31

The XOR fold guarantees that any single-bit corruption of the header or
payload flips exactly one checksum bit and is therefore always detected.

Decoded recordings are kept as Sessions and stored as UTF-8 CSV:

    # gripforge-session v1 user=<label> hand=<d|n> index=<k>
    @<t_ms>,<event>              annotation lines first
    <t_ms>,<sensor>,<glove>,<v_mv>

Raw millivolt values are stored (integral), never grams: force units are
derived on demand through a calibration curve.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SAMPLE_PERIOD_MS = 20
V_MV_MAX = 3300
FRAME_LEN = 33
SYNC_BYTE = 0xAA
GLOVE_CODES = {"left": 0x01, "right": 0x02}
GLOVE_NAMES = {code: name for name, code in GLOVE_CODES.items()}
#: Radio link rate of the glove system, recorded as session metadata.
LINK_RATE_BPS = 115200

HANDS = ("dominant", "non_dominant")
HAND_CODES = {"dominant": "d", "non_dominant": "n"}
HAND_NAMES = {code: name for name, code in HAND_CODES.items()}

#: Annotation events.  'gap' marks grid slots lost to missing frames so that
#: downstream statistics can see (and exclude) them.
EVENTS = ("start", "end", "step1", "step2", "step3", "step4", "incident", "gap")

BATTERY_WARN_V = 3.7

_HEADER_STRUCT = struct.Struct("<BBHI12H")  # sync..voltages, 32 bytes


class FrameError(Exception):
    """Base class for codec failures."""


class FrameSyncError(FrameError):
    """First byte is not the sync marker; caller should resync."""


class FrameChecksumError(FrameError):
    """Checksum mismatch: the frame was corrupted in transit."""


class FrameUnderflowError(FrameError):
    """Fewer bytes than one full frame."""


class FrameEncodeError(FrameError, ValueError):
    """Frame contents cannot be represented on the wire."""


def xor_fold(data: bytes) -> int:
    out = 0
    for b in data:
        out ^= b
    return out


@dataclass(frozen=True, slots=True)
class Frame:
    """One sampling tick of a single glove: all 12 sensor voltages."""

    glove: str
    seq: int
    t_ms: int
    v_mv: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.glove not in GLOVE_CODES:
            raise ValueError(f"unknown glove {self.glove!r}")
        if not 0 <= self.seq <= 0xFFFF:
            raise ValueError(f"sequence {self.seq} out of u16 range")
        if not 0 <= self.t_ms <= 0xFFFFFFFF:
            raise ValueError(f"t_ms {self.t_ms} out of u32 range")
        if len(self.v_mv) != 12:
            raise ValueError(f"expected 12 voltages, got {len(self.v_mv)}")
        if any(v < 0 or v > 0xFFFF for v in self.v_mv):
            raise ValueError("voltage out of u16 range")


def encode_frame(frame: Frame) -> bytes:
    """Serialize a frame to its 33-byte wire form.

    Raises:
        FrameEncodeError: any voltage above the 3300 mV supply ceiling.
    """
    if any(v > V_MV_MAX for v in frame.v_mv):
        raise FrameEncodeError(f"voltage above {V_MV_MAX} mV supply ceiling")
    body = _HEADER_STRUCT.pack(
        SYNC_BYTE, GLOVE_CODES[frame.glove], frame.seq, frame.t_ms, *frame.v_mv
    )
    return body + bytes([xor_fold(body[1:])])


def decode_frame(buf: bytes) -> Frame:
    """Parse one frame from the first 33 bytes of ``buf``.

    Raises:
        FrameUnderflowError: fewer than 33 bytes available.
        FrameSyncError: byte 0 is not the sync marker.
        FrameChecksumError: XOR checksum mismatch.
        FrameError: sync and checksum fine but field values are invalid
            (unknown glove id or voltage above the supply ceiling).
    """
    if len(buf) < FRAME_LEN:
        raise FrameUnderflowError(f"need {FRAME_LEN} bytes, have {len(buf)}")
    if buf[0] != SYNC_BYTE:
        raise FrameSyncError(f"expected sync 0x{SYNC_BYTE:02X}, got 0x{buf[0]:02X}")
    if xor_fold(buf[1:32]) != buf[32]:
        raise FrameChecksumError("checksum mismatch")
    _, glove_code, seq, t_ms, *volts = _HEADER_STRUCT.unpack(bytes(buf[:32]))
    if glove_code not in GLOVE_NAMES:
        raise FrameError(f"unknown glove id 0x{glove_code:02X}")
    if any(v > V_MV_MAX for v in volts):
        raise FrameError(f"voltage above {V_MV_MAX} mV supply ceiling")
    return Frame(glove=GLOVE_NAMES[glove_code], seq=seq, t_ms=t_ms, v_mv=tuple(volts))


class StreamDecoder:
    """Sequential scanner over a raw byte stream.

    Feed chunks in arrival order; complete frames come back out.  On a bad
    sync byte or a corrupt frame the scanner advances one byte and hunts for
    the next sync marker, counting what it skipped.  One decoder owns one
    stream; decoded frames are immutable and freely shareable.
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.skipped_bytes = 0
        self.corrupt_frames = 0

    def feed(self, data: bytes) -> list[Frame]:
        self._buf.extend(data)
        frames: list[Frame] = []
        while len(self._buf) >= FRAME_LEN:
            try:
                frames.append(decode_frame(self._buf))
            except FrameSyncError:
                del self._buf[0]
                self.skipped_bytes += 1
                continue
            except FrameError:
                self.corrupt_frames += 1
                del self._buf[0]
                self.skipped_bytes += 1
                continue
            del self._buf[:FRAME_LEN]
        return frames

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


@dataclass(frozen=True, slots=True)
class Sample:
    """One timestamped voltage reading from one sensor of one glove."""

    glove: str
    sensor: int
    t_ms: int
    v_mv: int

    def __post_init__(self) -> None:
        if self.glove not in GLOVE_CODES:
            raise ValueError(f"unknown glove {self.glove!r}")
        if not 1 <= self.sensor <= 12:
            raise ValueError(f"sensor index {self.sensor} out of 1..12")
        if self.t_ms < 0 or self.t_ms % SAMPLE_PERIOD_MS != 0:
            raise ValueError(f"t_ms {self.t_ms} not on the {SAMPLE_PERIOD_MS} ms grid")
        if not 0 <= self.v_mv <= V_MV_MAX:
            raise ValueError(f"v_mv {self.v_mv} outside [0, {V_MV_MAX}]")


@dataclass
class Session:
    """An ordered, annotated recording of one task session.

    Samples are sorted by (t_ms, sensor) with at most one sample per
    (sensor, t_ms).  Annotations carry exactly one ``start`` and one ``end``
    event, which define the session duration.
    """

    user: str
    hand: str
    session_index: int
    samples: list[Sample]
    annotations: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.hand not in HANDS:
            raise ValueError(f"hand must be one of {HANDS}, got {self.hand!r}")
        if not 1 <= self.session_index <= 10:
            raise ValueError(f"session_index {self.session_index} outside 1..10")
        for t, event in self.annotations:
            if event not in EVENTS:
                raise ValueError(f"unknown annotation event {event!r}")
            if t < 0:
                raise ValueError(f"annotation time {t} negative")
        starts = [t for t, e in self.annotations if e == "start"]
        ends = [t for t, e in self.annotations if e == "end"]
        if len(starts) != 1 or len(ends) != 1:
            raise ValueError("annotations must contain exactly one start and one end")
        if starts[0] >= ends[0]:
            raise ValueError(f"start {starts[0]} must precede end {ends[0]}")
        self.annotations = sorted(self.annotations, key=lambda a: (a[0], EVENTS.index(a[1])))
        prev = None
        for s in self.samples:
            key = (s.t_ms, s.sensor)
            if prev is not None and key <= prev:
                raise ValueError(
                    f"samples not strictly ordered by (t_ms, sensor) at t={s.t_ms} S{s.sensor}"
                )
            prev = key

    def _event_time(self, name: str) -> int:
        for t, e in self.annotations:
            if e == name:
                return t
        raise ValueError(f"session has no {name!r} annotation")

    @property
    def start_ms(self) -> int:
        return self._event_time("start")

    @property
    def end_ms(self) -> int:
        return self._event_time("end")

    @property
    def duration_s(self) -> float:
        return (self.end_ms - self.start_ms) / 1000.0

    def sensors(self) -> list[int]:
        return sorted({s.sensor for s in self.samples})

    def events(self, name: str) -> list[int]:
        return [t for t, e in self.annotations if e == name]

    def sensor_arrays(self, sensor: int) -> tuple[np.ndarray, np.ndarray]:
        """Time and value arrays for one sensor, in time order.

        Sessions are immutable once assembled (see module concurrency notes),
        so the per-sensor split is computed once and cached.
        """
        cache = getattr(self, "_sensor_cache", None)
        if cache is None:
            split: dict[int, tuple[list[int], list[int]]] = {}
            for s in self.samples:
                t_list, v_list = split.setdefault(s.sensor, ([], []))
                t_list.append(s.t_ms)
                v_list.append(s.v_mv)
            cache = {
                k: (np.array(t, dtype=np.int64), np.array(v, dtype=np.int64))
                for k, (t, v) in split.items()
            }
            self._sensor_cache = cache
        if sensor not in cache:
            raise ValueError(f"session has no samples for sensor S{sensor}")
        return cache[sensor]


@dataclass(frozen=True, slots=True)
class BatteryStatus:
    v_battery: float
    state: str  # 'ok' | 'warn_change_battery'


def battery_check(v_battery: float) -> BatteryStatus:
    """Warn if the supply battery drops strictly below 3.7 V."""
    if v_battery < 0:
        raise ValueError(f"battery voltage must be non-negative, got {v_battery}")
    state = "warn_change_battery" if v_battery < BATTERY_WARN_V else "ok"
    return BatteryStatus(v_battery=v_battery, state=state)


def stream_to_session(
    frames: list[Frame], user: str, hand: str, session_index: int
) -> Session:
    """Assemble decoded frames of one glove into a Session.

    Missing sequence numbers become ``gap`` annotations at the lost grid
    slots; delivered data is never dropped or interpolated.

    Raises:
        ValueError: empty input, mixed glove ids, non-increasing sequence
            numbers, or off-grid timestamps.
    """
    if not frames:
        raise ValueError("no frames to assemble")
    gloves = {f.glove for f in frames}
    if len(gloves) != 1:
        raise ValueError(f"frames from multiple gloves: {sorted(gloves)}")
    samples: list[Sample] = []
    annotations: list[tuple[int, str]] = []
    prev = None
    for frame in frames:
        if frame.t_ms % SAMPLE_PERIOD_MS != 0:
            raise ValueError(f"frame t_ms {frame.t_ms} not on the 20 ms grid")
        if prev is not None:
            step = (frame.seq - prev.seq) % 0x10000
            if step == 0:
                raise ValueError(f"repeated sequence number {frame.seq}")
            for missing in range(1, step):
                annotations.append((prev.t_ms + SAMPLE_PERIOD_MS * missing, "gap"))
        for sensor, v in enumerate(frame.v_mv, start=1):
            samples.append(Sample(glove=frame.glove, sensor=sensor, t_ms=frame.t_ms, v_mv=v))
        prev = frame
    samples.sort(key=lambda s: (s.t_ms, s.sensor))
    annotations.append((frames[0].t_ms, "start"))
    annotations.append((frames[-1].t_ms + SAMPLE_PERIOD_MS, "end"))
    return Session(
        user=user, hand=hand, session_index=session_index,
        samples=samples, annotations=annotations,
    )


class SessionFormatError(ValueError):
    """Malformed session file; message carries the offending line number."""


_SESSION_HEADER = re.compile(
    r"#\s*gripforge-session\s+v1\s+user=(?P<user>[A-Za-z0-9_\-]+)"
    r"\s+hand=(?P<hand>[dn])\s+index=(?P<index>\d+)\s*$"
)
_LABEL_OK = re.compile(r"^[A-Za-z0-9_\-]+$")


def write_session(path: str | Path, session: Session) -> None:
    """Write a session as CSV; lossless inverse of :func:`read_session`."""
    if not _LABEL_OK.match(session.user):
        raise ValueError(f"user label {session.user!r} not storable (use [A-Za-z0-9_-]+)")
    lines = [
        f"# gripforge-session v1 user={session.user} "
        f"hand={HAND_CODES[session.hand]} index={session.session_index}"
    ]
    lines += [f"@{t},{event}" for t, event in session.annotations]
    lines += [f"{s.t_ms},{s.sensor},{s.glove},{s.v_mv}" for s in session.samples]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_session(path: str | Path) -> Session:
    """Parse a session file, enforcing all Session invariants on load."""
    raw = Path(path).read_text(encoding="utf-8").splitlines()
    if not raw:
        raise SessionFormatError(f"{path}:1: empty session file")
    m = _SESSION_HEADER.match(raw[0])
    if not m:
        raise SessionFormatError(f"{path}:1: bad session header: {raw[0]!r}")
    samples: list[Sample] = []
    annotations: list[tuple[int, str]] = []
    for lineno, line in enumerate(raw[1:], start=2):
        line = line.strip()
        if not line:
            continue
        try:
            if line.startswith("@"):
                t_str, event = line[1:].split(",")
                annotations.append((int(t_str), event))
            else:
                t_str, sensor_str, glove, v_str = line.split(",")
                samples.append(
                    Sample(glove=glove, sensor=int(sensor_str),
                           t_ms=int(t_str), v_mv=int(v_str))
                )
        except ValueError as exc:
            raise SessionFormatError(f"{path}:{lineno}: {exc}") from exc
    try:
        return Session(
            user=m.group("user"), hand=HAND_NAMES[m.group("hand")],
            session_index=int(m.group("index")),
            samples=samples, annotations=annotations,
        )
    except ValueError as exc:
        raise SessionFormatError(f"{path}: {exc}") from exc
