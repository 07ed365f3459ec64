"""Motor actuation: cue codebook, 6-channel frame rendering, and the wire codec.

The band carries six coin motors at 60 degree spacing around the wrist.
Each cue maps to a keyframed per-motor intensity envelope; active cues are
mixed per channel by max. Frames go on the wire as 9-byte packets:
sync 0xAA, an 8-bit wrapping sequence number, six intensities, and an XOR
checksum over bytes 1..7.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import FRAME_PERIOD_US
from .policy import CueId, CueEvent, EventKind, PolicyConfig

SYNC_BYTE = 0xAA
FRAME_LEN = 9
NUM_MOTORS = 6

Intensity6 = tuple[int, int, int, int, int, int]
ZERO6: Intensity6 = (0, 0, 0, 0, 0, 0)


class FrameError(ValueError):
    """Corrupted or misaligned device frame."""


class BadLength(FrameError):
    pass


class BadSync(FrameError):
    pass


class BadChecksum(FrameError):
    pass


@dataclass(frozen=True)
class BandGeometry:
    """Motor placement, degrees counterclockwise from the wearer's right
    when looking at the dorsal wrist."""

    motor_angles_deg: tuple[float, ...] = (0.0, 60.0, 120.0, 180.0, 240.0, 300.0)

    def __post_init__(self):
        if len(self.motor_angles_deg) != NUM_MOTORS:
            raise ValueError(f"need exactly {NUM_MOTORS} motors")
        if len(set(self.motor_angles_deg)) != NUM_MOTORS:
            raise ValueError("motor angles must be distinct")
        if any(not (0 <= a < 360) for a in self.motor_angles_deg):
            raise ValueError("motor angles must lie in [0, 360)")

    def channel_at(self, angle_deg: float) -> int:
        """Index of the motor sitting at the given angle."""
        try:
            return self.motor_angles_deg.index(angle_deg)
        except ValueError:
            raise ValueError(f"no motor at {angle_deg} deg") from None


@dataclass(frozen=True)
class ActuationPattern:
    """Keyframed intensity envelope: (duration_us, six intensities) steps."""

    keyframes: tuple[tuple[int, Intensity6], ...]
    repeat: bool

    def __post_init__(self):
        if not self.keyframes:
            raise ValueError("pattern needs at least one keyframe")
        for dur, levels in self.keyframes:
            if dur <= 0:
                raise ValueError("keyframe durations must be positive")
            if len(levels) != NUM_MOTORS:
                raise ValueError("keyframe needs six channels")
            if any(not (0 <= v <= 255) for v in levels):
                raise ValueError("intensities must be 0..255")
        object.__setattr__(self, "_period_us", sum(dur for dur, _ in self.keyframes))

    @property
    def period_us(self) -> int:
        return self._period_us

    def value_at(self, phase_us: int) -> Intensity6:
        """Channel intensities at the given local phase.

        Repeating patterns wrap; finished one-shot patterns read as silence.
        """
        if phase_us < 0:
            return ZERO6
        period = self._period_us
        if self.repeat:
            phase_us %= period
        elif phase_us >= period:
            return ZERO6
        for dur, levels in self.keyframes:
            if phase_us < dur:
                return levels
            phase_us -= dur
        return ZERO6

    def finished(self, phase_us: int) -> bool:
        return (not self.repeat) and phase_us >= self._period_us


@dataclass(frozen=True)
class Codebook:
    patterns: dict[CueId, ActuationPattern]

    def __post_init__(self):
        missing = [c for c in CueId if c not in self.patterns]
        if missing:
            raise ValueError(f"codebook missing cues: {missing}")
        if self.patterns[CueId.SUCCESS].repeat:
            raise ValueError("success pattern must be one-shot")

    def __getitem__(self, cue: CueId) -> ActuationPattern:
        return self.patterns[cue]


def _levels(geom: BandGeometry, angle_to_level: dict[float, int]) -> Intensity6:
    out = [0] * NUM_MOTORS
    for angle, level in angle_to_level.items():
        out[geom.channel_at(angle)] = level
    return tuple(out)  # type: ignore[return-value]


def default_codebook(cfg: PolicyConfig | None = None, geom: BandGeometry | None = None) -> Codebook:
    """The shipped cue-to-motor mapping.

    Left/right use the single motor on that side; up/down co-activate the
    adjacent pair nearest that direction (no motor sits exactly vertical).
    Forward/back are all-motor rhythms chosen to read differently from both
    the directional pulses and the success burst. Success is a one-shot
    full-intensity burst on every motor.
    """
    cfg = cfg or PolicyConfig()
    geom = geom or BandGeometry()
    on_us = cfg.pulse_on_ms * 1000
    off_us = cfg.pulse_off_ms * 1000
    half = cfg.directional_intensity
    full = cfg.state_intensity

    def pulsed(angles: tuple[float, ...]) -> ActuationPattern:
        on = _levels(geom, {a: half for a in angles})
        return ActuationPattern(((on_us, on), (off_us, ZERO6)), repeat=True)

    all_half: Intensity6 = (half,) * NUM_MOTORS
    all_full: Intensity6 = (full,) * NUM_MOTORS

    patterns = {
        CueId.LEFT: pulsed((180.0,)),
        CueId.RIGHT: pulsed((0.0,)),
        CueId.UP: pulsed((60.0, 120.0)),
        CueId.DOWN: pulsed((240.0, 300.0)),
        # Long-short all-motor rhythm: 400 ms on / 200 ms off.
        CueId.FORWARD: ActuationPattern(((400_000, all_half), (200_000, ZERO6)), repeat=True),
        # Double-tap all-motor rhythm: 100 on / 100 off / 100 on / 500 off.
        CueId.BACK: ActuationPattern(
            ((100_000, all_half), (100_000, ZERO6), (100_000, all_half), (500_000, ZERO6)),
            repeat=True,
        ),
        CueId.SUCCESS: ActuationPattern(
            ((cfg.state_burst_ms * 1000, all_full),), repeat=False
        ),
    }
    return Codebook(patterns)


@dataclass(frozen=True, slots=True)
class MotorFrame:
    at_us: int
    intensity: Intensity6
    seq: int

    def __post_init__(self):
        if len(self.intensity) != NUM_MOTORS:
            raise ValueError("frame needs six channels")
        if any(not (0 <= v <= 255) for v in self.intensity):
            raise ValueError("intensities must be 0..255")
        if not (0 <= self.seq <= 255):
            raise ValueError("seq must fit one byte")


def render_frame(
    active: dict[CueId, int],
    codebook: Codebook,
    now_us: int,
    seq: int = 0,
) -> MotorFrame:
    """Mix every active cue's pattern at its local phase, per-channel max.

    ``active`` maps each active cue to its activation start time (<= now).
    """
    mixed = [0] * NUM_MOTORS
    for cue, started_us in active.items():
        if started_us > now_us:
            raise ValueError(f"{cue} starts in the future")
        levels = codebook[cue].value_at(now_us - started_us)
        for ch in range(NUM_MOTORS):
            if levels[ch] > mixed[ch]:
                mixed[ch] = levels[ch]
    return MotorFrame(now_us, tuple(mixed), seq & 0xFF)  # type: ignore[arg-type]


class CueMixer:
    """Tracks active cues from policy events and renders the 100 Hz frames."""

    def __init__(self, codebook: Codebook | None = None):
        self.codebook = codebook or default_codebook()
        self._patterns = self.codebook.patterns
        self.active: dict[CueId, int] = {}
        self.seq = 0
        self._oneshot_live = False
        self._single: tuple | None = None  # (pattern, started_us) fast path

    def _refresh_single(self) -> None:
        if len(self.active) == 1:
            cue, started = next(iter(self.active.items()))
            self._single = (self._patterns[cue], started)
        else:
            self._single = None

    def apply(self, event: CueEvent) -> None:
        if event.kind is EventKind.START:
            self.active[event.cue] = event.at_us
        elif event.kind is EventKind.STOP:
            self.active.pop(event.cue, None)
        elif event.kind is EventKind.BURST:
            self.active[event.cue] = event.at_us
        if not self._patterns[event.cue].repeat and event.cue in self.active:
            self._oneshot_live = True
        self._refresh_single()

    def frame_tuple(self, now_us: int) -> tuple[int, int, Intensity6]:
        """(at_us, seq, intensities) without MotorFrame wrapping (hot path)."""
        active = self.active
        patterns = self._patterns
        if self._oneshot_live:
            # Drop one-shot patterns that have played out.
            done = [c for c, st in active.items() if patterns[c].finished(now_us - st)]
            if done:
                for cue in done:
                    del active[cue]
                self._refresh_single()
            self._oneshot_live = any(not patterns[c].repeat for c in active)
        single = self._single
        if single is not None:
            pattern, started_us = single
            mixed = pattern.value_at(now_us - started_us)
        elif not active:
            mixed = ZERO6
        else:
            acc = [0, 0, 0, 0, 0, 0]
            for cue, started_us in active.items():
                levels = patterns[cue].value_at(now_us - started_us)
                for ch in range(NUM_MOTORS):
                    if levels[ch] > acc[ch]:
                        acc[ch] = levels[ch]
            mixed = tuple(acc)
        seq = self.seq
        self.seq = (seq + 1) & 0xFF
        return (now_us, seq, mixed)

    def frame_at(self, now_us: int) -> MotorFrame:
        at_us, seq, mixed = self.frame_tuple(now_us)
        return MotorFrame(at_us, mixed, seq)


def encode_frame(frame: MotorFrame) -> bytes:
    """9-byte wire image: sync, seq, six intensities, XOR checksum."""
    body = bytes([frame.seq & 0xFF, *frame.intensity])
    checksum = 0
    for b in body:
        checksum ^= b
    return bytes([SYNC_BYTE]) + body + bytes([checksum])


def decode_frame(data: bytes, at_us: int = 0) -> MotorFrame:
    """Validate and unpack one wire frame.

    Raises BadLength, BadSync or BadChecksum on a corrupted stream.
    """
    if len(data) != FRAME_LEN:
        raise BadLength(f"expected {FRAME_LEN} bytes, got {len(data)}")
    if data[0] != SYNC_BYTE:
        raise BadSync(f"bad sync byte 0x{data[0]:02X}")
    checksum = 0
    for b in data[1:8]:
        checksum ^= b
    if checksum != data[8]:
        raise BadChecksum(f"checksum 0x{data[8]:02X} != computed 0x{checksum:02X}")
    return MotorFrame(at_us, tuple(data[2:8]), data[1])  # type: ignore[arg-type]


def frame_schedule_us(horizon_us: int) -> list[int]:
    """Command-frame timestamps over a horizon (exact 10 ms cadence)."""
    return list(range(0, int(horizon_us) + 1, FRAME_PERIOD_US))
