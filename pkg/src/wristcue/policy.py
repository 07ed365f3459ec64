"""Guidance cue policy: per-axis directional cues plus the dwell-fired success cue.

The policy consumes (tool, target) samples at the pose rate and emits timed
cue events. Directional cues follow the pull convention: the cue names the
direction the hand must move. Success fires once per containment episode,
after the error has stayed inside the tolerance sphere for the dwell time.

``select_directional_cues`` / ``update_dwell`` / ``policy_step`` are the
reference implementation over plain value types; ``GuidancePolicy`` is the
session-rate equivalent (bitmask active set, no per-sample allocation) and
is held to the reference by property tests.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import sqrt

from .geometry import AxisError, TargetSpec, Vec3, axis_error


class CueId(enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"
    UP = "Up"
    DOWN = "Down"
    FORWARD = "Forward"
    BACK = "Back"
    SUCCESS = "Success"


#: Cue vocabulary exercised in the identification study.
STUDY1_CUES = (CueId.LEFT, CueId.RIGHT, CueId.UP, CueId.DOWN, CueId.SUCCESS)

DIRECTIONAL_CUES = (CueId.LEFT, CueId.RIGHT, CueId.UP, CueId.DOWN, CueId.FORWARD, CueId.BACK)

#: axis index -> (cue for positive correction, cue for negative correction)
_AXIS_CUES = (
    (CueId.RIGHT, CueId.LEFT),
    (CueId.UP, CueId.DOWN),
    (CueId.FORWARD, CueId.BACK),
)

#: Unit correction direction signalled by each directional cue.
CUE_DIRECTIONS = {
    CueId.LEFT: (-1.0, 0.0, 0.0),
    CueId.RIGHT: (1.0, 0.0, 0.0),
    CueId.DOWN: (0.0, -1.0, 0.0),
    CueId.UP: (0.0, 1.0, 0.0),
    CueId.BACK: (0.0, 0.0, -1.0),
    CueId.FORWARD: (0.0, 0.0, 1.0),
}

_CUE_BIT = {cue: 1 << i for i, cue in enumerate(DIRECTIONAL_CUES)}


@dataclass(frozen=True)
class PolicyConfig:
    axis_threshold_mm: float = 2.0
    dwell_ms: int = 500
    pulse_on_ms: int = 200
    pulse_off_ms: int = 200
    directional_intensity: int = 128
    state_intensity: int = 255
    state_burst_ms: int = 200
    tolerance_radius_mm: float = 2.0
    hysteresis_mm: float = 0.0
    largest_axis_only: bool = False
    # Axes the session actually cues; directional cues off these axes are
    # never emitted. Default cues every axis.
    cued_axes: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        if self.axis_threshold_mm <= 0:
            raise ValueError("axis_threshold_mm must be positive")
        if self.dwell_ms <= 0 or self.pulse_on_ms <= 0 or self.pulse_off_ms <= 0:
            raise ValueError("durations must be positive")
        if self.state_burst_ms <= 0:
            raise ValueError("state_burst_ms must be positive")
        if self.tolerance_radius_mm <= 0:
            raise ValueError("tolerance_radius_mm must be positive")
        if self.hysteresis_mm < 0:
            raise ValueError("hysteresis_mm must be >= 0")
        if not (0 < self.directional_intensity <= self.state_intensity <= 255):
            raise ValueError("need 0 < directional_intensity <= state_intensity <= 255")
        if any(a not in (0, 1, 2) for a in self.cued_axes):
            raise ValueError("cued_axes entries must be 0, 1 or 2")


class EventKind(enum.Enum):
    START = "start"
    STOP = "stop"
    BURST = "burst"


@dataclass(frozen=True, slots=True)
class CueEvent:
    at_us: int
    cue: CueId
    kind: EventKind


@dataclass(frozen=True)
class DwellState:
    """Containment episode tracker for the success cue."""

    inside_since_us: int | None = None
    fired: bool = False
    last_us: int | None = None


def select_directional_cues(
    err: AxisError,
    cfg: PolicyConfig,
    previously_active: frozenset[CueId] | set[CueId] = frozenset(),
) -> set[CueId]:
    """Cues demanded by one error sample: at most one per axis.

    A cue turns on when its axis component exceeds the threshold; a cue that
    is already active stays on down to threshold - hysteresis.
    """
    components = err.as_tuple()
    active: set[CueId] = set()
    for axis in cfg.cued_axes:
        v = components[axis]
        if v > 0:
            cue = _AXIS_CUES[axis][0]
        elif v < 0:
            cue = _AXIS_CUES[axis][1]
        else:
            continue
        threshold = cfg.axis_threshold_mm
        if cue in previously_active:
            threshold -= cfg.hysteresis_mm
        if abs(v) > threshold:
            active.add(cue)
    if cfg.largest_axis_only and len(active) > 1:
        # Deterministic tie-break: larger magnitude wins, then lower axis.
        biggest = max(active, key=lambda c: (abs(components[_cue_axis(c)]), -_cue_axis(c)))
        active = {biggest}
    return active


def _cue_axis(cue: CueId) -> int:
    for axis, pair in enumerate(_AXIS_CUES):
        if cue in pair:
            return axis
    raise ValueError(f"{cue} is not a directional cue")


def update_dwell(
    state: DwellState,
    err: AxisError,
    now_us: int,
    cfg: PolicyConfig,
    tolerance_mm: float | None = None,
) -> tuple[DwellState, bool]:
    """Advance the containment tracker by one sample.

    Returns the new state and whether the success cue fires at this sample.
    Success fires exactly once per containment episode, at the first sample
    where the error has stayed inside the tolerance sphere for dwell_ms.
    """
    if state.last_us is not None and now_us < state.last_us:
        raise ValueError(f"time regression: {now_us} < {state.last_us}")
    tol = cfg.tolerance_radius_mm if tolerance_mm is None else tolerance_mm
    if err.norm() <= tol:
        since = state.inside_since_us if state.inside_since_us is not None else now_us
        fired = state.fired
        fires_now = (not fired) and (now_us - since >= cfg.dwell_ms * 1000)
        return DwellState(since, fired or fires_now, now_us), fires_now
    return DwellState(None, False, now_us), False


@dataclass
class PolicyState:
    active: set[CueId] = field(default_factory=set)
    dwell: DwellState = field(default_factory=DwellState)


def policy_step(
    tool: Vec3,
    target: TargetSpec,
    now_us: int,
    cfg: PolicyConfig,
    state: PolicyState,
) -> tuple[list[CueEvent], PolicyState]:
    """One pose sample through the full policy (reference implementation).

    Emits start/stop events so the active directional set tracks the sample,
    suppresses directional cues inside the tolerance sphere, and emits a
    success burst when the dwell timer completes.
    """
    err = axis_error(tool, target.center)
    dwell, success = update_dwell(state.dwell, err, now_us, cfg, target.tolerance_radius)
    inside = dwell.inside_since_us is not None
    if inside:
        wanted: set[CueId] = set()
    else:
        wanted = select_directional_cues(err, cfg, state.active)

    events: list[CueEvent] = []
    for cue in sorted(state.active - wanted, key=lambda c: c.value):
        events.append(CueEvent(now_us, cue, EventKind.STOP))
    for cue in sorted(wanted - state.active, key=lambda c: c.value):
        events.append(CueEvent(now_us, cue, EventKind.START))
    if success:
        events.append(CueEvent(now_us, CueId.SUCCESS, EventKind.BURST))
    return events, PolicyState(wanted, dwell)


_NO_EVENTS: tuple = ()

# Stable event emission order: stops before starts, each sorted by cue name.
_SORTED_DIRECTIONAL = sorted(DIRECTIONAL_CUES, key=lambda c: c.value)


class GuidancePolicy:
    """Session-rate policy: one instance drives one trial sequentially.

    Semantics are identical to composing update_dwell and
    select_directional_cues each sample (the reference ``policy_step``).
    """

    __slots__ = (
        "cfg", "target", "_cx", "_cy", "_cz", "_tol", "_thr", "_hys",
        "_dwell_us", "_axes", "_axis_bits", "_largest", "_active_mask", "_inside_since",
        "_fired", "_last_us",
    )

    def __init__(self, cfg: PolicyConfig, target: TargetSpec):
        self.cfg = cfg
        self.target = target
        c = target.center
        self._cx, self._cy, self._cz = c.x, c.y, c.z
        self._tol = target.tolerance_radius
        self._thr = cfg.axis_threshold_mm
        self._hys = cfg.hysteresis_mm
        self._dwell_us = cfg.dwell_ms * 1000
        self._axes = tuple(cfg.cued_axes)
        self._axis_bits = tuple(
            (a, (_CUE_BIT[_AXIS_CUES[a][0]], _CUE_BIT[_AXIS_CUES[a][1]]))
            for a in cfg.cued_axes
        )
        self._largest = cfg.largest_axis_only
        self._active_mask = 0
        self._inside_since: int | None = None
        self._fired = False
        self._last_us: int | None = None

    @property
    def active(self) -> set[CueId]:
        return {cue for cue, bit in _CUE_BIT.items() if self._active_mask & bit}

    @property
    def state(self) -> PolicyState:
        return PolicyState(self.active, DwellState(self._inside_since, self._fired, self._last_us))

    def step(self, tool: Vec3, now_us: int) -> list[CueEvent] | tuple:
        return self.step_xyz(tool.x, tool.y, tool.z, now_us)

    def step_xyz(self, x: float, y: float, z: float, now_us: int) -> list[CueEvent] | tuple:
        if self._last_us is not None and now_us < self._last_us:
            raise ValueError(f"time regression: {now_us} < {self._last_us}")
        self._last_us = now_us

        ex = self._cx - x
        ey = self._cy - y
        ez = self._cz - z

        fires = False
        # sqrt keeps the containment test bit-identical with the reference.
        if sqrt(ex * ex + ey * ey + ez * ez) <= self._tol:
            if self._inside_since is None:
                self._inside_since = now_us
            if not self._fired and now_us - self._inside_since >= self._dwell_us:
                self._fired = True
                fires = True
            wanted = 0
        else:
            self._inside_since = None
            self._fired = False
            wanted = self._wanted_mask(ex, ey, ez)

        prev = self._active_mask
        if wanted == prev and not fires:
            return _NO_EVENTS

        events: list[CueEvent] = []
        changed = wanted ^ prev
        if changed:
            for cue in _SORTED_DIRECTIONAL:
                bit = _CUE_BIT[cue]
                if changed & bit & prev:
                    events.append(CueEvent(now_us, cue, EventKind.STOP))
            for cue in _SORTED_DIRECTIONAL:
                bit = _CUE_BIT[cue]
                if changed & bit & wanted:
                    events.append(CueEvent(now_us, cue, EventKind.START))
            self._active_mask = wanted
        if fires:
            events.append(CueEvent(now_us, CueId.SUCCESS, EventKind.BURST))
        return events

    def _wanted_mask(self, ex: float, ey: float, ez: float) -> int:
        thr = self._thr
        hys = self._hys
        prev = self._active_mask
        wanted = 0
        for axis, bits in self._axis_bits:
            v = ex if axis == 0 else (ey if axis == 1 else ez)
            if v > 0.0:
                bit = bits[0]
            elif v < 0.0:
                bit = bits[1]
                v = -v
            else:
                continue
            if v > (thr - hys if prev & bit else thr):
                wanted |= bit
        if self._largest and wanted:
            best_bit = 0
            best_mag = -1.0
            for axis, bits in self._axis_bits:
                v = ex if axis == 0 else (ey if axis == 1 else ez)
                mag = v if v > 0.0 else -v
                bit = bits[0] if v > 0.0 else bits[1]
                if wanted & bit and mag > best_mag:
                    best_mag = mag
                    best_bit = bit
            wanted = best_bit
        return wanted

    def finish(self, now_us: int) -> list[CueEvent]:
        """Stop every active cue (end of trial)."""
        events = [
            CueEvent(now_us, cue, EventKind.STOP)
            for cue in _SORTED_DIRECTIONAL
            if self._active_mask & _CUE_BIT[cue]
        ]
        self._active_mask = 0
        return events
