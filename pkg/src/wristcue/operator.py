"""Simulated human operator for the guidance task.

The operator perceives cues through a confusion model after a reaction
delay, maintains a per-condition estimate of where the target is, moves the
tool with first-order dynamics (velocity proportional to perceived error)
plus motor noise, and declares completion from its own perceived error, not
from ground truth. All the error the simulator reproduces originates in the
perception model: a noiseless, bias-free operator walks straight in.

Condition behavior:

- AR only: the target estimate is the visual percept, which carries a
  per-participant depth misjudgment (drawn toward overshoot) and per-trial
  lateral/depth noise. No haptic percepts are delivered.
- Haptic only: no rendered target. Depth comes from a coarse physical
  reference (sign-free, double the visual noise) approached with a cautious
  short-of-target margin; lateral position is steered bang-bang by the
  perceived cues, a fixed step in the cued direction.
- Multimodal: visual pursuit as in AR, but the depth estimate is aimed
  deliberately short (cross-checked caution, most of the AR depth bias
  corrected), each consumed cue percept overrides the visual estimate on
  that axis, and every cue change pauses the hand for a checking delay.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from random import Random

import numpy as np

from .geometry import TargetSpec, Vec3
from .policy import CUE_DIRECTIONS, CueEvent, CueId, EventKind, STUDY1_CUES

RT_FLOOR_S = 0.2


class Condition(enum.Enum):
    AR_ONLY = "ar"
    HAPTIC_ONLY = "haptic"
    MULTIMODAL = "multi"


@dataclass(frozen=True)
class ConfusionModel:
    """Per-cue identification distribution plus response-time statistics."""

    rows: dict[CueId, dict[CueId, float]]
    rt_mean_s: float = 1.1
    rt_sd_s: float = 0.3

    def __post_init__(self):
        if self.rt_mean_s <= 0:
            raise ValueError("rt_mean_s must be positive")
        if self.rt_sd_s < 0:
            raise ValueError("rt_sd_s must be >= 0")
        cdfs: dict[CueId, tuple[tuple[float, CueId], ...]] = {}
        for cue, row in self.rows.items():
            if any(p < 0 or p > 1 for p in row.values()):
                raise ValueError(f"{cue} row has probabilities outside [0, 1]")
            total = sum(row.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{cue} row sums to {total}, expected 1")
            # Canonical walk order (by cue name) so the same uniform draw
            # maps to the same outcome however the row dict was built.
            acc = 0.0
            cdf = []
            for outcome in sorted(row, key=lambda c: c.value):
                acc += row[outcome]
                cdf.append((acc, outcome))
            cdfs[cue] = tuple(cdf)
        object.__setattr__(self, "_cdfs", cdfs)

    def accuracy(self, cue: CueId) -> float:
        return self.rows[cue].get(cue, 0.0)


def default_confusion_model() -> ConfusionModel:
    """Identification model fitted to the five-cue study.

    Diagonals match the reported per-cue accuracies; the dominant confusion
    for a vertical cue is the opposite vertical cue. The off-diagonal split
    beyond that is a modeling default.
    """
    L, R, U, D, S = CueId.LEFT, CueId.RIGHT, CueId.UP, CueId.DOWN, CueId.SUCCESS
    rows = {
        L: {L: 0.93, R: 0.04, U: 0.01, D: 0.01, S: 0.01},
        R: {R: 0.94, L: 0.03, U: 0.01, D: 0.01, S: 0.01},
        U: {U: 0.82, D: 0.15, L: 0.01, R: 0.01, S: 0.01},
        D: {D: 0.84, U: 0.13, L: 0.01, R: 0.01, S: 0.01},
        S: {S: 0.98, L: 0.005, R: 0.005, U: 0.005, D: 0.005},
    }
    return ConfusionModel(rows=rows, rt_mean_s=1.1, rt_sd_s=0.3)


def guidance_confusion_model() -> ConfusionModel:
    """Cue perception during guidance.

    Same directional confusions as the identification model, but a pulsed
    single-motor cue is never mistaken for the unmistakable all-motor burst,
    and depth rhythms (if a session cues depth) confuse only with each other.
    """
    L, R, U, D, S = CueId.LEFT, CueId.RIGHT, CueId.UP, CueId.DOWN, CueId.SUCCESS
    F, B = CueId.FORWARD, CueId.BACK
    rows = {
        L: {L: 0.93, R: 0.04, U: 0.015, D: 0.015},
        R: {R: 0.94, L: 0.03, U: 0.015, D: 0.015},
        U: {U: 0.82, D: 0.15, L: 0.015, R: 0.015},
        D: {D: 0.84, U: 0.13, L: 0.015, R: 0.015},
        F: {F: 0.93, B: 0.05, L: 0.005, R: 0.005, U: 0.005, D: 0.005},
        B: {B: 0.93, F: 0.05, L: 0.005, R: 0.005, U: 0.005, D: 0.005},
        S: {S: 0.98, L: 0.005, R: 0.005, U: 0.005, D: 0.005},
    }
    return ConfusionModel(rows=rows, rt_mean_s=1.1, rt_sd_s=0.3)


def perceive_cue(true_cue: CueId, model: ConfusionModel, rng: Random) -> tuple[CueId, float]:
    """Sample what the wearer identifies and how long it takes them.

    Response time is normal, truncated below at 0.2 s.
    """
    cdf = model._cdfs.get(true_cue)
    if cdf is None:
        raise ValueError(f"no confusion row configured for {true_cue}")
    r = rng.random()
    perceived = cdf[-1][1]
    for acc, cue in cdf:
        if r < acc:
            perceived = cue
            break
    rt = max(RT_FLOOR_S, rng.gauss(model.rt_mean_s, model.rt_sd_s))
    return perceived, rt


@dataclass(frozen=True)
class OperatorParams:
    """Population-level behavior parameters of the simulated operator."""

    reaction_delay_ms: float = 300.0
    control_gain: float = 0.74          # 1/s, velocity per mm of perceived error
    gain_spread_cv: float = 0.15        # lognormal spread of gain across participants
    motor_noise_mm: float = 0.05        # per-tick positional tremor SD
    visual_lateral_noise_mm: float = 1.4
    visual_depth_noise_mm: float = 3.1
    visual_depth_bias_mm: float = 8.65   # AR-only depth misjudgment mean (overshoot direction)
    visual_depth_bias_sd_mm: float = 2.2
    haptic_step_mm: float = 3.0         # bang-bang perceived step per cued axis
    haptic_depth_noise_scale: float = 2.50
    haptic_depth_margin_mm: float = 4.15   # cautious short-of-reference approach
    haptic_skill_cv: float = 0.26
    multimodal_bias_scale: float = 0.25   # residual depth bias after cross-checking
    multimodal_depth_margin_mm: float = 6.3
    multimodal_margin_sd_mm: float = 1.9
    multimodal_checking_delay_ms: float = 300.0
    percept_interval_ms: float = 700.0    # re-attending period for ongoing cues
    stop_dwell_ms: float = 500.0
    perceived_stop_tolerance_mm: dict[Condition, float] = field(
        default_factory=lambda: {
            Condition.AR_ONLY: 1.2,
            Condition.HAPTIC_ONLY: 1.35,
            Condition.MULTIMODAL: 2.0,
        }
    )
    rng_seed: int = 0

    def __post_init__(self):
        if self.reaction_delay_ms < 0 or self.multimodal_checking_delay_ms < 0:
            raise ValueError("delays must be >= 0")
        if self.control_gain <= 0:
            raise ValueError("control_gain must be positive")
        for name in ("motor_noise_mm", "visual_lateral_noise_mm", "visual_depth_noise_mm",
                     "gain_spread_cv", "haptic_skill_cv", "multimodal_margin_sd_mm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if any(v <= 0 for v in self.perceived_stop_tolerance_mm.values()):
            raise ValueError("stop tolerances must be positive")
        if self.percept_interval_ms <= 0 or self.stop_dwell_ms <= 0:
            raise ValueError("percept_interval_ms and stop_dwell_ms must be positive")


@dataclass(frozen=True)
class ParticipantProfile:
    """One participant's draws from the population parameters."""

    gain: float
    visual_depth_bias_mm: float
    haptic_skill: float
    multimodal_margin_mm: float


def draw_participant(params: OperatorParams, rng: Random) -> ParticipantProfile:
    gain = params.control_gain * math.exp(rng.gauss(0.0, params.gain_spread_cv))
    bias = rng.gauss(params.visual_depth_bias_mm, params.visual_depth_bias_sd_mm)
    skill = math.exp(rng.gauss(0.0, params.haptic_skill_cv))
    margin = rng.gauss(params.multimodal_depth_margin_mm, params.multimodal_margin_sd_mm)
    return ParticipantProfile(gain, bias, skill, margin)


# Percept kinds flowing through the operator's delayed queue.
PERCEPT_START = "start"
PERCEPT_STOP = "stop"
PERCEPT_REFRESH = "refresh"
PERCEPT_SUCCESS = "success"


@dataclass(slots=True)
class OperatorState:
    """Mutable state of one simulated operator over one trial."""

    condition: Condition
    params: OperatorParams
    profile: ParticipantProfile
    # Tool tip, task frame, mm.
    x: float
    y: float
    z: float
    # Perceived target estimate, per axis.
    est: list[float]
    # Fixed per-trial visual percept of the target (AR / multimodal anchor).
    vis: list[float]
    declared_done: bool = False
    declared_at_us: int | None = None
    success_consumed: bool = False
    # (deliver_at_us, kind, engine_cue, perceived_cue)
    pending: list[tuple[int, str, CueId | None, CueId | None]] = field(default_factory=list)
    consumed: list[tuple[int, str, CueId | None, CueId | None]] = field(default_factory=list)
    # Engine-truth cue -> perceived cue, for cues currently believed active.
    perceived_active: dict[CueId, CueId] = field(default_factory=dict)
    engine_active: set[CueId] = field(default_factory=set)
    below_since_us: int | None = None
    pause_until_us: int = 0
    next_refresh_us: int = 0
    moved_since_us: int = 0
    # Precomputed per-trial constants (derived from params/profile).
    delay_us: int = 0
    interval_us: int = 0
    pause_us: int = 0
    stop_tol_mm: float = 0.0
    stop_tol_sq: float = 0.0
    stop_dwell_us: int = 0
    gain: float = 0.0
    noise_mm: float = 0.0
    noise_rng: object = None
    noise_buf: object = None
    noise_i: int = 0

    @property
    def tool(self) -> Vec3:
        return Vec3(self.x, self.y, self.z)

    def _tremor(self) -> tuple[float, float, float]:
        i = self.noise_i
        buf = self.noise_buf
        if buf is None or i >= len(buf):
            # tolist() keeps the hot path in plain Python floats.
            buf = self.noise_rng.standard_normal(900).tolist()
            self.noise_buf = buf
            i = 0
        self.noise_i = i + 3
        return buf[i], buf[i + 1], buf[i + 2]


def init_operator_state(
    condition: Condition,
    target: TargetSpec,
    params: OperatorParams,
    profile: ParticipantProfile,
    rng: Random,
    home: Vec3 = Vec3(0.0, 0.0, 200.0),
) -> OperatorState:
    """Set up one trial: draw the per-trial percepts of the target."""
    tc = target.center
    lat = params.visual_lateral_noise_mm
    ex = rng.gauss(0.0, lat)
    ey = rng.gauss(0.0, lat)
    ez = rng.gauss(0.0, params.visual_depth_noise_mm)
    if condition is Condition.AR_ONLY:
        vis = [tc.x + ex, tc.y + ey, tc.z + profile.visual_depth_bias_mm + ez]
    elif condition is Condition.HAPTIC_ONLY:
        # Sign-free physical depth reference: double the visual noise, no
        # rendered target, cautious short-of-reference aim.
        scale = params.haptic_depth_noise_scale * profile.haptic_skill
        ref_z = rng.gauss(0.0, params.visual_depth_noise_mm * scale)
        vis = [
            tc.x + ex * params.haptic_depth_noise_scale,
            tc.y + ey * params.haptic_depth_noise_scale,
            tc.z + ref_z - params.haptic_depth_margin_mm,
        ]
    else:
        vis = [
            tc.x + ex,
            tc.y + ey,
            tc.z
            + params.multimodal_bias_scale * profile.visual_depth_bias_mm
            + ez
            - profile.multimodal_margin_mm,
        ]
    state = OperatorState(
        condition=condition,
        params=params,
        profile=profile,
        x=home.x,
        y=home.y,
        z=home.z,
        est=list(vis),
        vis=vis,
        next_refresh_us=int(params.percept_interval_ms * 1000),
        delay_us=int(params.reaction_delay_ms * 1000),
        interval_us=int(params.percept_interval_ms * 1000),
        pause_us=int(params.multimodal_checking_delay_ms * 1000),
        stop_tol_mm=params.perceived_stop_tolerance_mm[condition],
        stop_tol_sq=params.perceived_stop_tolerance_mm[condition] ** 2,
        stop_dwell_us=int(params.stop_dwell_ms * 1000),
        gain=profile.gain,
        noise_mm=params.motor_noise_mm,
        noise_rng=np.random.Generator(np.random.PCG64(rng.getrandbits(63))),
    )
    if condition is Condition.HAPTIC_ONLY:
        # No rendered target estimate: lateral belief starts at the tool.
        state.est[0] = home.x
        state.est[1] = home.y
        state.vis[0] = home.x
        state.vis[1] = home.y
    state.moved_since_us = int(params.reaction_delay_ms * 1000)
    return state


def notify_cue_events(
    state: OperatorState,
    events: list[CueEvent],
    model: ConfusionModel,
    rng: Random,
) -> None:
    """Feed engine cue events into the operator's delayed percept queue.

    Call only for conditions in which the band is actually worn.
    """
    delay = state.delay_us
    for ev in events:
        if ev.kind is EventKind.BURST and ev.cue is CueId.SUCCESS:
            perceived, _ = perceive_cue(CueId.SUCCESS, model, rng)
            kind = PERCEPT_SUCCESS if perceived is CueId.SUCCESS else PERCEPT_START
            state.pending.append((ev.at_us + delay, kind, ev.cue, perceived))
        elif ev.kind is EventKind.START:
            state.engine_active.add(ev.cue)
            perceived, _ = perceive_cue(ev.cue, model, rng)
            if perceived is CueId.SUCCESS:
                perceived = ev.cue
            state.pending.append((ev.at_us + delay, PERCEPT_START, ev.cue, perceived))
        elif ev.kind is EventKind.STOP:
            state.engine_active.discard(ev.cue)
            state.pending.append((ev.at_us + delay, PERCEPT_STOP, ev.cue, None))


def _axis_of(cue: CueId) -> int:
    dx, dy, _dz = CUE_DIRECTIONS[cue]
    if dx:
        return 0
    if dy:
        return 1
    return 2


def _apply_directional(state: OperatorState, engine_cue: CueId, perceived: CueId) -> None:
    state.perceived_active[engine_cue] = perceived
    axis = _axis_of(perceived)
    step = state.params.haptic_step_mm * CUE_DIRECTIONS[perceived][axis]
    tool = (state.x, state.y, state.z)
    state.est[axis] = tool[axis] + step


def _clear_directional(state: OperatorState, engine_cue: CueId) -> None:
    perceived = state.perceived_active.pop(engine_cue, None)
    if perceived is None:
        return
    axis = _axis_of(perceived)
    # No other believed-active cue on this axis: aligned there, hold still.
    # The silence is trusted over a visual re-glance in every condition.
    if all(_axis_of(p) != axis for p in state.perceived_active.values()):
        tool = (state.x, state.y, state.z)
        state.est[axis] = tool[axis]


def _consume_percepts(state: OperatorState, now_us: int, model: ConfusionModel, rng: Random) -> None:
    due = [p for p in state.pending if p[0] <= now_us]
    if not due:
        return
    state.pending = [p for p in state.pending if p[0] > now_us]
    pause = state.pause_us
    for at_us, kind, engine_cue, perceived in due:
        state.consumed.append((at_us, kind, engine_cue, perceived))
        if kind == PERCEPT_SUCCESS:
            state.success_consumed = True
            state.declared_done = True
            if state.declared_at_us is None:
                state.declared_at_us = now_us
            continue
        if kind == PERCEPT_START and perceived is not None and engine_cue is not None:
            _apply_directional(state, engine_cue, perceived)
        elif kind == PERCEPT_STOP and engine_cue is not None:
            _clear_directional(state, engine_cue)
        elif kind == PERCEPT_REFRESH and perceived is not None and engine_cue is not None:
            _apply_directional(state, engine_cue, perceived)
        if state.condition is Condition.MULTIMODAL and kind in (PERCEPT_START, PERCEPT_STOP):
            state.pause_until_us = max(state.pause_until_us, now_us + pause)


def operator_step(
    state: OperatorState,
    condition: Condition,
    percepts: list[CueEvent],
    target: TargetSpec,
    dt_us: int,
    params: OperatorParams,
    rng: Random,
    model: ConfusionModel | None = None,
    now_us: int = 0,
) -> OperatorState:
    """Advance the operator by one simulation tick.

    ``percepts`` are the engine cue events raised this tick (empty in the
    AR-only condition, where the band is rendered but not delivered).
    """
    if model is None:
        model = guidance_confusion_model()
    if condition is not state.condition:
        raise ValueError("condition does not match the state it was initialized for")
    if percepts:
        notify_cue_events(state, percepts, model, rng)

    # Re-attend to ongoing vibration at the percept interval.
    if now_us >= state.next_refresh_us:
        state.next_refresh_us = now_us + state.interval_us
        if state.engine_active:
            delay = state.delay_us
            for cue in sorted(state.engine_active, key=lambda c: c.value):
                perceived, _ = perceive_cue(cue, model, rng)
                if perceived is CueId.SUCCESS:
                    perceived = cue
                state.pending.append((now_us + delay, PERCEPT_REFRESH, cue, perceived))

    if state.pending:
        _consume_percepts(state, now_us, model, rng)
        if state.declared_done:
            return state

    est = state.est
    ex = est[0] - state.x
    ey = est[1] - state.y
    ez = est[2] - state.z
    if now_us >= state.moved_since_us:
        if now_us >= state.pause_until_us:
            g = state.gain * (dt_us * 1e-6)
            state.x += g * ex
            state.y += g * ey
            state.z += g * ez
        # Declaration: perceived error below the condition's stop tolerance,
        # continuously for the stop dwell.
        if ex * ex + ey * ey + ez * ez < state.stop_tol_sq:
            since = state.below_since_us
            if since is None:
                state.below_since_us = now_us
            elif now_us - since >= state.stop_dwell_us:
                state.declared_done = True
                state.declared_at_us = now_us
        else:
            state.below_since_us = None
    noise = state.noise_mm
    if noise > 0.0:
        nx, ny, nz = state._tremor()
        state.x += noise * nx
        state.y += noise * ny
        state.z += noise * nz
    return state


def noiseless_params(base: OperatorParams | None = None) -> OperatorParams:
    """Strip every noise, bias, and perceptual-resolution limit; useful for
    controller sanity checks (all residual error must come from these)."""
    base = base or OperatorParams()
    return replace(
        base,
        motor_noise_mm=0.0,
        visual_lateral_noise_mm=0.0,
        visual_depth_noise_mm=0.0,
        visual_depth_bias_mm=0.0,
        visual_depth_bias_sd_mm=0.0,
        gain_spread_cv=0.0,
        haptic_skill_cv=0.0,
        haptic_depth_margin_mm=0.0,
        multimodal_bias_scale=0.0,
        multimodal_depth_margin_mm=0.0,
        multimodal_margin_sd_mm=0.0,
        perceived_stop_tolerance_mm={c: 0.05 for c in Condition},
    )


STUDY1_CUE_SET = frozenset(STUDY1_CUES)
