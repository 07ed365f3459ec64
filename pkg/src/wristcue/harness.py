"""Study protocols: cue-identification sessions and guided-alignment trials.

Both protocols produce replayable TrialLogs: identical seeds regenerate
byte-identical logs. A cue-identification session is 50 trials, 10 per cue,
each a 2 s distractor window followed by a 2 s haptic window. A guidance
trial drives the cue policy at the 120 Hz pose rate and the frame mixer at
the 100 Hz command rate until the simulated operator declares alignment or
the trial times out.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from random import Random

from .actuation import Codebook, CueMixer, default_codebook
from .geometry import FRAME_PERIOD_US, POSE_PERIOD_US, TargetSpec, Vec3, euclidean_error
from .operator import (
    Condition,
    ConfusionModel,
    OperatorParams,
    ParticipantProfile,
    default_confusion_model,
    draw_participant,
    guidance_confusion_model,
    init_operator_state,
    operator_step,
    perceive_cue,
)
from .policy import CueId, EventKind, GuidancePolicy, PolicyConfig, STUDY1_CUES

HOME_POSE = Vec3(0.0, 0.0, 200.0)
CUE_ID_DISTRACTOR_US = 2_000_000
CUE_ID_WINDOW_US = 2_000_000
GUIDANCE_DEPTHS_MM = (300.0, 350.0, 400.0)
GUIDANCE_OFFSETS_MM = (-10.0, 10.0)
GUIDANCE_REPETITIONS = 3


class Protocol(enum.Enum):
    CUE_IDENTIFICATION = "cue-id"
    GUIDANCE = "guidance"


def default_guidance_policy_config() -> PolicyConfig:
    """Guidance sessions cue the lateral and vertical axes (the trained cue
    vocabulary); depth closes via the success cue. Fully overridable."""
    return PolicyConfig(cued_axes=(0, 1))


@dataclass(frozen=True)
class TrialConfig:
    protocol: Protocol
    seed: int
    participant: int = 0
    repetition: int = 0
    condition: Condition | None = None
    depth_mm: float | None = None
    lateral_offset_mm: float | None = None
    cue: CueId | None = None
    timeout_ms: int = 30_000

    def __post_init__(self):
        if self.protocol is Protocol.GUIDANCE:
            if self.condition is None or self.depth_mm is None or self.lateral_offset_mm is None:
                raise ValueError("guidance trials need condition, depth_mm and lateral_offset_mm")
            if self.cue is not None:
                raise ValueError("cue is a cue-identification field")
        else:
            if self.cue is None:
                raise ValueError("cue-identification trials need a cue")
            if self.depth_mm is not None or self.lateral_offset_mm is not None:
                raise ValueError("depth/lateral offset are guidance fields")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")

    def target(self, tolerance_radius_mm: float = 2.0) -> TargetSpec:
        if self.protocol is not Protocol.GUIDANCE:
            raise ValueError("only guidance trials have a target")
        return TargetSpec(
            center=Vec3(self.lateral_offset_mm, 0.0, self.depth_mm),
            visual_radius=5.0,
            tolerance_radius=tolerance_radius_mm,
        )


@dataclass
class TrialLog:
    config: TrialConfig
    # (t_us, x, y, z)
    poses: list[tuple[int, float, float, float]] = field(default_factory=list)
    # (t_us, cue_name, kind)
    events: list[tuple[int, str, str]] = field(default_factory=list)
    # (t_us, seq, (i0..i5))
    frames: list[tuple[int, int, tuple]] = field(default_factory=list)
    frames_delivered: bool = True
    # (t_us, kind, cue_name, perceived_name)
    percepts: list[tuple[int, str, str | None, str | None]] = field(default_factory=list)
    outcome: dict = field(default_factory=dict)
    # Simulation provenance for byte-exact replay (absent for interactive logs).
    provenance: dict = field(default_factory=dict)


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from structured parts (independent of hash randomization)."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def run_cue_id_session(
    participant_seed: int,
    model: ConfusionModel | None = None,
    participant: int = 0,
    policy_cfg: PolicyConfig | None = None,
    codebook: Codebook | None = None,
) -> list[TrialLog]:
    """One 50-trial identification session: 10 occurrences of each cue,
    order shuffled by the participant seed."""
    model = model or default_confusion_model()
    policy_cfg = policy_cfg or PolicyConfig()
    codebook = codebook or default_codebook(policy_cfg)
    rng = Random(participant_seed)
    order = [cue for cue in STUDY1_CUES for _ in range(10)]
    rng.shuffle(order)

    onset = CUE_ID_DISTRACTOR_US
    end = onset + CUE_ID_WINDOW_US
    # The frame stream depends only on the cue type: render each once.
    frames_for: dict[CueId, list] = {}
    for cue in STUDY1_CUES:
        mixer = CueMixer(codebook)
        mixer.active[cue] = onset
        frames_for[cue] = [mixer.frame_tuple(t) for t in range(0, end + 1, FRAME_PERIOD_US)]

    logs: list[TrialLog] = []
    reps: dict[CueId, int] = {c: 0 for c in STUDY1_CUES}
    for index, cue in enumerate(order):
        cfg = TrialConfig(
            protocol=Protocol.CUE_IDENTIFICATION,
            seed=derive_seed(participant_seed, "cue-id", index),
            participant=participant,
            repetition=reps[cue],
            cue=cue,
        )
        reps[cue] += 1
        log = TrialLog(config=cfg)
        if cue is CueId.SUCCESS:
            log.events.append((onset, cue.value, EventKind.BURST.value))
        else:
            log.events.append((onset, cue.value, EventKind.START.value))
        log.frames = list(frames_for[cue])
        if cue is not CueId.SUCCESS:
            log.events.append((end, cue.value, EventKind.STOP.value))

        perceived, rt = perceive_cue(cue, model, rng)
        respond_at = onset + int(round(rt * 1e6))
        log.percepts.append((respond_at, "response", cue.value, perceived.value))
        log.outcome = {
            "status": "responded",
            "true_cue": cue.value,
            "response": perceived.value,
            "rt_s": round(rt, 4),
            "correct": perceived is cue,
            "t_us": max(end, respond_at),
        }
        logs.append(log)
    return logs


def run_guidance_trial(
    cfg: TrialConfig,
    params: OperatorParams | None = None,
    policy_cfg: PolicyConfig | None = None,
    profile: ParticipantProfile | None = None,
    model: ConfusionModel | None = None,
    codebook: Codebook | None = None,
    collect_streams: bool = True,
) -> TrialLog:
    """Run one guided-alignment trial to declaration or timeout.

    ``collect_streams=False`` skips pose/frame logging (calibration sweeps);
    outcomes are identical either way.
    """
    if cfg.protocol is not Protocol.GUIDANCE:
        raise ValueError("not a guidance trial config")
    params = params or OperatorParams()
    policy_cfg = policy_cfg or default_guidance_policy_config()
    model = model or guidance_confusion_model()
    codebook = codebook or default_codebook(policy_cfg)
    rng = Random(cfg.seed)
    if profile is None:
        profile = draw_participant(params, rng)

    target = cfg.target(policy_cfg.tolerance_radius_mm)
    policy = GuidancePolicy(policy_cfg, target)
    mixer = CueMixer(codebook)
    state = init_operator_state(cfg.condition, target, params, profile, rng, HOME_POSE)
    delivered = cfg.condition is not Condition.AR_ONLY

    log = TrialLog(config=cfg, frames_delivered=delivered)
    timeout_us = cfg.timeout_ms * 1000
    target_z = target.center.z
    overshoot = False
    success_fired = False

    step_xyz = policy.step_xyz
    op_step = operator_step
    frame_tuple = mixer.frame_tuple
    poses_append = log.poses.append
    frames_append = log.frames.append
    no_events: list = []

    t_pose = 0
    t_frame = 0
    t = 0
    while True:
        # Pose/policy processing leads the frame render at equal timestamps,
        # so a cue starting at t is already audible in the frame at t.
        if t_frame < t_pose:
            frame = frame_tuple(t_frame)
            if collect_streams:
                frames_append(frame)
            t = t_frame
            t_frame += FRAME_PERIOD_US
            continue

        t = t_pose
        if collect_streams:
            poses_append((t, state.x, state.y, state.z))
        if state.z > target_z:
            overshoot = True
        events = step_xyz(state.x, state.y, state.z, t)
        if events:
            for ev in events:
                if collect_streams:
                    log.events.append((ev.at_us, ev.cue.value, ev.kind.value))
                mixer.apply(ev)
                if ev.cue is CueId.SUCCESS:
                    success_fired = True
        op_step(
            state,
            cfg.condition,
            events if (delivered and events) else no_events,
            target,
            POSE_PERIOD_US,
            params,
            rng,
            model=model,
            now_us=t,
        )
        if state.consumed:
            if collect_streams:
                for at_us, kind, engine_cue, perceived in state.consumed:
                    log.percepts.append(
                        (at_us, kind, engine_cue.value if engine_cue else None,
                         perceived.value if perceived else None)
                    )
            state.consumed.clear()
        if state.declared_done or t_pose >= timeout_us:
            break
        t_pose += POSE_PERIOD_US

    end_us = t
    for ev in policy.finish(end_us):
        if collect_streams:
            log.events.append((ev.at_us, ev.cue.value, ev.kind.value))

    declared = state.declared_done
    completion_us = state.declared_at_us if declared and state.declared_at_us is not None else timeout_us
    final_error = euclidean_error(Vec3(state.x, state.y, state.z), target.center)
    log.outcome = {
        "status": "declared" if declared else "timeout",
        "final_error_mm": round(final_error, 4),
        "completion_time_s": round(completion_us / 1e6, 4),
        "overshoot": overshoot,
        "success_cue_fired": success_fired,
        "success_percept": state.success_consumed,
        "t_us": end_us,
    }
    return log


def guidance_trial_plan(participant: int, rng: Random) -> list[tuple[float, float]]:
    """The 18-trial plan for one condition: 6 positions x 3 repetitions, shuffled."""
    cells = [(d, o) for d in GUIDANCE_DEPTHS_MM for o in GUIDANCE_OFFSETS_MM]
    plan = cells * GUIDANCE_REPETITIONS
    rng.shuffle(plan)
    return plan


def run_guidance_session(
    root_seed: int,
    participant: int,
    conditions: tuple[Condition, ...] = tuple(Condition),
    params: OperatorParams | None = None,
    policy_cfg: PolicyConfig | None = None,
    model: ConfusionModel | None = None,
    codebook: Codebook | None = None,
    collect_streams: bool = True,
) -> list[TrialLog]:
    """All conditions for one participant: 18 trials per condition."""
    params = params or OperatorParams()
    prng = Random(derive_seed(root_seed, "participant", participant))
    profile = draw_participant(params, prng)
    logs: list[TrialLog] = []
    for condition in conditions:
        plan = guidance_trial_plan(participant, prng)
        reps: dict[tuple[float, float], int] = {}
        for index, (depth, offset) in enumerate(plan):
            rep = reps.get((depth, offset), 0)
            reps[(depth, offset)] = rep + 1
            cfg = TrialConfig(
                protocol=Protocol.GUIDANCE,
                seed=derive_seed(root_seed, participant, condition.value, index),
                participant=participant,
                repetition=rep,
                condition=condition,
                depth_mm=depth,
                lateral_offset_mm=offset,
            )
            logs.append(
                run_guidance_trial(
                    cfg,
                    params,
                    policy_cfg,
                    profile=profile,
                    model=model,
                    codebook=codebook,
                    collect_streams=collect_streams,
                )
            )
    return logs


def run_guidance_study(
    n_participants: int,
    root_seed: int,
    conditions: tuple[Condition, ...] = tuple(Condition),
    params: OperatorParams | None = None,
    policy_cfg: PolicyConfig | None = None,
    model: ConfusionModel | None = None,
    codebook: Codebook | None = None,
    collect_streams: bool = True,
) -> list[TrialLog]:
    logs: list[TrialLog] = []
    for participant in range(n_participants):
        logs.extend(
            run_guidance_session(
                root_seed,
                participant,
                conditions,
                params,
                policy_cfg,
                model,
                codebook,
                collect_streams,
            )
        )
    return logs


def run_cue_id_study(
    n_participants: int,
    root_seed: int,
    model: ConfusionModel | None = None,
) -> list[TrialLog]:
    logs: list[TrialLog] = []
    for participant in range(n_participants):
        seed = derive_seed(root_seed, "cue-id-participant", participant)
        logs.extend(run_cue_id_session(seed, model, participant=participant))
    return logs
