"""Engine for human-driven sessions: poses in, cues and frames out.

The engine is synchronous and deterministic: the session service feeds it
live WebSocket traffic, and `replay` feeds it the recorded inputs of a log
file to regenerate the derived streams byte-identically. Engine time is
authoritative: client pose timestamps must be monotone, and command frames
are emitted on the exact 10 ms grid regardless of pose jitter.
"""

from __future__ import annotations

from random import Random

from .actuation import Codebook, CueMixer, default_codebook
from .geometry import FRAME_PERIOD_US, TargetSpec, Vec3
from .harness import (
    CUE_ID_DISTRACTOR_US,
    CUE_ID_WINDOW_US,
    Protocol,
    TrialConfig,
    TrialLog,
    derive_seed,
)
from .policy import CueId, EventKind, GuidancePolicy, PolicyConfig, STUDY1_CUES


class PoseRegression(ValueError):
    """Client pose timestamp went backwards; the message is rejected."""


class InteractiveGuidanceEngine:
    """One human guidance trial: stream poses, receive cue/frame records."""

    def __init__(
        self,
        config: TrialConfig,
        policy_cfg: PolicyConfig,
        codebook: Codebook | None = None,
        frames_delivered: bool = True,
    ):
        if config.protocol is not Protocol.GUIDANCE:
            raise ValueError("guidance engine needs a guidance trial config")
        self.config = config
        self.policy_cfg = policy_cfg
        self.target = config.target(policy_cfg.tolerance_radius_mm)
        self.policy = GuidancePolicy(policy_cfg, self.target)
        self.mixer = CueMixer(codebook or default_codebook(policy_cfg))
        self.log = TrialLog(config=config, frames_delivered=frames_delivered)
        self.log.provenance = {"mode": "interactive", "protocol": "guidance"}
        self._t_frame = 0
        self._last_pose_us: int | None = None
        self._overshoot = False
        self._success_fired = False
        self.done = False

    def _emit_frames_below(self, limit_us: int, out: list[dict]) -> None:
        while self._t_frame < limit_us:
            t, seq, levels = self.mixer.frame_tuple(self._t_frame)
            self.log.frames.append((t, seq, levels))
            out.append({"type": "frame", "t_us": t, "seq": seq, "intensity": list(levels)})
            self._t_frame += FRAME_PERIOD_US

    def feed_pose(self, t_us: int, x: float, y: float, z: float) -> list[dict]:
        """Advance engine time to a client pose; returns the outbound records."""
        if self.done:
            raise ValueError("trial already finished")
        if self._last_pose_us is not None and t_us < self._last_pose_us:
            raise PoseRegression(f"pose timestamp {t_us} < {self._last_pose_us}")
        self._last_pose_us = t_us
        out: list[dict] = []
        self._emit_frames_below(t_us, out)
        self.log.poses.append((t_us, x, y, z))
        if z > self.target.center.z:
            self._overshoot = True
        for ev in self.policy.step_xyz(x, y, z, t_us):
            self.log.events.append((ev.at_us, ev.cue.value, ev.kind.value))
            self.mixer.apply(ev)
            if ev.cue is CueId.SUCCESS:
                self._success_fired = True
            out.append({"type": "cue", "t_us": ev.at_us, "cue": ev.cue.value,
                        "kind": ev.kind.value})
        # Frame on the grid point equal to the pose time renders after it.
        self._emit_frames_below(t_us + 1, out)
        return out

    def declare(self, t_us: int) -> dict:
        """Operator declares alignment; finalizes the outcome."""
        return self._finish(t_us, "declared")

    def abort(self, t_us: int) -> dict:
        return self._finish(t_us, "aborted")

    def _finish(self, t_us: int, status: str) -> dict:
        if self.done:
            raise ValueError("trial already finished")
        self.done = True
        if self._last_pose_us is not None and t_us < self._last_pose_us:
            t_us = self._last_pose_us
        kind = "declare" if status == "declared" else "abort"
        self.log.percepts.append((t_us, kind, None, None))
        for ev in self.policy.finish(t_us):
            self.log.events.append((ev.at_us, ev.cue.value, ev.kind.value))
        if self.log.poses:
            _, x, y, z = self.log.poses[-1]
            c = self.target.center
            dx, dy, dz = c.x - x, c.y - y, c.z - z
            final_error = (dx * dx + dy * dy + dz * dz) ** 0.5
        else:
            final_error = float("nan")
        self.log.outcome = {
            "status": status,
            "final_error_mm": round(final_error, 4),
            "completion_time_s": round(t_us / 1e6, 4),
            "overshoot": self._overshoot,
            "success_cue_fired": self._success_fired,
            "t_us": t_us,
        }
        return self.log.outcome


class InteractiveCueIdEngine:
    """One human cue-identification session (50 trials, 10 per cue).

    The engine schedules the distractor and cue windows on its own clock;
    the caller advances trials and records keyed responses.
    """

    def __init__(
        self,
        session_seed: int,
        policy_cfg: PolicyConfig | None = None,
        codebook: Codebook | None = None,
    ):
        self.session_seed = session_seed
        self.policy_cfg = policy_cfg or PolicyConfig()
        self.codebook = codebook or default_codebook(self.policy_cfg)
        rng = Random(session_seed)
        order = [cue for cue in STUDY1_CUES for _ in range(10)]
        rng.shuffle(order)
        self.order = order
        self.index = 0
        self.logs: list[TrialLog] = []

    @property
    def done(self) -> bool:
        return self.index >= len(self.order)

    def begin_trial(self) -> tuple[TrialLog, list[dict]]:
        """Start the next trial: returns its log and the scheduled records."""
        if self.done:
            raise ValueError("session complete")
        cue = self.order[self.index]
        reps = sum(1 for c in self.order[: self.index] if c is cue)
        cfg = TrialConfig(
            protocol=Protocol.CUE_IDENTIFICATION,
            seed=derive_seed(self.session_seed, "cue-id", self.index),
            participant=0,
            repetition=reps,
            cue=cue,
        )
        log = TrialLog(config=cfg)
        log.provenance = {"mode": "interactive", "protocol": "cue-id",
                          "session_seed": self.session_seed, "trial_index": self.index}
        out: list[dict] = []
        onset = CUE_ID_DISTRACTOR_US
        end = onset + CUE_ID_WINDOW_US
        kind = EventKind.BURST if cue is CueId.SUCCESS else EventKind.START
        log.events.append((onset, cue.value, kind.value))
        out.append({"type": "cue", "t_us": onset, "cue": cue.value, "kind": kind.value})
        mixer = CueMixer(self.codebook)
        mixer.active[cue] = onset
        for t in range(0, end + 1, FRAME_PERIOD_US):
            at, seq, levels = mixer.frame_tuple(t)
            log.frames.append((at, seq, levels))
            out.append({"type": "frame", "t_us": at, "seq": seq, "intensity": list(levels)})
        if cue is not CueId.SUCCESS:
            log.events.append((end, cue.value, EventKind.STOP.value))
            out.append({"type": "cue", "t_us": end, "cue": cue.value,
                        "kind": EventKind.STOP.value})
        self.logs.append(log)
        return log, out

    def respond(self, response: CueId | None, rt_s: float | None) -> dict:
        """Record the keyed response (None = missed window) and close the trial."""
        if not self.logs or self.logs[-1].outcome:
            raise ValueError("no open trial")
        log = self.logs[-1]
        cue = log.config.cue
        onset = CUE_ID_DISTRACTOR_US
        if response is None:
            log.outcome = {
                "status": "no-response",
                "true_cue": cue.value,
                "response": None,
                "rt_s": None,
                "correct": False,
                "t_us": onset + CUE_ID_WINDOW_US,
            }
        else:
            rt = max(0.0, float(rt_s if rt_s is not None else 0.0))
            respond_at = onset + int(round(rt * 1e6))
            log.percepts.append((respond_at, "response", cue.value, response.value))
            log.outcome = {
                "status": "responded",
                "true_cue": cue.value,
                "response": response.value,
                "rt_s": round(rt, 4),
                "correct": response is cue,
                "t_us": max(onset + CUE_ID_WINDOW_US, respond_at),
            }
        self.index += 1
        return log.outcome
