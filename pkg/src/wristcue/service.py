"""Live session service: one WebSocket client drives one session.

Interactive mode: the client streams tool poses (monotone engine-time
microseconds); the service runs the cue policy and frame mixer, pushes cue
events and 100 Hz command frames back, persists everything as a trial log,
and reports metrics on completion. Simulated mode streams the same message
shapes for a simulated operator, for observation.

Wire messages are JSON objects with a ``type`` field: ``control``, ``pose``,
``frame``, ``cue``, ``trial_state``, ``warning``, ``error``.
"""

from __future__ import annotations

import asyncio
import json
import os
import re

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .configio import SessionConfig, load_session_config
from .harness import Protocol, TrialConfig, derive_seed
from .interactive import InteractiveCueIdEngine, InteractiveGuidanceEngine, PoseRegression
from .logio import save_log
from .metrics import compute_metrics
from .operator import Condition
from .policy import CueId
from .runner import trial_filename

_SESSION_ID_RE = re.compile(r"[^A-Za-z0-9_.-]")


def _safe_session_id(raw: str) -> str:
    return _SESSION_ID_RE.sub("_", raw)[:64] or "session"


class SessionError(Exception):
    """Protocol violation that aborts the session."""


def create_app(out_dir: str = "out/interactive", session: SessionConfig | None = None) -> FastAPI:
    session = session or load_session_config(None)
    app = FastAPI(title="wristcue session service")
    app.state.out_dir = out_dir
    app.state.session_cfg = session

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        handler = SessionHandler(ws, app.state.session_cfg, app.state.out_dir)
        try:
            await handler.run()
        except WebSocketDisconnect:
            handler.on_disconnect()
        except SessionError as exc:
            try:
                await ws.send_text(json.dumps({"type": "error", "message": str(exc)}))
                await ws.close()
            except Exception:
                pass

    return app


class SessionHandler:
    def __init__(self, ws: WebSocket, session: SessionConfig, out_dir: str):
        self.ws = ws
        self.session = session
        self.out_dir = out_dir
        self.session_id = "session"
        self.guidance: InteractiveGuidanceEngine | None = None
        self.cue_id: InteractiveCueIdEngine | None = None
        self.trial_index = 0
        self.pace = True
        self.started = False

    async def send(self, payload: dict) -> None:
        payload["session"] = self.session_id
        await self.ws.send_text(json.dumps(payload, separators=(",", ":")))

    async def run(self) -> None:
        while True:
            raw = await self.ws.receive_text()
            try:
                msg = json.loads(raw)
                if not isinstance(msg, dict) or "type" not in msg:
                    raise ValueError("message must be an object with a 'type'")
            except (json.JSONDecodeError, ValueError) as exc:
                raise SessionError(f"malformed message: {exc}") from exc
            mtype = msg["type"]
            if mtype == "control":
                done = await self.on_control(msg)
                if done:
                    return
            elif mtype == "pose":
                await self.on_pose(msg)
            else:
                raise SessionError(f"unexpected message type {mtype!r}")

    async def on_control(self, msg: dict) -> bool:
        action = msg.get("action")
        if action == "start":
            await self.on_start(msg)
            return False
        if action == "declare":
            await self.on_declare(msg)
            return True
        if action == "abort":
            await self.on_abort(msg)
            return True
        if action == "respond":
            await self.on_respond(msg)
            return False
        if action == "next":
            await self.begin_cue_id_trial()
            return False
        raise SessionError(f"unknown control action {action!r}")

    async def on_start(self, msg: dict) -> None:
        if self.started:
            raise SessionError("session already started")
        self.started = True
        self.session_id = _safe_session_id(str(msg.get("session", "session")))
        self.pace = bool(msg.get("pace", True))
        protocol = msg.get("protocol", "guidance")
        mode = msg.get("mode", "interactive")
        seed = int(msg.get("seed", 0))
        if protocol == "guidance":
            condition = Condition(msg.get("condition", "multi"))
            cfg = TrialConfig(
                protocol=Protocol.GUIDANCE,
                seed=seed,
                participant=int(msg.get("participant", 0)),
                condition=condition,
                depth_mm=float(msg.get("depth_mm", 350.0)),
                lateral_offset_mm=float(msg.get("lateral_offset_mm", 10.0)),
                timeout_ms=self.session.timeout_ms,
            )
            if mode == "simulated":
                await self.stream_simulated_guidance(cfg)
                return
            delivered = condition is not Condition.AR_ONLY
            self.guidance = InteractiveGuidanceEngine(
                cfg, self.session.policy, self.session.codebook,
                frames_delivered=delivered,
            )
            target = self.guidance.target
            await self.send({
                "type": "trial_state",
                "phase": "running",
                "t_us": 0,
                "protocol": "guidance",
                "condition": condition.value,
                "target": {
                    "x": target.center.x, "y": target.center.y, "z": target.center.z,
                    "visual_radius": target.visual_radius,
                    "tolerance_radius": target.tolerance_radius,
                },
                "band": {"motor_angles_deg": [0, 60, 120, 180, 240, 300]},
                "frames_delivered": delivered,
            })
        elif protocol == "cue-id":
            self.cue_id = InteractiveCueIdEngine(
                seed, self.session.policy, self.session.codebook
            )
            await self.send({
                "type": "trial_state", "phase": "ready", "t_us": 0,
                "protocol": "cue-id", "trials": len(self.cue_id.order),
                "band": {"motor_angles_deg": [0, 60, 120, 180, 240, 300]},
            })
            await self.begin_cue_id_trial()
        else:
            raise SessionError(f"unknown protocol {protocol!r}")

    async def on_pose(self, msg: dict) -> None:
        if self.guidance is None or self.guidance.done:
            raise SessionError("pose outside a running guidance trial")
        try:
            t_us = int(msg["t_us"])
            x, y, z = float(msg["x"]), float(msg["y"]), float(msg["z"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SessionError(f"malformed pose: {exc}") from exc
        try:
            out = self.guidance.feed_pose(t_us, x, y, z)
        except PoseRegression as exc:
            # Rejected message; the session continues.
            await self.send({"type": "warning", "message": str(exc)})
            return
        for record in out:
            await self.send(record)

    async def on_declare(self, msg: dict) -> None:
        if self.guidance is None or self.guidance.done:
            raise SessionError("declare outside a running guidance trial")
        t_us = int(msg.get("t_us", self.guidance.log.poses[-1][0] if self.guidance.log.poses else 0))
        self.guidance.declare(t_us)
        await self.finish_guidance()

    async def on_abort(self, msg: dict) -> None:
        if self.guidance is not None and not self.guidance.done:
            t_us = int(msg.get("t_us", 0))
            self.guidance.abort(t_us)
            await self.finish_guidance(aborted=True)

    def _session_dir(self) -> str:
        path = os.path.join(self.out_dir, self.session_id)
        os.makedirs(path, exist_ok=True)
        return path

    async def finish_guidance(self, aborted: bool = False) -> None:
        engine = self.guidance
        path = os.path.join(self._session_dir(), trial_filename(self.trial_index))
        save_log(engine.log, path)
        self.trial_index += 1
        metrics = compute_metrics([engine.log]).as_dict()
        await self.send({
            "type": "trial_state",
            "phase": "aborted" if aborted else "done",
            "t_us": engine.log.outcome["t_us"],
            "outcome": engine.log.outcome,
            "metrics": metrics,
            "log_path": path,
        })

    async def begin_cue_id_trial(self) -> None:
        if self.cue_id is None:
            raise SessionError("no cue-id session running")
        if self.cue_id.done:
            raise SessionError("cue-id session already complete")
        log, records = self.cue_id.begin_trial()
        await self.send({
            "type": "trial_state", "phase": "distractor", "t_us": 0,
            "trial": self.cue_id.index, "total": len(self.cue_id.order),
        })
        for record in records:
            if self.pace:
                await asyncio.sleep(0.01)
            await self.send(record)
        await self.send({
            "type": "trial_state", "phase": "respond",
            "t_us": log.events[-1][0],
            "trial": self.cue_id.index,
        })

    async def on_respond(self, msg: dict) -> None:
        if self.cue_id is None:
            raise SessionError("respond outside a cue-id session")
        raw_cue = msg.get("cue")
        try:
            cue = CueId(raw_cue) if raw_cue is not None else None
        except ValueError as exc:
            raise SessionError(f"unknown cue {raw_cue!r}") from exc
        rt_s = msg.get("rt_s")
        outcome = self.cue_id.respond(cue, rt_s)
        log = self.cue_id.logs[-1]
        path = os.path.join(self._session_dir(), trial_filename(self.trial_index))
        save_log(log, path)
        self.trial_index += 1
        payload = {
            "type": "trial_state",
            "phase": "trial-done",
            "t_us": outcome["t_us"],
            "outcome": outcome,
            "log_path": path,
        }
        if self.cue_id.done:
            payload["phase"] = "session-done"
            payload["metrics"] = compute_metrics(self.cue_id.logs).as_dict()
        await self.send(payload)

    async def stream_simulated_guidance(self, cfg: TrialConfig) -> None:
        from .harness import run_guidance_trial
        from .logio import (
            model_to_dict, params_to_dict, policy_to_dict, profile_to_dict,
        )
        from .operator import draw_participant, guidance_confusion_model
        from random import Random

        params = self.session.operator
        prng = Random(derive_seed(cfg.seed, "participant", cfg.participant))
        profile = draw_participant(params, prng)
        model = self.session.model or guidance_confusion_model()
        log = run_guidance_trial(cfg, params, self.session.policy, profile=profile,
                                 model=model, codebook=self.session.codebook)
        log.provenance = {
            "mode": "simulated",
            "params": params_to_dict(params),
            "policy": policy_to_dict(self.session.policy),
            "profile": profile_to_dict(profile),
            "model": model_to_dict(model),
        }
        target = cfg.target(self.session.policy.tolerance_radius_mm)
        await self.send({
            "type": "trial_state", "phase": "running", "t_us": 0,
            "protocol": "guidance", "mode": "simulated",
            "condition": cfg.condition.value,
            "target": {"x": target.center.x, "y": target.center.y, "z": target.center.z,
                       "visual_radius": target.visual_radius,
                       "tolerance_radius": target.tolerance_radius},
        })
        merged: list[tuple[int, int, dict]] = []
        for t, x, y, z in log.poses:
            merged.append((t, 0, {"type": "pose", "t_us": t, "x": x, "y": y, "z": z}))
        for t, cue, kind in log.events:
            merged.append((t, 1, {"type": "cue", "t_us": t, "cue": cue, "kind": kind}))
        for t, seq, levels in log.frames:
            merged.append((t, 2, {"type": "frame", "t_us": t, "seq": seq,
                                  "intensity": list(levels)}))
        merged.sort(key=lambda row: (row[0], row[1]))
        for _, _, record in merged:
            await self.send(record)
        path = os.path.join(self._session_dir(), trial_filename(self.trial_index))
        save_log(log, path)
        self.trial_index += 1
        await self.send({
            "type": "trial_state", "phase": "done", "t_us": log.outcome["t_us"],
            "outcome": log.outcome,
            "metrics": compute_metrics([log]).as_dict(),
            "log_path": path,
        })

    def on_disconnect(self) -> None:
        # Mid-trial disconnect: preserve the partial trial as aborted.
        if self.guidance is not None and not self.guidance.done:
            last_t = self.guidance.log.poses[-1][0] if self.guidance.log.poses else 0
            self.guidance.abort(last_t)
            path = os.path.join(self._session_dir(), trial_filename(self.trial_index))
            save_log(self.guidance.log, path)
            self.trial_index += 1
