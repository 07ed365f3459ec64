import json

import pytest
from fastapi.testclient import TestClient

from wristcue.configio import load_session_config
from wristcue.metrics import compute_metrics
from wristcue.logio import load_log
from wristcue.replay import replay_file
from wristcue.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(out_dir=str(tmp_path / "sessions"), session=load_session_config(None))
    with TestClient(app) as c:
        yield c


def start_guidance(ws, session="s1", condition="multi", depth=350.0, lateral=10.0):
    ws.send_text(json.dumps({
        "type": "control", "action": "start", "session": session,
        "protocol": "guidance", "mode": "interactive",
        "condition": condition, "depth_mm": depth, "lateral_offset_mm": lateral,
    }))
    state = json.loads(ws.receive_text())
    assert state["type"] == "trial_state" and state["phase"] == "running"
    return state


def collect_until_done(ws, limit=500_000, phases=("done", "aborted")):
    got = []
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        got.append(msg)
        if msg["type"] == "trial_state" and msg.get("phase") in phases:
            return got
    raise AssertionError("trial never finished")


def drive_trial(ws, poses, end_action="declare"):
    """Send every pose, then end the trial, then drain the full stream."""
    t = 0
    for x, y, z in poses:
        ws.send_text(json.dumps({"type": "pose", "t_us": t, "x": x, "y": y, "z": z}))
        t += 8333
    ws.send_text(json.dumps({"type": "control", "action": end_action, "t_us": t}))
    return collect_until_done(ws)


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_dwell_fires_success_exactly_once(client):
    with client.websocket_connect("/ws") as ws:
        state = start_guidance(ws)
        tgt = state["target"]
        poses = [(tgt["x"], tgt["y"], tgt["z"])] * 120  # 1 s at the center
        msgs = drive_trial(ws, poses)
        successes = [m for m in msgs if m["type"] == "cue" and m["cue"] == "Success"]
        assert len(successes) == 1
        assert successes[0]["kind"] == "burst"
        done = msgs[-1]
        assert done["outcome"]["success_cue_fired"] is True
        assert done["outcome"]["final_error_mm"] == 0.0


def test_frame_rate_is_100hz(client):
    with client.websocket_connect("/ws") as ws:
        start_guidance(ws, session="s2", condition="ar")
        poses = [(50.0, 0.0, 250.0)] * 121  # one second of 120 Hz input
        msgs = drive_trial(ws, poses, end_action="abort")
        frames = [m for m in msgs if m["type"] == "frame" and m["t_us"] <= 1_000_000]
        assert abs(len(frames) - 100) <= 1
        times = [f["t_us"] for f in frames]
        assert all(b - a == 10_000 for a, b in zip(times, times[1:]))


def test_pose_regression_rejected_session_continues(client):
    with client.websocket_connect("/ws") as ws:
        start_guidance(ws, session="s3")
        for t_us in (20_000, 10_000, 30_000):
            ws.send_text(json.dumps({"type": "pose", "t_us": t_us,
                                     "x": 0.0, "y": 0.0, "z": 200.0}))
        ws.send_text(json.dumps({"type": "control", "action": "abort", "t_us": 40_000}))
        msgs = collect_until_done(ws)
        warnings = [m for m in msgs if m["type"] == "warning"]
        assert len(warnings) == 1
        pose_frames = [m["t_us"] for m in msgs if m["type"] == "frame"]
        assert 20_000 in pose_frames and 30_000 in pose_frames


def test_malformed_message_aborts_session(client):
    with client.websocket_connect("/ws") as ws:
        start_guidance(ws, session="s4")
        ws.send_text("this is not json")
        msg = json.loads(ws.receive_text())
        assert msg["type"] == "error"


def test_live_metrics_match_persisted_log(client):
    with client.websocket_connect("/ws") as ws:
        start_guidance(ws, session="s5", condition="haptic")
        poses = []
        x, z = 0.0, 200.0
        for _ in range(150):
            x += (10.0 - x) * 0.05
            z += (350.0 - z) * 0.05
            poses.append((round(x, 3), 0.0, round(z, 3)))
        msgs = drive_trial(ws, poses)
        done = msgs[-1]
    log_path = done["log_path"]
    loaded, skipped = load_log(log_path)
    assert skipped == 0
    recomputed = compute_metrics([loaded]).as_dict()
    assert recomputed == done["metrics"]
    result = replay_file(log_path)
    assert result.ok, result.reason


def test_declared_error_matches_cursor_offset(client):
    # Declaring at a known offset reports exactly that offset.
    with client.websocket_connect("/ws") as ws:
        state = start_guidance(ws, session="s6", condition="multi")
        tgt = state["target"]
        poses = [(tgt["x"] - 3.0, tgt["y"], tgt["z"] - 4.0)] * 30
        msgs = drive_trial(ws, poses)
        assert msgs[-1]["outcome"]["final_error_mm"] == pytest.approx(5.0)


def test_simulated_mode_streams_and_persists(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({
            "type": "control", "action": "start", "session": "sim1",
            "protocol": "guidance", "mode": "simulated", "condition": "ar",
            "seed": 42, "depth_mm": 300.0, "lateral_offset_mm": -10.0,
        }))
        msgs = collect_until_done(ws)
    done = msgs[-1]
    assert done["outcome"]["status"] in ("declared", "timeout")
    kinds = {m["type"] for m in msgs}
    assert {"trial_state", "pose", "frame"} <= kinds
    result = replay_file(done["log_path"])
    assert result.ok, result.reason


def test_cue_id_interactive_three_trials(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_text(json.dumps({
            "type": "control", "action": "start", "session": "cid",
            "protocol": "cue-id", "seed": 5, "pace": False,
        }))
        ready = json.loads(ws.receive_text())
        assert ready["phase"] == "ready" and ready["trials"] == 50
        for k in range(3):
            msgs = []
            while True:
                msg = json.loads(ws.receive_text())
                msgs.append(msg)
                if msg["type"] == "trial_state" and msg.get("phase") == "respond":
                    break
            cues = [m for m in msgs if m["type"] == "cue"]
            assert cues and cues[0]["t_us"] == 2_000_000
            frames = [m for m in msgs if m["type"] == "frame"]
            assert len(frames) == 401
            ws.send_text(json.dumps({"type": "control", "action": "respond",
                                     "cue": "Left", "rt_s": 1.1}))
            outcome = None
            while outcome is None:
                msg = json.loads(ws.receive_text())
                if msg["type"] == "trial_state" and msg.get("phase") in ("trial-done",
                                                                         "session-done"):
                    outcome = msg
            assert outcome["outcome"]["rt_s"] == 1.1
            assert replay_file(outcome["log_path"]).ok
            if k < 2:
                ws.send_text(json.dumps({"type": "control", "action": "next"}))
