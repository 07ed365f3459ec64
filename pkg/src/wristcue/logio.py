"""Trial log persistence: append-only JSON lines, one event per line.

Line order is ascending timestamp with a fixed stream priority at ties
(pose, cue, frame, percept), so a partially written file is still a valid
prefix of the trial. The header carries the trial config plus, for
simulated trials, the full provenance (policy, operator params, participant
profile) needed to re-execute the trial byte-identically.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

from .harness import Protocol, TrialConfig, TrialLog
from .operator import Condition, ConfusionModel, OperatorParams, ParticipantProfile
from .policy import CueId, PolicyConfig

LOG_VERSION = 1


class LogFormatError(ValueError):
    """Unreadable or incompatible trial-log file."""


def params_to_dict(params: OperatorParams) -> dict:
    d = dataclasses.asdict(params)
    d["perceived_stop_tolerance_mm"] = {
        c.value: v for c, v in sorted(
            params.perceived_stop_tolerance_mm.items(), key=lambda kv: kv[0].value)
    }
    return d


def params_from_dict(d: dict) -> OperatorParams:
    d = dict(d)
    tol = d.get("perceived_stop_tolerance_mm")
    if isinstance(tol, dict):
        d["perceived_stop_tolerance_mm"] = {Condition(k): float(v) for k, v in tol.items()}
    return OperatorParams(**d)


def policy_to_dict(cfg: PolicyConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["cued_axes"] = list(cfg.cued_axes)
    return d


def policy_from_dict(d: dict) -> PolicyConfig:
    d = dict(d)
    if "cued_axes" in d:
        d["cued_axes"] = tuple(d["cued_axes"])
    return PolicyConfig(**d)


def model_to_dict(model: ConfusionModel) -> dict:
    return {
        "rows": {
            t.value: {p.value: prob for p, prob in sorted(row.items(), key=lambda kv: kv[0].value)}
            for t, row in sorted(model.rows.items(), key=lambda kv: kv[0].value)
        },
        "rt_mean_s": model.rt_mean_s,
        "rt_sd_s": model.rt_sd_s,
    }


def model_from_dict(d: dict) -> ConfusionModel:
    rows = {
        CueId(t): {CueId(p): float(prob) for p, prob in row.items()}
        for t, row in d["rows"].items()
    }
    return ConfusionModel(rows=rows, rt_mean_s=float(d["rt_mean_s"]), rt_sd_s=float(d["rt_sd_s"]))


def config_to_dict(cfg: TrialConfig) -> dict:
    return {
        "protocol": cfg.protocol.value,
        "seed": cfg.seed,
        "participant": cfg.participant,
        "repetition": cfg.repetition,
        "condition": cfg.condition.value if cfg.condition else None,
        "depth_mm": cfg.depth_mm,
        "lateral_offset_mm": cfg.lateral_offset_mm,
        "cue": cfg.cue.value if cfg.cue else None,
        "timeout_ms": cfg.timeout_ms,
    }


def config_from_dict(d: dict) -> TrialConfig:
    return TrialConfig(
        protocol=Protocol(d["protocol"]),
        seed=int(d["seed"]),
        participant=int(d.get("participant", 0)),
        repetition=int(d.get("repetition", 0)),
        condition=Condition(d["condition"]) if d.get("condition") else None,
        depth_mm=d.get("depth_mm"),
        lateral_offset_mm=d.get("lateral_offset_mm"),
        cue=CueId(d["cue"]) if d.get("cue") else None,
        timeout_ms=int(d.get("timeout_ms", 30_000)),
    )


def profile_to_dict(profile: ParticipantProfile) -> dict:
    return dataclasses.asdict(profile)


def profile_from_dict(d: dict) -> ParticipantProfile:
    return ParticipantProfile(**d)


def dump_log_lines(log: TrialLog) -> list[str]:
    """Render one trial as its canonical line sequence."""
    header = {
        "k": "header",
        "v": LOG_VERSION,
        "config": config_to_dict(log.config),
        "frames_delivered": log.frames_delivered,
        "provenance": log.provenance,
    }
    lines = [json.dumps(header, separators=(",", ":"), sort_keys=False)]

    merged: list[tuple[int, int, str]] = []
    d = 1 if log.frames_delivered else 0
    # 3 decimals = 1 um resolution; fixed formatting keeps logs bit-stable.
    pose_fmt = '{"t":%d,"k":"pose","x":%.3f,"y":%.3f,"z":%.3f}'
    frame_fmt = '{"t":%d,"k":"frame","seq":%d,"i":[%d,%d,%d,%d,%d,%d],"d":%d}'
    for pose in log.poses:
        merged.append((pose[0], 0, pose_fmt % pose))
    for t, cue, kind in log.events:
        merged.append((t, 1, f'{{"t":{t},"k":"cue","cue":"{cue}","kind":"{kind}"}}'))
    for t, seq, levels in log.frames:
        merged.append((t, 2, frame_fmt % (t, seq, *levels, d)))
    for t, kind, cue, perceived in log.percepts:
        rec = {"t": t, "k": "percept", "kind": kind, "cue": cue, "perceived": perceived}
        merged.append((t, 3, json.dumps(rec, separators=(",", ":"))))
    merged.sort()
    lines.extend(row[2] for row in merged)

    outcome = {"k": "outcome", **log.outcome}
    lines.append(json.dumps(outcome, separators=(",", ":")))
    return lines


def save_log(log: TrialLog, path: str | os.PathLike) -> None:
    text = "\n".join(dump_log_lines(log)) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_log(path: str | os.PathLike) -> tuple[TrialLog, int]:
    """Read a trial log; returns (log, skipped_line_count).

    A truncated trailing line is tolerated: everything up to the last
    complete record loads, and the skipped count reports the damage.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise LogFormatError(f"{path}: empty file")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"{path}: unreadable header: {exc}") from exc
    if header.get("k") != "header":
        raise LogFormatError(f"{path}: first record is not a header")
    version = header.get("v")
    if version != LOG_VERSION:
        raise LogFormatError(f"{path}: log version {version} not supported (want {LOG_VERSION})")

    log = TrialLog(
        config=config_from_dict(header["config"]),
        frames_delivered=bool(header.get("frames_delivered", True)),
        provenance=header.get("provenance", {}),
    )
    skipped = 0
    for line in lines[1:]:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            skipped += 1
            continue
        kind = rec.get("k")
        if kind == "pose":
            log.poses.append((rec["t"], rec["x"], rec["y"], rec["z"]))
        elif kind == "cue":
            log.events.append((rec["t"], rec["cue"], rec["kind"]))
        elif kind == "frame":
            log.frames.append((rec["t"], rec["seq"], tuple(rec["i"])))
        elif kind == "percept":
            log.percepts.append((rec["t"], rec["kind"], rec.get("cue"), rec.get("perceived")))
        elif kind == "outcome":
            log.outcome = {key: v for key, v in rec.items() if key != "k"}
        else:
            skipped += 1
    return log, skipped
