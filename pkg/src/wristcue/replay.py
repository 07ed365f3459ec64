"""Re-execute recorded trials and verify byte-identity.

Simulated trials re-run from the provenance captured in the header
(operator params, participant profile, policy, confusion model). Interactive
trials re-derive every engine-owned stream (cues, frames, outcome) from the
recorded inputs (poses, responses, declaration) through the same engine the
live service used.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .harness import Protocol, TrialLog, run_cue_id_session, run_guidance_trial
from .interactive import InteractiveCueIdEngine, InteractiveGuidanceEngine
from .logio import (
    dump_log_lines,
    load_log,
    model_from_dict,
    params_from_dict,
    policy_from_dict,
    profile_from_dict,
)
from .policy import CueId


@dataclass(frozen=True)
class ReplayResult:
    path: str
    ok: bool
    reason: str = ""


def regenerate(log: TrialLog) -> TrialLog:
    """Produce a fresh TrialLog equivalent to the recorded one."""
    prov = log.provenance or {}
    mode = prov.get("mode", "simulated")
    if mode == "interactive":
        return _regenerate_interactive(log, prov)
    protocol = log.config.protocol
    if protocol is Protocol.GUIDANCE:
        fresh = run_guidance_trial(
            log.config,
            params=params_from_dict(prov["params"]),
            policy_cfg=policy_from_dict(prov["policy"]),
            profile=profile_from_dict(prov["profile"]),
            model=model_from_dict(prov["model"]),
        )
    else:
        session = run_cue_id_session(
            prov["participant_seed"],
            model=model_from_dict(prov["model"]),
            participant=log.config.participant,
        )
        fresh = session[prov["trial_index"]]
    # Provenance is input context, not derived data: carry it over verbatim.
    fresh.provenance = log.provenance
    return fresh


def _regenerate_interactive(log: TrialLog, prov: dict) -> TrialLog:
    if prov.get("protocol") == "cue-id":
        engine = InteractiveCueIdEngine(prov["session_seed"])
        engine.index = prov["trial_index"]
        fresh_log, _ = engine.begin_trial()
        response = log.outcome.get("response")
        rt = log.outcome.get("rt_s")
        engine.respond(CueId(response) if response else None, rt)
        fresh_log.provenance = log.provenance
        return fresh_log

    engine = InteractiveGuidanceEngine(
        log.config,
        policy_from_dict(prov["policy"]) if "policy" in prov else _default_policy(),
        frames_delivered=log.frames_delivered,
    )
    engine.log.provenance = log.provenance
    for t, x, y, z in log.poses:
        engine.feed_pose(t, x, y, z)
    status = log.outcome.get("status", "aborted")
    end_us = int(log.outcome.get("t_us", log.poses[-1][0] if log.poses else 0))
    if status == "declared":
        engine.declare(end_us)
    else:
        engine.abort(end_us)
    return engine.log


def _default_policy():
    from .harness import default_guidance_policy_config

    return default_guidance_policy_config()


def replay_file(path: str | os.PathLike) -> ReplayResult:
    """Re-execute one log and compare bytes."""
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            original = fh.read()
        log, skipped = load_log(path)
        if skipped:
            return ReplayResult(path, False, f"{skipped} unreadable line(s)")
        fresh = regenerate(log)
        regenerated = ("\n".join(dump_log_lines(fresh)) + "\n").encode()
    except Exception as exc:  # surfaced as a failed verification, not a crash
        return ReplayResult(path, False, f"{type(exc).__name__}: {exc}")
    if regenerated != original:
        return ReplayResult(path, False, "regenerated bytes differ")
    return ReplayResult(path, True)


def replay_paths(paths: list[str]) -> list[ReplayResult]:
    """Replay files and/or directories (every *.jsonl inside, recursively)."""
    results: list[ReplayResult] = []
    for p in paths:
        if os.path.isdir(p):
            for root, _dirs, files in os.walk(p):
                for name in sorted(files):
                    if name.endswith(".jsonl"):
                        results.append(replay_file(os.path.join(root, name)))
        else:
            results.append(replay_file(p))
    return results
