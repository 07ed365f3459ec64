"""Run studies and persist their logs with full replay provenance."""

from __future__ import annotations

import os
from random import Random

from .configio import SessionConfig, load_session_config
from .harness import (
    Protocol,
    TrialConfig,
    TrialLog,
    derive_seed,
    draw_participant,
    guidance_trial_plan,
    run_cue_id_session,
    run_guidance_trial,
)
from .logio import (
    config_to_dict,
    model_to_dict,
    params_to_dict,
    policy_to_dict,
    profile_to_dict,
    save_log,
)
from .operator import Condition, default_confusion_model, guidance_confusion_model


def trial_filename(index: int) -> str:
    return f"trial_{index:05d}.jsonl"


def write_guidance_session(
    out_dir: str,
    root_seed: int,
    participant: int,
    conditions: tuple[Condition, ...],
    session: SessionConfig,
    device_sink=None,
) -> list[tuple[dict, dict]]:
    """Simulate and persist one participant's guidance sessions.

    Returns (config, outcome) dicts per trial for summary aggregation.
    File indices are deterministic in (participant, condition, trial) order.
    """
    params = session.operator
    policy_cfg = session.policy
    model = session.model or guidance_confusion_model()
    prng = Random(derive_seed(root_seed, "participant", participant))
    profile = draw_participant(params, prng)
    provenance = {
        "mode": "simulated",
        "params": params_to_dict(params),
        "policy": policy_to_dict(policy_cfg),
        "profile": profile_to_dict(profile),
        "model": model_to_dict(model),
    }
    trials_per_condition = 18
    records: list[tuple[dict, dict]] = []
    for c_index, condition in enumerate(conditions):
        plan = guidance_trial_plan(participant, prng)
        reps: dict[tuple[float, float], int] = {}
        for t_index, (depth, offset) in enumerate(plan):
            rep = reps.get((depth, offset), 0)
            reps[(depth, offset)] = rep + 1
            cfg = TrialConfig(
                protocol=Protocol.GUIDANCE,
                seed=derive_seed(root_seed, participant, condition.value, t_index),
                participant=participant,
                repetition=rep,
                condition=condition,
                depth_mm=depth,
                lateral_offset_mm=offset,
                timeout_ms=session.timeout_ms,
            )
            log = run_guidance_trial(
                cfg, params, policy_cfg, profile=profile, model=model,
                codebook=session.codebook,
            )
            log.provenance = provenance
            index = (participant * len(conditions) + c_index) * trials_per_condition + t_index
            save_log(log, os.path.join(out_dir, trial_filename(index)))
            if device_sink is not None:
                _sink_frames(log, device_sink)
            records.append((config_to_dict(cfg), dict(log.outcome)))
    return records


def write_cue_id_session(
    out_dir: str,
    root_seed: int,
    participant: int,
    session: SessionConfig,
) -> list[tuple[dict, dict]]:
    model = session.model or default_confusion_model()
    participant_seed = derive_seed(root_seed, "cue-id-participant", participant)
    logs = run_cue_id_session(
        participant_seed, model, participant=participant,
        policy_cfg=session.policy, codebook=session.codebook,
    )
    model_dict = model_to_dict(model)
    records: list[tuple[dict, dict]] = []
    for i, log in enumerate(logs):
        log.provenance = {
            "mode": "simulated",
            "participant_seed": participant_seed,
            "trial_index": i,
            "model": model_dict,
        }
        index = participant * len(logs) + i
        save_log(log, os.path.join(out_dir, trial_filename(index)))
        records.append((config_to_dict(log.config), dict(log.outcome)))
    return records


def _sink_frames(log: TrialLog, sink) -> None:
    from .actuation import MotorFrame, encode_frame

    for t, seq, levels in log.frames:
        sink.write(encode_frame(MotorFrame(t, tuple(levels), seq)))


def _guidance_worker(args: tuple) -> list[tuple[dict, dict]]:
    out_dir, root_seed, participant, condition_values, config_path = args
    session = load_session_config(config_path)
    conditions = tuple(Condition(v) for v in condition_values)
    return write_guidance_session(out_dir, root_seed, participant, conditions, session)


def _cue_id_worker(args: tuple) -> list[tuple[dict, dict]]:
    out_dir, root_seed, participant, config_path = args
    session = load_session_config(config_path)
    return write_cue_id_session(out_dir, root_seed, participant, session)


def stub_logs(records: list[tuple[dict, dict]]) -> list[TrialLog]:
    """Rebuild just enough of each trial for metric aggregation."""
    from .logio import config_from_dict

    logs = []
    for config_dict, outcome in records:
        log = TrialLog(config=config_from_dict(config_dict))
        log.outcome = outcome
        logs.append(log)
    return logs


def run_parallel(worker, jobs: list[tuple], workers: int) -> list[list[tuple[dict, dict]]]:
    """Run session jobs, in-process when workers <= 1."""
    if workers <= 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))
