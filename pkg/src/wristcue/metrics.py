"""Aggregate trial logs into the reported study metrics.

Guidance summaries report, per condition, the mean and spread of final
Euclidean error and completion time plus the overshoot rate. Mean and SD
are taken over participant means (the usual way repeated-measures results
are reported); with a single participant they fall back to trial-level
statistics. Cue-identification summaries report overall and per-cue
accuracy, response times, and the full confusion matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .harness import Protocol, TrialLog
from .operator import Condition
from .policy import STUDY1_CUES
from .stats import AnovaResult, PairedResult, paired_comparisons, rm_anova


@dataclass(frozen=True)
class ConditionStats:
    condition: Condition
    n_trials: int
    n_participants: int
    error_mean_mm: float
    error_sd_mm: float
    time_mean_s: float
    time_sd_s: float
    overshoot_rate: float
    timeout_rate: float

    def as_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "n_trials": self.n_trials,
            "n_participants": self.n_participants,
            "error_mean_mm": round(self.error_mean_mm, 4),
            "error_sd_mm": round(self.error_sd_mm, 4),
            "time_mean_s": round(self.time_mean_s, 4),
            "time_sd_s": round(self.time_sd_s, 4),
            "overshoot_rate": round(self.overshoot_rate, 4),
            "timeout_rate": round(self.timeout_rate, 4),
        }


@dataclass(frozen=True)
class CueIdStats:
    n_trials: int
    n_participants: int
    overall_accuracy: float
    per_cue_accuracy: dict[str, float]
    rt_mean_s: float
    rt_sd_s: float
    # confusion[true][perceived] = count; keys are cue names.
    confusion: dict[str, dict[str, int]]

    def as_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "n_participants": self.n_participants,
            "overall_accuracy": round(self.overall_accuracy, 4),
            "per_cue_accuracy": {k: round(v, 4) for k, v in self.per_cue_accuracy.items()},
            "rt_mean_s": round(self.rt_mean_s, 4),
            "rt_sd_s": round(self.rt_sd_s, 4),
            "confusion": self.confusion,
        }


@dataclass(frozen=True)
class StudySummary:
    protocol: Protocol
    guidance: dict[Condition, ConditionStats] = field(default_factory=dict)
    cue_id: CueIdStats | None = None
    anova_error: AnovaResult | None = None
    anova_time: AnovaResult | None = None
    pairwise_error: list[PairedResult] = field(default_factory=list)

    def as_dict(self) -> dict:
        out: dict = {"protocol": self.protocol.value}
        if self.guidance:
            out["guidance"] = {c.value: s.as_dict() for c, s in sorted(
                self.guidance.items(), key=lambda kv: kv[0].value)}
        if self.cue_id is not None:
            out["cue_id"] = self.cue_id.as_dict()
        if self.anova_error is not None:
            out["anova_error"] = self.anova_error.as_dict()
        if self.anova_time is not None:
            out["anova_time"] = self.anova_time.as_dict()
        if self.pairwise_error:
            out["pairwise_error"] = [r.as_dict() for r in self.pairwise_error]
        return out


def trial_overshoot(log: TrialLog) -> bool:
    """Did the tool ever cross beyond the target depth plane?"""
    if "overshoot" in log.outcome:
        return bool(log.outcome["overshoot"])
    target_z = log.config.depth_mm
    return any(z > target_z for _, _, _, z in log.poses)


def _participant_means(values_by_participant: dict[int, list[float]]) -> list[float]:
    return [float(np.mean(v)) for _, v in sorted(values_by_participant.items())]


def _mean_sd(per_participant: dict[int, list[float]]) -> tuple[float, float]:
    means = _participant_means(per_participant)
    if len(means) >= 2:
        return float(np.mean(means)), float(np.std(means, ddof=1))
    trials = [x for v in per_participant.values() for x in v]
    sd = float(np.std(trials, ddof=1)) if len(trials) >= 2 else 0.0
    return float(np.mean(trials)), sd


def compute_metrics(logs: list[TrialLog]) -> StudySummary:
    """Summarize a homogeneous batch of trial logs."""
    if not logs:
        raise ValueError("no trial logs given")
    protocols = {log.config.protocol for log in logs}
    if len(protocols) != 1:
        raise ValueError(f"mixed protocols in one batch: {sorted(p.value for p in protocols)}")
    protocol = protocols.pop()
    if protocol is Protocol.CUE_IDENTIFICATION:
        return _cue_id_metrics(logs)
    return _guidance_metrics(logs)


def _cue_id_metrics(logs: list[TrialLog]) -> StudySummary:
    names = [c.value for c in STUDY1_CUES]
    confusion: dict[str, dict[str, int]] = {t: {p: 0 for p in names} for t in names}
    rts: list[float] = []
    participants = set()
    correct = 0
    for log in logs:
        true = log.outcome["true_cue"]
        response = log.outcome["response"]
        confusion.setdefault(true, {}).setdefault(response, 0)
        confusion[true][response] += 1
        rts.append(float(log.outcome["rt_s"]))
        correct += bool(log.outcome["correct"])
        participants.add(log.config.participant)
    per_cue = {}
    for true, row in confusion.items():
        total = sum(row.values())
        per_cue[true] = row.get(true, 0) / total if total else math.nan
    stats = CueIdStats(
        n_trials=len(logs),
        n_participants=len(participants),
        overall_accuracy=correct / len(logs),
        per_cue_accuracy=per_cue,
        rt_mean_s=float(np.mean(rts)),
        rt_sd_s=float(np.std(rts, ddof=1)) if len(rts) >= 2 else 0.0,
        confusion=confusion,
    )
    return StudySummary(protocol=Protocol.CUE_IDENTIFICATION, cue_id=stats)


def _guidance_metrics(logs: list[TrialLog]) -> StudySummary:
    by_condition: dict[Condition, dict[str, dict[int, list[float]]]] = {}
    overshoots: dict[Condition, list[bool]] = {}
    timeouts: dict[Condition, list[bool]] = {}
    for log in logs:
        cond = log.config.condition
        slot = by_condition.setdefault(cond, {"error": {}, "time": {}})
        pid = log.config.participant
        slot["error"].setdefault(pid, []).append(float(log.outcome["final_error_mm"]))
        slot["time"].setdefault(pid, []).append(float(log.outcome["completion_time_s"]))
        overshoots.setdefault(cond, []).append(trial_overshoot(log))
        timeouts.setdefault(cond, []).append(log.outcome.get("status") == "timeout")

    guidance: dict[Condition, ConditionStats] = {}
    for cond, slot in by_condition.items():
        err_mean, err_sd = _mean_sd(slot["error"])
        t_mean, t_sd = _mean_sd(slot["time"])
        n_trials = sum(len(v) for v in slot["error"].values())
        guidance[cond] = ConditionStats(
            condition=cond,
            n_trials=n_trials,
            n_participants=len(slot["error"]),
            error_mean_mm=err_mean,
            error_sd_mm=err_sd,
            time_mean_s=t_mean,
            time_sd_s=t_sd,
            overshoot_rate=float(np.mean(overshoots[cond])),
            timeout_rate=float(np.mean(timeouts[cond])),
        )

    anova_error = anova_time = None
    pairwise: list[PairedResult] = []
    conditions = sorted(by_condition, key=lambda c: c.value)
    participants = sorted({pid for slot in by_condition.values() for pid in slot["error"]})
    if len(conditions) >= 2 and len(participants) >= 2:
        complete = all(
            pid in by_condition[c]["error"] for c in conditions for pid in participants
        )
        if complete:
            err_matrix = np.array(
                [[np.mean(by_condition[c]["error"][pid]) for c in conditions]
                 for pid in participants]
            )
            time_matrix = np.array(
                [[np.mean(by_condition[c]["time"][pid]) for c in conditions]
                 for pid in participants]
            )
            anova_error = rm_anova(err_matrix)
            anova_time = rm_anova(time_matrix)
            pairwise = paired_comparisons(err_matrix, correction="bonferroni")

    return StudySummary(
        protocol=Protocol.GUIDANCE,
        guidance=guidance,
        anova_error=anova_error,
        anova_time=anova_time,
        pairwise_error=pairwise,
    )


def condition_order(summary: StudySummary) -> list[Condition]:
    """Conditions present, in canonical value order."""
    return sorted(summary.guidance, key=lambda c: c.value)
