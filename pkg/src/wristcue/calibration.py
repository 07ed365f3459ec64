"""Fit operator parameters to the reported study aggregates.

Coordinate-descent grid search: one pass per parameter over its candidate
values, keeping the value that minimizes a weighted squared relative
deviation from the targets across all three conditions. Deterministic for a
given seed; evaluations reuse the same simulated participant pool.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .harness import run_guidance_study
from .metrics import compute_metrics
from .operator import Condition, OperatorParams


@dataclass(frozen=True)
class Study2Targets:
    error_mean_mm: dict[Condition, float]
    error_sd_mm: dict[Condition, float]
    time_mean_s: dict[Condition, float]
    # None = not reported for that condition (AR-only overshoot).
    overshoot_rate: dict[Condition, float | None]


def reported_targets() -> Study2Targets:
    """The published per-condition aggregates the simulator is fitted to."""
    ar, ha, mm = Condition.AR_ONLY, Condition.HAPTIC_ONLY, Condition.MULTIMODAL
    return Study2Targets(
        error_mean_mm={ar: 8.4, ha: 7.5, mm: 5.8},
        error_sd_mm={ar: 2.1, ha: 2.0, mm: 1.6},
        time_mean_s={ar: 8.0, ha: 7.8, mm: 9.2},
        overshoot_rate={ar: None, ha: 0.27, mm: 0.09},
    )


DEFAULT_WEIGHTS = {"error_mean": 3.0, "error_sd": 1.0, "time_mean": 1.5, "overshoot": 1.0}


@dataclass(frozen=True)
class CalibrationResult:
    params: OperatorParams
    residual: float
    evaluations: int
    history: tuple[tuple[str, float, float], ...] = field(default=())  # (param, value, residual)


def simulate_aggregates(
    params: OperatorParams,
    seed: int,
    n_participants: int = 27,
) -> dict[Condition, dict[str, float]]:
    logs = run_guidance_study(n_participants, root_seed=seed, params=params,
                              collect_streams=False)
    summary = compute_metrics(logs)
    out: dict[Condition, dict[str, float]] = {}
    for cond, st in summary.guidance.items():
        out[cond] = {
            "error_mean": st.error_mean_mm,
            "error_sd": st.error_sd_mm,
            "time_mean": st.time_mean_s,
            "overshoot": st.overshoot_rate,
        }
    return out


def study2_aggregates_for_seed(seed: int, n_participants: int = 27) -> dict[str, dict[str, float]]:
    """Shipped-parameter aggregates for one root seed, keyed by condition value.

    Module-level and picklable: safe to fan out over a process pool.
    """
    sim = simulate_aggregates(OperatorParams(), seed, n_participants)
    return {cond.value: stats for cond, stats in sim.items()}


def residual_for(
    params: OperatorParams,
    targets: Study2Targets,
    seed: int,
    n_participants: int = 27,
    weights: dict[str, float] | None = None,
) -> float:
    """Weighted squared relative deviation of simulated vs target aggregates."""
    weights = weights or DEFAULT_WEIGHTS
    sim = simulate_aggregates(params, seed, n_participants)
    total = 0.0
    for cond in Condition:
        got = sim[cond]
        pairs = [
            ("error_mean", targets.error_mean_mm[cond]),
            ("error_sd", targets.error_sd_mm[cond]),
            ("time_mean", targets.time_mean_s[cond]),
            ("overshoot", targets.overshoot_rate[cond]),
        ]
        for key, want in pairs:
            if want is None:
                continue
            scale = want if want != 0 else 1.0
            total += weights[key] * ((got[key] - want) / scale) ** 2
    if not math.isfinite(total):
        raise ArithmeticError("non-finite calibration residual")
    return total


def calibrate(
    targets: Study2Targets,
    search_space: dict[str, list],
    seed: int,
    base_params: OperatorParams | None = None,
    n_participants: int = 27,
    weights: dict[str, float] | None = None,
) -> CalibrationResult:
    """Coordinate descent over the given parameter grid.

    Each entry of ``search_space`` maps an OperatorParams field name to the
    candidate values tried for it (the current value is always a candidate).
    """
    if not search_space:
        raise ValueError("empty search space")
    valid = {f.name for f in dataclasses.fields(OperatorParams)}
    unknown = set(search_space) - valid
    if unknown:
        raise ValueError(f"unknown parameters in search space: {sorted(unknown)}")

    params = base_params or OperatorParams()
    best = residual_for(params, targets, seed, n_participants, weights)
    evaluations = 1
    history: list[tuple[str, float, float]] = []
    for name in sorted(search_space):
        candidates = list(search_space[name])
        current = getattr(params, name)
        for value in candidates:
            if value == current:
                continue
            trial = dataclasses.replace(params, **{name: value})
            r = residual_for(trial, targets, seed, n_participants, weights)
            evaluations += 1
            if r < best:
                best = r
                params = trial
        history.append((name, getattr(params, name), best))
    return CalibrationResult(params=params, residual=best, evaluations=evaluations,
                             history=tuple(history))
