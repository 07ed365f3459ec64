"""Structured JSON config: policy, codebook, operator, and protocol sections.

Example document (all sections optional; omitted fields keep defaults):

    {
      "policy": {"axis_threshold_mm": 2.0, "hysteresis_mm": 0.25, "cued_axes": [0, 1]},
      "codebook": {
        "Left": {"repeat": true, "keyframes": [[200, [0,0,0,128,0,0]], [200, [0,0,0,0,0,0]]]}
      },
      "operator": {"control_gain": 0.74, "perceived_stop_tolerance_mm": {"ar": 1.2}},
      "protocol": {"timeout_ms": 30000}
    }

Codebook keyframes are [duration_ms, [six intensities 0-255]]; cues that are
not listed keep their default pattern.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

from .actuation import ActuationPattern, BandGeometry, Codebook, default_codebook
from .harness import default_guidance_policy_config
from .operator import Condition, ConfusionModel, OperatorParams
from .policy import CueId, PolicyConfig


class ConfigError(ValueError):
    """Unreadable or invalid configuration document."""


@dataclass(frozen=True)
class SessionConfig:
    policy: PolicyConfig
    codebook: Codebook
    operator: OperatorParams
    model: ConfusionModel | None
    timeout_ms: int
    raw: dict


def _build_policy(section: dict, base: PolicyConfig) -> PolicyConfig:
    known = {f.name for f in dataclasses.fields(PolicyConfig)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown policy fields: {sorted(unknown)}")
    merged = dataclasses.asdict(base)
    merged.update(section)
    merged["cued_axes"] = tuple(merged["cued_axes"])
    try:
        return PolicyConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad policy section: {exc}") from exc


def _build_codebook(section: dict, policy: PolicyConfig) -> Codebook:
    base = default_codebook(policy, BandGeometry())
    patterns = dict(base.patterns)
    for cue_name, spec in section.items():
        try:
            cue = CueId(cue_name)
        except ValueError as exc:
            raise ConfigError(f"unknown cue {cue_name!r} in codebook") from exc
        try:
            keyframes = tuple(
                (int(round(float(dur_ms) * 1000)), tuple(int(v) for v in levels))
                for dur_ms, levels in spec["keyframes"]
            )
            patterns[cue] = ActuationPattern(keyframes=keyframes, repeat=bool(spec["repeat"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad codebook pattern for {cue_name}: {exc}") from exc
    try:
        return Codebook(patterns)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_operator(section: dict, base: OperatorParams) -> OperatorParams:
    known = {f.name for f in dataclasses.fields(OperatorParams)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown operator fields: {sorted(unknown)}")
    merged = dataclasses.asdict(base)
    merged.update(section)
    tol = merged.get("perceived_stop_tolerance_mm")
    if isinstance(tol, dict):
        try:
            merged["perceived_stop_tolerance_mm"] = {
                Condition(k) if not isinstance(k, Condition) else k: float(v)
                for k, v in tol.items()
            }
        except ValueError as exc:
            raise ConfigError(f"bad stop tolerance keys: {exc}") from exc
        base_tol = dict(base.perceived_stop_tolerance_mm)
        base_tol.update(merged["perceived_stop_tolerance_mm"])
        merged["perceived_stop_tolerance_mm"] = base_tol
    try:
        return OperatorParams(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad operator section: {exc}") from exc


def _build_model(section: dict) -> ConfusionModel:
    from .logio import model_from_dict

    try:
        return model_from_dict(section)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad confusion model section: {exc}") from exc


def load_session_config(path: str | os.PathLike | None) -> SessionConfig:
    """Load a config file; None yields the shipped defaults."""
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - {"policy", "codebook", "operator", "protocol", "confusion_model"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    policy = _build_policy(raw.get("policy", {}), default_guidance_policy_config())
    codebook = _build_codebook(raw.get("codebook", {}), policy)
    operator = _build_operator(raw.get("operator", {}), OperatorParams())
    model = _build_model(raw["confusion_model"]) if "confusion_model" in raw else None
    protocol = raw.get("protocol", {})
    timeout_ms = int(protocol.get("timeout_ms", 30_000))
    if timeout_ms <= 0:
        raise ConfigError("protocol.timeout_ms must be positive")
    return SessionConfig(
        policy=policy,
        codebook=codebook,
        operator=operator,
        model=model,
        timeout_ms=timeout_ms,
        raw=raw,
    )
