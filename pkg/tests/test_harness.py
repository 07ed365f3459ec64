from collections import Counter

import pytest

from wristcue.geometry import FRAME_PERIOD_US
from wristcue.harness import (
    Protocol,
    TrialConfig,
    TrialLog,
    run_cue_id_session,
    run_cue_id_study,
    run_guidance_session,
    run_guidance_trial,
)
from wristcue.metrics import compute_metrics, trial_overshoot
from wristcue.operator import Condition, ConfusionModel, noiseless_params
from wristcue.policy import CueId, STUDY1_CUES


def identity_model():
    return ConfusionModel(rows={c: {c: 1.0} for c in STUDY1_CUES})


class TestCueIdSession:
    def test_fifty_trials_ten_per_cue(self):
        for seed in (0, 1, 99):
            logs = run_cue_id_session(seed)
            assert len(logs) == 50
            counts = Counter(log.config.cue for log in logs)
            assert all(counts[c] == 10 for c in STUDY1_CUES)

    def test_identity_model_perfect_accuracy(self):
        logs = run_cue_id_session(5, identity_model())
        summary = compute_metrics(logs).cue_id
        assert summary.overall_accuracy == 1.0
        for true, row in summary.confusion.items():
            assert sum(row.values()) == row[true] == 10

    def test_deterministic_order(self):
        a = [log.config.cue for log in run_cue_id_session(7)]
        b = [log.config.cue for log in run_cue_id_session(7)]
        c = [log.config.cue for log in run_cue_id_session(8)]
        assert a == b
        assert a != c

    def test_trial_structure(self):
        log = run_cue_id_session(3)[0]
        cue = log.config.cue
        onset_events = [e for e in log.events if e[0] == 2_000_000]
        assert onset_events and onset_events[0][1] == cue.value
        # 2 s distractor + 2 s cue window at 100 Hz, inclusive endpoint.
        assert len(log.frames) == 401
        assert log.outcome["rt_s"] >= 0.2

    def test_study_counts(self):
        logs = run_cue_id_study(3, root_seed=1)
        assert len(logs) == 150
        assert {log.config.participant for log in logs} == {0, 1, 2}


class TestGuidanceSession:
    def test_eighteen_trials_per_condition(self):
        logs = run_guidance_session(1, participant=0, collect_streams=False)
        assert len(logs) == 54
        by_cond = Counter(log.config.condition for log in logs)
        assert all(by_cond[c] == 18 for c in Condition)
        for cond in Condition:
            cells = Counter(
                (log.config.depth_mm, log.config.lateral_offset_mm)
                for log in logs
                if log.config.condition is cond
            )
            assert len(cells) == 6
            assert all(v == 3 for v in cells.values())

    def test_noiseless_fast_and_accurate(self):
        cfg = TrialConfig(protocol=Protocol.GUIDANCE, seed=2, condition=Condition.AR_ONLY,
                          depth_mm=300.0, lateral_offset_mm=-10.0)
        log = run_guidance_trial(cfg, noiseless_params())
        assert log.outcome["status"] == "declared"
        assert log.outcome["completion_time_s"] < 0.6 * cfg.timeout_ms / 1000
        assert log.outcome["final_error_mm"] < 1.0

    def test_replay_is_byte_stable(self):
        cfg = TrialConfig(protocol=Protocol.GUIDANCE, seed=11, condition=Condition.MULTIMODAL,
                          depth_mm=400.0, lateral_offset_mm=10.0)
        a = run_guidance_trial(cfg)
        b = run_guidance_trial(cfg)
        assert a.poses == b.poses
        assert a.events == b.events
        assert a.frames == b.frames
        assert a.percepts == b.percepts
        assert a.outcome == b.outcome

    def test_timeout_recorded_as_outcome(self):
        cfg = TrialConfig(protocol=Protocol.GUIDANCE, seed=3, condition=Condition.AR_ONLY,
                          depth_mm=400.0, lateral_offset_mm=10.0, timeout_ms=200)
        log = run_guidance_trial(cfg)
        assert log.outcome["status"] == "timeout"
        assert log.outcome["completion_time_s"] == pytest.approx(0.2)

    def test_frame_cadence_exact(self):
        cfg = TrialConfig(protocol=Protocol.GUIDANCE, seed=4, condition=Condition.HAPTIC_ONLY,
                          depth_mm=350.0, lateral_offset_mm=10.0)
        log = run_guidance_trial(cfg)
        times = [t for t, _, _ in log.frames]
        assert all(b - a == FRAME_PERIOD_US for a, b in zip(times, times[1:]))
        seqs = [s for _, s, _ in log.frames]
        assert all(b == (a + 1) % 256 for a, b in zip(seqs, seqs[1:]))

    def test_pose_cadence_exact(self):
        cfg = TrialConfig(protocol=Protocol.GUIDANCE, seed=4, condition=Condition.AR_ONLY,
                          depth_mm=300.0, lateral_offset_mm=-10.0)
        log = run_guidance_trial(cfg)
        times = [t for t, _, _, _ in log.poses]
        assert all(b - a == 8333 for a, b in zip(times, times[1:]))


class TestTrialConfigValidation:
    def test_guidance_requires_placement(self):
        with pytest.raises(ValueError):
            TrialConfig(protocol=Protocol.GUIDANCE, seed=1)

    def test_cue_id_rejects_guidance_fields(self):
        with pytest.raises(ValueError):
            TrialConfig(protocol=Protocol.CUE_IDENTIFICATION, seed=1, cue=CueId.LEFT,
                        depth_mm=300.0)

    def test_cue_id_requires_cue(self):
        with pytest.raises(ValueError):
            TrialConfig(protocol=Protocol.CUE_IDENTIFICATION, seed=1)

    def test_guidance_rejects_cue(self):
        with pytest.raises(ValueError):
            TrialConfig(protocol=Protocol.GUIDANCE, seed=1, condition=Condition.AR_ONLY,
                        depth_mm=300.0, lateral_offset_mm=10.0, cue=CueId.LEFT)


def guidance_stub(participant, condition, error, time_s=5.0, overshoot=False):
    cfg = TrialConfig(protocol=Protocol.GUIDANCE, seed=participant, participant=participant,
                      condition=condition, depth_mm=300.0, lateral_offset_mm=10.0)
    log = TrialLog(config=cfg)
    log.outcome = {"status": "declared", "final_error_mm": error,
                   "completion_time_s": time_s, "overshoot": overshoot}
    return log


class TestComputeMetrics:
    def test_three_trial_fixture(self):
        logs = [guidance_stub(p, Condition.AR_ONLY, e) for p, e in enumerate((3.0, 4.0, 5.0))]
        st = compute_metrics(logs).guidance[Condition.AR_ONLY]
        assert st.error_mean_mm == pytest.approx(4.0)
        assert st.error_sd_mm == pytest.approx(1.0)  # sample SD

    def test_single_perfect_trial(self):
        log = guidance_stub(0, Condition.MULTIMODAL, 0.0)
        st = compute_metrics([log]).guidance[Condition.MULTIMODAL]
        assert st.error_mean_mm == 0.0
        assert st.overshoot_rate == 0.0

    def test_overshoot_boundary_from_pose_stream(self):
        cfg = TrialConfig(protocol=Protocol.GUIDANCE, seed=0, condition=Condition.AR_ONLY,
                          depth_mm=300.0, lateral_offset_mm=10.0)
        log = TrialLog(config=cfg)
        log.poses = [(0, 0.0, 0.0, 200.0), (8333, 0.0, 0.0, 300.1)]
        log.outcome = {"status": "declared", "final_error_mm": 1.0, "completion_time_s": 1.0}
        assert trial_overshoot(log) is True
        log.poses[-1] = (8333, 0.0, 0.0, 300.0)
        assert trial_overshoot(log) is False

    def test_permutation_invariance(self):
        logs = [guidance_stub(p, c, float(p + 1), time_s=2.0 + p)
                for p in range(4) for c in Condition]
        a = compute_metrics(logs).as_dict()
        b = compute_metrics(list(reversed(logs))).as_dict()
        assert a == b

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics([])

    def test_mixed_protocols_rejected(self):
        cue_log = run_cue_id_session(1)[0]
        with pytest.raises(ValueError):
            compute_metrics([cue_log, guidance_stub(0, Condition.AR_ONLY, 1.0)])

    def test_anova_present_for_complete_design(self):
        logs = [guidance_stub(p, c, float(p) + {Condition.AR_ONLY: 8.0,
                                                Condition.HAPTIC_ONLY: 7.0,
                                                Condition.MULTIMODAL: 5.0}[c])
                for p in range(5) for c in Condition]
        summary = compute_metrics(logs)
        assert summary.anova_error is not None
        assert (summary.anova_error.df1, summary.anova_error.df2) == (2, 8)
        assert len(summary.pairwise_error) == 3
