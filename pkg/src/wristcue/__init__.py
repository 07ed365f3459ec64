"""Wrist-worn vibrotactile guidance engine and study platform."""

from .geometry import (
    AxisError,
    Clock,
    FRAME_PERIOD_US,
    POSE_PERIOD_US,
    TargetSpec,
    Vec3,
    axis_error,
    euclidean_error,
    periodic_schedule,
)
from .policy import (
    CueEvent,
    CueId,
    DwellState,
    EventKind,
    GuidancePolicy,
    PolicyConfig,
    PolicyState,
    STUDY1_CUES,
    policy_step,
    select_directional_cues,
    update_dwell,
)
from .actuation import (
    ActuationPattern,
    BadChecksum,
    BadLength,
    BadSync,
    BandGeometry,
    Codebook,
    CueMixer,
    FrameError,
    MotorFrame,
    decode_frame,
    default_codebook,
    encode_frame,
    render_frame,
)
from .operator import (
    Condition,
    ConfusionModel,
    OperatorParams,
    OperatorState,
    ParticipantProfile,
    default_confusion_model,
    draw_participant,
    guidance_confusion_model,
    init_operator_state,
    operator_step,
    perceive_cue,
)
from .harness import (
    Protocol,
    TrialConfig,
    TrialLog,
    default_guidance_policy_config,
    run_cue_id_session,
    run_cue_id_study,
    run_guidance_session,
    run_guidance_study,
    run_guidance_trial,
)
from .metrics import StudySummary, compute_metrics
from .stats import AnovaResult, PairedResult, paired_comparisons, rm_anova

__version__ = "0.1.0"
