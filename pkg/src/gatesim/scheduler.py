"""Per-frame gating decisions and pipeline execution.

Adaptive mode keeps the detector on every frame and admits the face stage only
on frames where ``index % face_period == 0`` and the trigger class survives the
confidence filter. Emotion then runs per face according to ``emotion_scope``.
Baseline mode runs every stage on every frame for every face.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from gatesim.core import (
    Box,
    Detection,
    EmotionScores,
    FrameTruth,
    ScenarioTrace,
    contains_class,
    filter_by_confidence,
)
from gatesim.embeddings import DEFAULT_MATCH_THRESHOLD, MatchResult, OwnerDatabase, match
from gatesim.stages import MockStages, StageCostModel

ADAPTIVE = "adaptive"
BASELINE = "baseline"
OWNER_ONLY = "owner_only"
ALL_FACES = "all_faces"


class ConfigurationError(Exception):
    pass


class PipelineError(Exception):
    def __init__(self, frame_index: int, cause: Exception):
        super().__init__(f"frame {frame_index}: {cause}")
        self.frame_index = frame_index
        self.cause = cause


@dataclass(frozen=True)
class GatingPolicy:
    mode: str = ADAPTIVE
    face_period: int = 5
    face_trigger_class: str = "person"
    emotion_scope: str = OWNER_ONLY
    confidence_threshold: float = 0.5
    match_threshold: float = DEFAULT_MATCH_THRESHOLD

    def __post_init__(self):
        if self.mode not in (ADAPTIVE, BASELINE):
            raise ValueError(f"mode must be {ADAPTIVE!r} or {BASELINE!r}, got {self.mode!r}")
        if isinstance(self.face_period, bool) or not isinstance(self.face_period, int) or self.face_period < 1:
            raise ValueError(f"face_period must be a positive integer, got {self.face_period!r}")
        if self.emotion_scope not in (OWNER_ONLY, ALL_FACES):
            raise ValueError(f"emotion_scope must be {OWNER_ONLY!r} or {ALL_FACES!r}")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold out of range")
        if not 0.0 <= self.match_threshold <= 1.0:
            raise ValueError("match_threshold out of range")

    @property
    def effective_emotion_scope(self) -> str:
        return ALL_FACES if self.mode == BASELINE else self.emotion_scope


@dataclass(frozen=True)
class ExecutionPlan:
    run_detect: bool
    run_face: bool
    # Faces eligible for emotion; the scope filter is applied after matching.
    run_emotion_for: tuple[int, ...] = ()


@dataclass(frozen=True)
class AnnotationEvent:
    kind: str  # owner_green | unknown_red | object_box | emotion_label
    label: str
    box: Box


@dataclass(frozen=True)
class FrameResult:
    frame_index: int
    detections: tuple[Detection, ...]
    matches: tuple[MatchResult, ...]
    emotions: tuple[tuple[int, EmotionScores], ...]
    annotations: tuple[AnnotationEvent, ...]
    cost_ms: float
    stages_run: tuple[str, ...] = ("detect",)
    stage_costs: dict[str, float] = field(default_factory=dict)

    @property
    def face_ran(self) -> bool:
        return "face" in self.stages_run


def plan_frame(
    frame_index: int,
    filtered_detections: Sequence[Detection],
    policy: GatingPolicy,
    face_count: int = 0,
) -> ExecutionPlan:
    if frame_index < 0:
        raise ValueError("frame_index must be >= 0")
    if policy.mode == BASELINE:
        run_face = True
    else:
        run_face = frame_index % policy.face_period == 0 and contains_class(
            filtered_detections, policy.face_trigger_class
        )
    emotion_for = tuple(range(face_count)) if run_face else ()
    return ExecutionPlan(run_detect=True, run_face=run_face, run_emotion_for=emotion_for)


def execute_frame(
    frame: FrameTruth,
    plan: ExecutionPlan,
    db: OwnerDatabase | None,
    stages: MockStages,
    cost_model: StageCostModel,
    policy: GatingPolicy,
    detections: Sequence[Detection] | None = None,
) -> FrameResult:
    """Run the planned stages on one frame and account their cost.

    ``detections`` may carry the already-filtered detector output for this
    frame; the detector is charged either way.
    """
    if plan.run_face and db is None:
        raise ConfigurationError("database_path: face stage is enabled but no owner database was given")
    if detections is None:
        detections = filter_by_confidence(stages.detect(frame), policy.confidence_threshold)
    detections = tuple(detections)

    annotations = [AnnotationEvent("object_box", d.class_label, d.box) for d in detections]
    stages_run = ["detect"]
    costs = {"overhead": cost_model.overhead_ms, "detect": cost_model.detect_ms, "face": 0.0, "emotion": 0.0}
    matches: list[MatchResult] = []
    emotions: list[tuple[int, EmotionScores]] = []

    if plan.run_face:
        stages_run.append("face")
        costs["face"] = cost_model.face_ms
        eligible = set(plan.run_emotion_for)
        scope = policy.effective_emotion_scope
        for ordinal, face in enumerate(frame.faces):
            result = match(db, stages.embed(face, frame.index, ordinal), policy.match_threshold)
            matches.append(result)
            kind, label = ("owner_green", "Owner") if result.is_owner else ("unknown_red", "Unknown")
            annotations.append(AnnotationEvent(kind, label, face.box))
            if ordinal in eligible and (scope == ALL_FACES or result.is_owner):
                scores = stages.emotion(face, frame.index, ordinal)
                emotions.append((ordinal, scores))
                costs["emotion"] += cost_model.emotion_ms
                annotations.append(
                    AnnotationEvent("emotion_label", f"{scores.dominant} {scores.confidence:.2f}", face.box)
                )
        if emotions:
            stages_run.append("emotion")

    cost = costs["overhead"] + costs["detect"] + costs["face"] + costs["emotion"]
    return FrameResult(
        frame_index=frame.index,
        detections=detections,
        matches=tuple(matches),
        emotions=tuple(emotions),
        annotations=tuple(annotations),
        cost_ms=cost,
        stages_run=tuple(stages_run),
        stage_costs=costs,
    )


def run_pipeline(
    trace: ScenarioTrace,
    policy: GatingPolicy,
    db: OwnerDatabase | None,
    stages: MockStages,
    cost_model: StageCostModel,
) -> list[FrameResult]:
    results = []
    for frame in trace.frames:
        try:
            filtered = filter_by_confidence(stages.detect(frame), policy.confidence_threshold)
            plan = plan_frame(frame.index, filtered, policy, len(frame.faces))
            results.append(execute_frame(frame, plan, db, stages, cost_model, policy, detections=filtered))
        except (ConfigurationError, ValueError) as exc:
            raise PipelineError(frame.index, exc) from exc
    return results
