"""Trace-driven simulator for adaptively gated perception pipelines."""

from gatesim.core import (
    EMOTIONS,
    Detection,
    EmotionScores,
    FrameTruth,
    GroundFace,
    GroundObject,
    ScenarioTrace,
    contains_class,
    filter_by_confidence,
    validate_trace,
)
from gatesim.embeddings import (
    MatchResult,
    OwnerDatabase,
    cosine_similarity,
    enroll,
    load_database,
    match,
    save_database,
)
from gatesim.scheduler import GatingPolicy, plan_frame, execute_frame, run_pipeline
from gatesim.simulator import ScenarioSpec, compare, generate_trace, run_simulation
from gatesim.stages import MockStages, NoiseConfig, StageCostModel

__version__ = "0.1.0"
