import pytest
from hypothesis import given, settings, strategies as st

from gatesim.core import Detection, FrameTruth, GroundFace, GroundObject, ScenarioTrace, contains_class
from gatesim.scheduler import (
    ConfigurationError,
    ExecutionPlan,
    GatingPolicy,
    PipelineError,
    execute_frame,
    plan_frame,
    run_pipeline,
)
from gatesim.simulator import ScenarioSpec, generate_trace
from gatesim.stages import MockStages, NoiseConfig, StageCostModel

BOX = (100.0, 50.0, 120.0, 200.0)
PERSON = [Detection("person", 0.9)]
COSTS = StageCostModel()


def stages_for(trace, seed=0):
    return MockStages.for_trace(trace, NoiseConfig(seed=seed), anchor="owner")


def frame_with(identity, index=0):
    return FrameTruth(index, (GroundObject("person", 0.9, BOX),), (GroundFace(identity, "Happy", BOX),))


def recompute_cost(result, model):
    # independent re-accumulation from the log
    total = model.overhead_ms + model.detect_ms
    if "face" in result.stages_run:
        total += model.face_ms
    return total + model.emotion_ms * len(result.emotions)


@pytest.mark.parametrize(
    "index, dets, expected",
    [(5, PERSON, True), (3, PERSON, False), (10, [], False), (0, PERSON, True), (10, [Detection("cup", 0.9)], False)],
)
def test_plan_adaptive(index, dets, expected):
    plan = plan_frame(index, dets, GatingPolicy(), face_count=1)
    assert plan.run_detect
    assert plan.run_face is expected
    assert plan.run_emotion_for == ((0,) if expected else ())


@given(st.integers(0, 10_000), st.booleans(), st.integers(1, 12), st.integers(0, 3))
def test_plan_invariants(index, person, period, faces):
    dets = PERSON if person else []
    plan = plan_frame(index, dets, GatingPolicy(face_period=period), faces)
    assert plan.run_face == (index % period == 0 and person)
    if plan.run_emotion_for:
        assert plan.run_face
    base = plan_frame(index, dets, GatingPolicy(mode="baseline"), faces)
    assert base.run_face and base.run_emotion_for == tuple(range(faces))


def test_plan_rejects_negative_index():
    with pytest.raises(ValueError):
        plan_frame(-1, [], GatingPolicy())


def test_policy_validation():
    for bad in ({"face_period": 0}, {"mode": "greedy"}, {"emotion_scope": "some"}, {"confidence_threshold": 2}):
        with pytest.raises(ValueError):
            GatingPolicy(**bad)


def _execute(frame, plan, db, policy=GatingPolicy(), model=COSTS):
    trace = ScenarioTrace([frame])
    return execute_frame(frame, plan, db, stages_for(trace), model, policy)


def test_execute_owner_on_gated_frame(owner_db):
    model = StageCostModel(overhead_ms=7)
    r = _execute(frame_with("owner"), ExecutionPlan(True, True, (0,)), owner_db, model=model)
    assert len(r.matches) == 1 and r.matches[0].is_owner
    assert len(r.emotions) == 1
    assert r.cost_ms == 7 + 40 + 120 + 80
    kinds = [a.kind for a in r.annotations]
    assert "owner_green" in kinds and "emotion_label" in kinds and "object_box" in kinds


def test_execute_unknown_on_gated_frame(owner_db):
    r = _execute(frame_with("mallory"), ExecutionPlan(True, True, (0,)), owner_db)
    assert len(r.matches) == 1 and not r.matches[0].is_owner
    assert r.emotions == ()
    assert [a.kind for a in r.annotations if a.kind != "object_box"] == ["unknown_red"]
    assert r.cost_ms == 160


def test_execute_detector_only(owner_db):
    r = _execute(FrameTruth(3), ExecutionPlan(True, False, ()), owner_db)
    assert r.matches == () and r.emotions == ()
    assert r.cost_ms == 40 and r.stages_run == ("detect",)


def test_execute_all_faces_scope(owner_db):
    policy = GatingPolicy(emotion_scope="all_faces")
    r = _execute(frame_with("mallory"), ExecutionPlan(True, True, (0,)), owner_db, policy=policy)
    assert len(r.emotions) == 1 and r.cost_ms == 240


def test_execute_missing_db():
    with pytest.raises(ConfigurationError, match="database"):
        _execute(frame_with("owner"), ExecutionPlan(True, True, (0,)), None)


def test_run_pipeline_error_carries_frame():
    trace = ScenarioTrace([FrameTruth(0), FrameTruth(1), frame_with("owner", 2), FrameTruth(3), frame_with("owner", 4),
                           frame_with("owner", 5)])
    with pytest.raises(PipelineError) as info:
        run_pipeline(trace, GatingPolicy(), None, stages_for(trace), COSTS)
    assert info.value.frame_index == 5


def test_run_pipeline_counts(owner_trace, owner_db):
    st_ = stages_for(owner_trace)
    adaptive = run_pipeline(owner_trace, GatingPolicy(), owner_db, st_, COSTS)
    baseline = run_pipeline(owner_trace, GatingPolicy(mode="baseline"), owner_db, st_, COSTS)
    assert sum(r.face_ran for r in adaptive) == 1000 // 5
    assert sum(r.face_ran for r in baseline) == 1000
    assert [r.frame_index for r in adaptive] == list(range(1000))


def test_run_pipeline_empty(owner_db):
    trace = ScenarioTrace([])
    assert run_pipeline(trace, GatingPolicy(), owner_db, stages_for(trace), COSTS) == []


@pytest.mark.parametrize("period", [1, 2, 5, 7])
def test_gating_replay(mixed_trace, owner_db, period):
    policy = GatingPolicy(face_period=period)
    results = run_pipeline(mixed_trace, policy, owner_db, stages_for(mixed_trace), COSTS)
    for r in results:
        expected = r.frame_index % period == 0 and contains_class(r.detections, "person")
        assert r.face_ran == expected


def test_emotion_subset_owner_only(mixed_trace, owner_db):
    results = run_pipeline(mixed_trace, GatingPolicy(), owner_db, stages_for(mixed_trace), COSTS)
    for r in results:
        owners = {i for i, m in enumerate(r.matches) if m.is_owner}
        assert {i for i, _ in r.emotions} == owners


def test_cost_additivity_and_dominance(mixed_trace, owner_db):
    model = StageCostModel(overhead_ms=13.5)
    st_ = stages_for(mixed_trace)
    adaptive = run_pipeline(mixed_trace, GatingPolicy(), owner_db, st_, model)
    baseline = run_pipeline(mixed_trace, GatingPolicy(mode="baseline"), owner_db, st_, model)
    for a, b in zip(adaptive, baseline):
        assert a.cost_ms == pytest.approx(recompute_cost(a, model), rel=1e-12)
        assert b.cost_ms == pytest.approx(recompute_cost(b, model), rel=1e-12)
        assert b.cost_ms >= a.cost_ms


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_determinism(seed):
    trace = generate_trace(ScenarioSpec(frame_count=60, person_presence_rate=0.6, owner_fraction=0.5, seed=seed % 1000))
    from gatesim.stages import synthetic_enrollment

    db = synthetic_enrollment("owner", 5, 0.05, seed)
    one = run_pipeline(trace, GatingPolicy(), db, stages_for(trace, seed), COSTS)
    two = run_pipeline(trace, GatingPolicy(), db, stages_for(trace, seed), COSTS)
    assert one == two
