"""Domain types shared by the simulator, plus detection filtering and trace validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

CANVAS_WIDTH = 640
CANVAS_HEIGHT = 480

# Fixed order; also the tie-break order for the dominant emotion.
EMOTIONS: tuple[str, ...] = ("Angry", "Fear", "Happy", "Sad", "Surprise", "Neutral")

COCO_CLASSES: tuple[str, ...] = (
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck",
    "boat", "traffic light", "fire hydrant", "stop sign", "parking meter", "bench",
    "bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra",
    "giraffe", "backpack", "umbrella", "handbag", "tie", "suitcase", "frisbee",
    "skis", "snowboard", "sports ball", "kite", "baseball bat", "baseball glove",
    "skateboard", "surfboard", "tennis racket", "bottle", "wine glass", "cup",
    "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch",
    "potted plant", "bed", "dining table", "toilet", "tv", "laptop", "mouse",
    "remote", "keyboard", "cell phone", "microwave", "oven", "toaster", "sink",
    "refrigerator", "book", "clock", "vase", "scissors", "teddy bear",
    "hair drier", "toothbrush",
)

Box = tuple[float, float, float, float]  # x, y, w, h in pixels


def _as_box(box: Sequence[float]) -> Box:
    if len(box) != 4:
        raise ValueError(f"box must have 4 components, got {len(box)}")
    x, y, w, h = (float(v) for v in box)
    return (x, y, w, h)


@dataclass(frozen=True)
class GroundObject:
    class_label: str
    base_confidence: float
    box: Box

    def __post_init__(self):
        object.__setattr__(self, "box", _as_box(self.box))


@dataclass(frozen=True)
class GroundFace:
    identity: str
    true_emotion: str
    box: Box

    def __post_init__(self):
        object.__setattr__(self, "box", _as_box(self.box))


@dataclass(frozen=True)
class FrameTruth:
    index: int
    objects: tuple[GroundObject, ...] = ()
    faces: tuple[GroundFace, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "faces", tuple(self.faces))


@dataclass(frozen=True)
class ScenarioTrace:
    frames: tuple[FrameTruth, ...]
    seed: int = 0
    version: int = 1

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))

    def __len__(self) -> int:
        return len(self.frames)

    def identities(self) -> list[str]:
        return sorted({face.identity for frame in self.frames for face in frame.faces})


@dataclass(frozen=True)
class Detection:
    class_label: str
    confidence: float
    box: Box = (0.0, 0.0, 1.0, 1.0)

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        object.__setattr__(self, "box", _as_box(self.box))


@dataclass(frozen=True)
class EmotionScores:
    """Six-way emotion distribution keyed by label."""

    scores: Mapping[str, float]

    def __post_init__(self):
        if set(self.scores) != set(EMOTIONS):
            raise ValueError(f"emotion scores need exactly the labels {EMOTIONS}")
        total = sum(self.scores.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"emotion scores sum to {total}, expected 1")
        if any(not 0.0 <= v <= 1.0 for v in self.scores.values()):
            raise ValueError("emotion scores must lie in [0, 1]")
        object.__setattr__(self, "scores", {label: float(self.scores[label]) for label in EMOTIONS})

    @property
    def dominant(self) -> str:
        best = EMOTIONS[0]
        for label in EMOTIONS[1:]:
            if self.scores[label] > self.scores[best]:
                best = label
        return best

    @property
    def confidence(self) -> float:
        return self.scores[self.dominant]

    def as_list(self) -> list[float]:
        return [self.scores[label] for label in EMOTIONS]


def filter_by_confidence(detections: Sequence[Detection], threshold: float) -> list[Detection]:
    """Keep detections whose confidence is strictly above ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return [d for d in detections if d.confidence > threshold]


def contains_class(detections: Sequence[Detection], class_label: str) -> bool:
    return any(d.class_label == class_label for d in detections)


@dataclass(frozen=True)
class Violation:
    frame: int | None
    message: str

    def __str__(self) -> str:
        return self.message if self.frame is None else f"frame {self.frame}: {self.message}"


@dataclass
class ValidationResult:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_trace(trace: ScenarioTrace) -> ValidationResult:
    """Collect every structural problem in ``trace``; never raises."""
    result = ValidationResult()
    report = result.violations.append
    for position, frame in enumerate(trace.frames):
        if frame.index != position:
            report(Violation(frame.index, f"non-consecutive index at position {position}"))
        for obj in frame.objects:
            if not obj.class_label:
                report(Violation(frame.index, "empty class label"))
            elif obj.class_label not in COCO_CLASSES:
                report(Violation(frame.index, f"unknown class {obj.class_label!r}"))
            if not 0.0 <= obj.base_confidence <= 1.0:
                report(Violation(frame.index, f"confidence {obj.base_confidence} outside [0, 1]"))
            if obj.box[2] <= 0 or obj.box[3] <= 0:
                report(Violation(frame.index, f"non-positive box size for {obj.class_label!r}"))
        for face in frame.faces:
            if face.true_emotion not in EMOTIONS:
                report(Violation(frame.index, f"unknown emotion {face.true_emotion!r}"))
            if not face.identity:
                report(Violation(frame.index, "empty face identity"))
        if frame.faces and not any(o.class_label == "person" for o in frame.objects):
            report(Violation(frame.index, "face present without a person object"))
    return result
