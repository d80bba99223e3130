"""Classification metrics: confusion matrix, ROC/AUC, PR/AP, windowed accuracy.

AUC counts tied positive/negative pairs as one half. AP is the plain mean of
precision at each positive's rank (no interpolation), with equal scores kept
in input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Sequence

from gatesim.core import EMOTIONS, EmotionScores


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True)
class ScoredSample:
    score: float
    label: bool


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        if self.total == 0:
            raise UndefinedMetricError("accuracy undefined for an empty matrix")
        return (self.tp + self.tn) / self.total


@dataclass(frozen=True)
class CurvePoint:
    x: float
    y: float


def _samples(samples) -> list[ScoredSample]:
    return [s if isinstance(s, ScoredSample) else ScoredSample(float(s[0]), bool(s[1])) for s in samples]


def confusion_matrix(predictions: Sequence[bool], truths: Sequence[bool]) -> ConfusionMatrix:
    if len(predictions) != len(truths):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths")
    if not predictions:
        raise ValueError("confusion matrix needs at least one sample")
    tp = fp = tn = fn = 0
    for pred, truth in zip(predictions, truths):
        if pred and truth:
            tp += 1
        elif pred:
            fp += 1
        elif truth:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def roc_curve(samples: Iterable) -> list[CurvePoint]:
    """ROC points (FPR, TPR), sweeping thresholds over distinct scores descending."""
    samples = _samples(samples)
    pos = sum(s.label for s in samples)
    neg = len(samples) - pos
    if pos == 0 or neg == 0:
        raise UndefinedMetricError("ROC undefined: need at least one positive and one negative")
    ordered = sorted(samples, key=lambda s: -s.score)
    points = [CurvePoint(0.0, 0.0)]
    tp = fp = 0
    for _, group in groupby(ordered, key=lambda s: s.score):
        for s in group:
            if s.label:
                tp += 1
            else:
                fp += 1
        points.append(CurvePoint(fp / neg, tp / pos))
    return points


def auc(samples: Iterable) -> float:
    """Trapezoidal area under :func:`roc_curve`."""
    points = roc_curve(samples)
    area = 0.0
    for a, b in zip(points, points[1:]):
        area += (b.x - a.x) * (a.y + b.y) / 2.0
    return area


def auc_pairwise_oracle(samples: Iterable) -> float:
    """Brute-force P(score+ > score-) + P(tie) / 2 over all pairs."""
    samples = _samples(samples)
    pos = [s.score for s in samples if s.label]
    neg = [s.score for s in samples if not s.label]
    if not pos or not neg:
        raise UndefinedMetricError("AUC undefined: need at least one positive and one negative")
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def _ranked(samples) -> list[ScoredSample]:
    samples = _samples(samples)
    if not any(s.label for s in samples):
        raise UndefinedMetricError("AP undefined: no positive samples")
    return sorted(samples, key=lambda s: -s.score)


def pr_curve(samples: Iterable) -> list[CurvePoint]:
    """(recall, precision) after each rank of the score-sorted list."""
    ranked = _ranked(samples)
    pos = sum(s.label for s in ranked)
    points = []
    tp = 0
    for rank, s in enumerate(ranked, start=1):
        tp += s.label
        points.append(CurvePoint(tp / pos, tp / rank))
    return points


def average_precision(samples: Iterable) -> float:
    ranked = _ranked(samples)
    hits = 0
    precisions = []
    for rank, s in enumerate(ranked, start=1):
        if s.label:
            hits += 1
            precisions.append(hits / rank)
    return sum(precisions) / len(precisions)


def one_vs_rest_metrics(
    emotion_results: Sequence[tuple[EmotionScores, str]],
) -> dict[str, dict[str, float | None]]:
    """Per-class AUC and AP; a metric that is undefined for a class is ``None``."""
    out = {}
    for label in EMOTIONS:
        samples = [ScoredSample(scores.scores[label], truth == label) for scores, truth in emotion_results]
        entry: dict[str, float | None] = {}
        for name, fn in (("auc", auc), ("ap", average_precision)):
            try:
                entry[name] = fn(samples)
            except UndefinedMetricError:
                entry[name] = None
        out[label] = entry
    return out


def dominant_accuracy(emotion_results: Sequence[tuple[EmotionScores, str]]) -> float:
    if not emotion_results:
        raise UndefinedMetricError("accuracy undefined without samples")
    return sum(scores.dominant == truth for scores, truth in emotion_results) / len(emotion_results)


def accuracy_over_time(events: Sequence[tuple[int, bool]], window: int) -> list[tuple[int, float]]:
    """Sliding-window accuracy over ``(frame_index, correct)`` events.

    One point per full window, tagged with the frame index of the window's last
    event. Fewer events than ``window`` yields no points.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    points = []
    correct = 0
    for i, (frame_index, ok) in enumerate(events):
        correct += bool(ok)
        if i >= window:
            correct -= bool(events[i - window][1])
        if i >= window - 1:
            points.append((frame_index, correct / window))
    return points
