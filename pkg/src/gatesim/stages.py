"""Mock perception stages and the per-stage latency model.

The mocks are driven by trace ground truth plus noise drawn from streams keyed
by (seed, frame index, face ordinal, stage), so a stage produces the same output
whether or not any other stage ran on that frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from gatesim import rng
from gatesim.core import EMOTIONS, Detection, EmotionScores, FrameTruth, GroundFace
from gatesim.embeddings import EMBEDDING_DIM, OwnerDatabase, enroll

STAGES = ("detect", "face", "emotion")
PROTOTYPE_MAX_SIMILARITY = 0.2


@dataclass(frozen=True)
class StageCostModel:
    detect_ms: float = 40.0
    face_ms: float = 120.0
    emotion_ms: float = 80.0
    overhead_ms: float = 0.0

    def __post_init__(self):
        for name in ("detect_ms", "face_ms", "emotion_ms", "overhead_ms"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a finite value >= 0, got {value}")


@dataclass(frozen=True)
class NoiseConfig:
    embedding_sigma: float = 0.1
    emotion_accuracy: float = 0.75
    confidence_jitter: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not self.embedding_sigma >= 0:
            raise ValueError("embedding_sigma must be >= 0")
        if not 0.0 <= self.emotion_accuracy <= 1.0:
            raise ValueError("emotion_accuracy out of range")
        if not self.confidence_jitter >= 0:
            raise ValueError("confidence_jitter must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def stage_cost(stage_id: str, cost_model: StageCostModel) -> float:
    try:
        return {
            "detect": cost_model.detect_ms,
            "face": cost_model.face_ms,
            "emotion": cost_model.emotion_ms,
        }[stage_id]
    except KeyError:
        raise ValueError(f"unknown stage id {stage_id!r}") from None


def _unit_gaussian(stream: rng.SplitMix64) -> np.ndarray:
    v = stream.gaussians(EMBEDDING_DIM)
    return v / np.linalg.norm(v)


def perturb(prototype: np.ndarray, sigma: float, stream: rng.SplitMix64) -> np.ndarray:
    """Unit-normalized ``prototype + noise``.

    ``sigma`` is the expected length of the isotropic noise vector, so each
    component gets standard deviation ``sigma / sqrt(128)``.
    """
    if sigma == 0:
        return prototype.copy()
    noisy = prototype + stream.gaussians(EMBEDDING_DIM) * (sigma / math.sqrt(EMBEDDING_DIM))
    return noisy / np.linalg.norm(noisy)


@dataclass
class IdentityPrototypes:
    """Deterministic, well-separated unit vectors standing in for face identities.

    Identities are generated in insertion order; each one is redrawn until its
    cosine similarity to every earlier prototype is below 0.2.
    """

    seed: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def build(cls, seed: int, identities: Iterable[str], anchor: str | None = None) -> "IdentityPrototypes":
        protos = cls(seed)
        if anchor is not None:
            protos.get(anchor)
        for name in sorted(set(identities)):
            protos.get(name)
        return protos

    def get(self, identity: str) -> np.ndarray:
        if identity not in self.vectors:
            self.vectors[identity] = self._generate(identity)
        return self.vectors[identity]

    __getitem__ = get

    def _generate(self, identity: str) -> np.ndarray:
        existing = list(self.vectors.values())
        for attempt in range(10_000):
            v = _unit_gaussian(rng.stream(self.seed, "prototype", identity, attempt))
            if all(float(v @ other) < PROTOTYPE_MAX_SIMILARITY for other in existing):
                return v
        raise RuntimeError(f"could not place a separated prototype for {identity!r}")


def mock_detect(frame: FrameTruth, noise: NoiseConfig) -> list[Detection]:
    jitter = noise.confidence_jitter
    out = []
    for ordinal, obj in enumerate(frame.objects):
        conf = obj.base_confidence
        if jitter > 0:
            conf += rng.stream(noise.seed, frame.index, ordinal, "detect").uniform(-jitter, jitter)
        out.append(Detection(obj.class_label, min(1.0, max(0.0, conf)), obj.box))
    return out


def mock_embed(
    face: GroundFace,
    prototypes: IdentityPrototypes,
    noise: NoiseConfig,
    frame_index: int,
    ordinal: int,
) -> np.ndarray:
    stream = rng.stream(noise.seed, frame_index, ordinal, "embed")
    return perturb(prototypes[face.identity], noise.embedding_sigma, stream)


def mock_emotion(face: GroundFace, noise: NoiseConfig, frame_index: int, ordinal: int) -> EmotionScores:
    stream = rng.stream(noise.seed, frame_index, ordinal, "emotion")
    # Fixed draw order keeps outputs stable across accuracy settings.
    hit_draw, wrong_draw, mass_draw = stream.random(), stream.random(), stream.random()
    if hit_draw < noise.emotion_accuracy:
        dominant = face.true_emotion
    else:
        others = [e for e in EMOTIONS if e != face.true_emotion]
        dominant = others[min(int(wrong_draw * len(others)), len(others) - 1)]
    mass = 0.6 + 0.3 * mass_draw
    rest = (1.0 - mass) / (len(EMOTIONS) - 1)
    return EmotionScores({e: (mass if e == dominant else rest) for e in EMOTIONS})


@dataclass
class MockStages:
    """The three mock stages bound to one noise configuration and identity space."""

    noise: NoiseConfig
    prototypes: IdentityPrototypes

    @classmethod
    def for_trace(cls, trace, noise: NoiseConfig, anchor: str | None = None) -> "MockStages":
        return cls(noise, IdentityPrototypes.build(noise.seed, trace.identities(), anchor))

    def detect(self, frame: FrameTruth) -> list[Detection]:
        return mock_detect(frame, self.noise)

    def embed(self, face: GroundFace, frame_index: int, ordinal: int) -> np.ndarray:
        return mock_embed(face, self.prototypes, self.noise, frame_index, ordinal)

    def emotion(self, face: GroundFace, frame_index: int, ordinal: int) -> EmotionScores:
        return mock_emotion(face, self.noise, frame_index, ordinal)


def synthetic_enrollment(identity: str, count: int, sigma: float, seed: int) -> OwnerDatabase:
    """Enroll ``count`` noisy samples around ``identity``'s prototype.

    The identity is the first prototype drawn for ``seed``, which matches how
    :meth:`MockStages.for_trace` anchors on the database identity.
    """
    if count < 1:
        raise ValueError("enrollment requires at least one embedding")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    proto = IdentityPrototypes.build(seed, [], anchor=identity)[identity]
    samples = [perturb(proto, sigma, rng.stream(seed, "enroll", i)) for i in range(count)]
    return enroll(identity, samples)
