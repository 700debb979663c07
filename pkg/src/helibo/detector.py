"""Parametric stand-in for the retrained helipad detector.

Detector quality is a smooth landscape over the augmentation parameters
(scale, brightness) with one Gaussian bump per environment.  A model built
from a parameter pair detects the projected pad with probability
``quality * visibility`` and jitters the box with noise that shrinks as that
probability approaches one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .geometry import BoundingBox, box_is_valid
from .seeding import derive_seed

A_MIN = 6.0e-5
CONF_NOISE = 0.05
CLUTTER_MAX_CONF = 0.3


class EnvCondition(enum.Enum):
    CLEAR_DAY = "ClearDay"
    CLEAR_NIGHT = "ClearNight"
    NIGHT_RAIN = "NightRain"

    @classmethod
    def parse(cls, text: str) -> "EnvCondition":
        key = text.replace("_", "").replace("-", "").lower()
        for env in cls:
            if env.value.lower() == key:
                return env
        names = ", ".join(e.value for e in cls)
        raise ValueError(f"unknown environment {text!r} (expected one of {names})")

    def __str__(self):
        return self.value


class InvalidEnsembleSize(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class AugParams:
    scale: float
    brightness: float

    def __post_init__(self):
        for name in ("scale", "brightness"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.scale, self.brightness])


@dataclass(frozen=True)
class Peak:
    scale: float
    brightness: float
    width: float
    q_max: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("peak width must be positive")
        if not 0.0 <= self.q_max <= 1.0:
            raise ValueError("q_max must lie in [0, 1]")


DEFAULT_LANDSCAPE: dict[EnvCondition, Peak] = {
    EnvCondition.CLEAR_DAY: Peak(0.62, 0.52, 0.30, 0.97),
    EnvCondition.CLEAR_NIGHT: Peak(0.82, 0.74, 0.20, 0.95),
    EnvCondition.NIGHT_RAIN: Peak(0.60, 0.74, 0.16, 0.88),
}

# Amplification of the subset jitter when a model trained in one environment
# is run in another.  The table is symmetric.
MISMATCH = {
    frozenset({EnvCondition.CLEAR_DAY, EnvCondition.CLEAR_NIGHT}): 2.5,
    frozenset({EnvCondition.CLEAR_DAY, EnvCondition.NIGHT_RAIN}): 3.5,
    frozenset({EnvCondition.CLEAR_NIGHT, EnvCondition.NIGHT_RAIN}): 1.5,
}


def mismatch_factor(env_train: EnvCondition | None, env_eval: EnvCondition) -> float:
    if env_train is None or env_train == env_eval:
        return 1.0
    return MISMATCH[frozenset({env_train, env_eval})]


def _gaussian(s, b, peak: Peak, ds=0.0, db=0.0):
    d2 = (s - peak.scale - ds) ** 2 + (b - peak.brightness - db) ** 2
    return peak.q_max * np.exp(-d2 / (2.0 * peak.width ** 2))


def quality(p: AugParams, env: EnvCondition,
            landscape: Mapping[EnvCondition, Peak] = DEFAULT_LANDSCAPE) -> float:
    """Reference detector quality in [0, 1] for parameters ``p`` in ``env``."""
    return float(_gaussian(p.scale, p.brightness, landscape[env]))


def quality_grad(p: AugParams, env: EnvCondition,
                 landscape: Mapping[EnvCondition, Peak] = DEFAULT_LANDSCAPE) -> np.ndarray:
    peak = landscape[env]
    q = quality(p, env, landscape)
    return -q * (p.as_array() - (peak.scale, peak.brightness)) / peak.width ** 2


def quality_grid(env: EnvCondition, n: int = 101,
                 landscape: Mapping[EnvCondition, Peak] = DEFAULT_LANDSCAPE):
    """Landscape sampled on an ``n x n`` grid; returns ``(S, B, Q)`` meshes (ij indexing)."""
    axis = np.linspace(0.0, 1.0, n)
    S, B = np.meshgrid(axis, axis, indexing="ij")
    return S, B, _gaussian(S, B, landscape[env])


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class DetectorModel:
    """Immutable detector built from one augmentation setting.

    ``peak_offset`` shifts every landscape peak (ensemble members trained on
    different data subsets); the shift is amplified by ``mismatch_factor``
    when the model runs outside ``env_train``.
    """

    params: AugParams
    noise_px: float = 0.01
    seed: int = 0
    env_train: EnvCondition | None = None
    peak_offset: tuple[float, float] = (0.0, 0.0)
    landscape: Mapping[EnvCondition, Peak] = field(default_factory=lambda: dict(DEFAULT_LANDSCAPE))
    a_min: float = A_MIN
    clutter_rate: float = 0.0

    def __post_init__(self):
        if not self.noise_px >= 0:
            raise ValueError("noise_px must be non-negative")
        if not self.a_min > 0:
            raise ValueError("a_min must be positive")
        if not self.clutter_rate >= 0:
            raise ValueError("clutter_rate must be non-negative")

    def quality(self, env: EnvCondition) -> float:
        m = mismatch_factor(self.env_train, env)
        ds, db = self.peak_offset
        return float(_gaussian(self.params.scale, self.params.brightness,
                               self.landscape[env], m * ds, m * db))

    def visibility(self, truth: BoundingBox) -> float:
        return min(max(truth.area() / self.a_min, 0.0), 1.0)


def detect(model: DetectorModel, truth: BoundingBox | None, env: EnvCondition,
           rng: np.random.Generator, q: float | None = None) -> Detection | None:
    """One stochastic detector call on the true pad box.

    ``q`` may be passed to skip re-evaluating the model quality every frame.
    """
    if truth is None:
        return None
    if q is None:
        q = model.quality(env)
    p = q * model.visibility(truth)
    if rng.random() >= p:
        return None
    n = rng.standard_normal(5)
    sd = model.noise_px * (1.0 - p)
    cx = truth.cx + sd * n[0]
    cy = truth.cy + sd * n[1]
    w = truth.w + sd * n[2]
    h = truth.h + sd * n[3]
    if not box_is_valid(cx, cy, w, h):
        return None
    conf = min(max(p + CONF_NOISE * n[4], 0.0), 1.0)
    return Detection(BoundingBox(cx, cy, w, h), conf)


def clutter(model: DetectorModel, rng: np.random.Generator) -> list[Detection]:
    """Spurious low-confidence boxes; empty unless ``clutter_rate > 0``."""
    if model.clutter_rate <= 0.0:
        return []
    out = []
    for _ in range(rng.poisson(model.clutter_rate)):
        w, h = rng.uniform(0.01, 0.2, 2)
        cx = rng.uniform(w / 2, 1 - w / 2)
        cy = rng.uniform(h / 2, 1 - h / 2)
        out.append(Detection(BoundingBox(cx, cy, w, h), rng.uniform(0.0, CLUTTER_MAX_CONF)))
    return out


def train_ensemble(p: AugParams, env_train: EnvCondition, k: int = 5, seed: int = 0,
                   sigma_sub: float = 0.03, **model_kw) -> list[DetectorModel]:
    """Subsampling ensemble: ``k`` models whose peaks carry subset-specific offsets."""
    if k < 2:
        raise InvalidEnsembleSize(f"ensemble needs at least 2 members, got {k}")
    if sigma_sub < 0:
        raise ValueError("sigma_sub must be non-negative")
    members = []
    for i in range(k):
        member_seed = derive_seed(seed, "subset", i)
        offset = np.random.default_rng(member_seed).normal(0.0, sigma_sub, 2)
        members.append(DetectorModel(p, seed=member_seed, env_train=env_train,
                                     peak_offset=(float(offset[0]), float(offset[1])),
                                     **model_kw))
    return members


@dataclass(frozen=True)
class EnsembleUncertainty:
    cx: float
    cy: float
    w: float
    h: float

    def mean(self) -> float:
        return (self.cx + self.cy + self.w + self.h) / 4.0

    def as_tuple(self):
        return (self.cx, self.cy, self.w, self.h)


SATURATED = EnsembleUncertainty(1.0, 1.0, 1.0, 1.0)


def box_std(boxes) -> EnsembleUncertainty:
    """Per-coordinate sample standard deviation (n - 1) across boxes."""
    arr = np.array([b.as_tuple() for b in boxes], dtype=float)
    # shifting by one member keeps identical boxes at exactly zero spread
    sd = (arr - arr[0]).std(axis=0, ddof=1)
    return EnsembleUncertainty(*(float(v) for v in sd))


def ensemble_uncertainty(models, truth: BoundingBox, env: EnvCondition,
                         rng: np.random.Generator) -> EnsembleUncertainty:
    """Disagreement of the ensemble on one frame.

    All members see the same frame noise (common random numbers), so any
    spread comes from differences between the models themselves.
    """
    if len(models) < 2:
        raise InvalidEnsembleSize("need at least 2 models")
    frame_seed = int(rng.integers(2 ** 63))
    boxes = []
    for m in models:
        det = detect(m, truth, env, np.random.default_rng(frame_seed))
        if det is not None:
            boxes.append(det.box)
    if len(boxes) < 2:
        return SATURATED
    return box_std(boxes)


def landscape_rows(n: int = 101, landscape: Mapping[EnvCondition, Peak] = DEFAULT_LANDSCAPE):
    """Yield ``(S, B, env, q)`` rows over the grid for every environment."""
    for env in EnvCondition:
        S, B, Q = quality_grid(env, n, landscape)
        for s, b, q in zip(S.ravel(), B.ravel(), Q.ravel()):
            yield float(s), float(b), env.value, float(q)
