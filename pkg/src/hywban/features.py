"""Feature/threshold types and the rule engine that maps flags to semantic labels."""
from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from dataclasses import astuple, dataclass, fields

import numpy as np

FEATURE_NAMES = ("snr_db", "input_power_mw", "acceleration_ms2", "heart_rate_bpm", "body_temp_c")
FLAG_NAMES = ("high_snr", "high_lpw", "high_acc", "abn_hr", "high_tmp")


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class SemanticLabel(enum.IntEnum):
    FULL = 0
    WIDE = 1
    MOTION = 2
    CRITICAL = 3
    UNSTABLE = 4
    REDUCED = 5

    @property
    def title(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class FeatureVector:
    snr_db: float
    input_power_mw: float
    acceleration_ms2: float
    heart_rate_bpm: float
    body_temp_c: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = [float(v) for v in values]
        if len(values) != len(FEATURE_NAMES):
            raise ValidationError(f"expected {len(FEATURE_NAMES)} feature values, got {len(values)}")
        return cls(*values)


@dataclass(frozen=True)
class Thresholds:
    snr_db: float = 19.0
    power_mw: float = 0.05
    accel_ms2: float = 0.1
    hr_low_bpm: float = 60.0
    hr_high_bpm: float = 110.0
    temp_c: float = 37.0

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValidationError(f"threshold {f.name} must be finite")
        if not self.hr_low_bpm < self.hr_high_bpm:
            raise ValidationError("hr_low_bpm must be below hr_high_bpm")


@dataclass(frozen=True)
class BinaryFeatures:
    high_snr: bool
    high_lpw: bool
    high_acc: bool
    abn_hr: bool
    high_tmp: bool

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(v) for v in astuple(self))


def binarize(f: FeatureVector, t: Thresholds = Thresholds()) -> BinaryFeatures:
    values = astuple(f)
    if not all(math.isfinite(v) for v in values):
        raise ValidationError(f"non-finite feature value in {f}")
    return BinaryFeatures(
        high_snr=f.snr_db >= t.snr_db,
        high_lpw=f.input_power_mw >= t.power_mw,
        high_acc=abs(f.acceleration_ms2) >= t.accel_ms2,
        abn_hr=f.heart_rate_bpm < t.hr_low_bpm or f.heart_rate_bpm > t.hr_high_bpm,
        high_tmp=f.body_temp_c > t.temp_c,
    )


def binarize_array(x: np.ndarray, t: Thresholds = Thresholds()) -> np.ndarray:
    """Vectorized :func:`binarize` over an ``(n, 5)`` feature matrix; returns ``(n, 5)`` bools."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != len(FEATURE_NAMES):
        raise ValidationError(f"expected shape (n, 5), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("non-finite feature value")
    return np.column_stack([
        x[:, 0] >= t.snr_db,
        x[:, 1] >= t.power_mw,
        np.abs(x[:, 2]) >= t.accel_ms2,
        (x[:, 3] < t.hr_low_bpm) | (x[:, 3] > t.hr_high_bpm),
        x[:, 4] > t.temp_c,
    ])


def classify_semantics(b: BinaryFeatures) -> SemanticLabel:
    # Rows are checked in table order; the first satisfied row wins.
    if b.high_snr and b.high_lpw:
        return SemanticLabel.FULL
    if b.high_snr and not b.high_lpw:
        return SemanticLabel.WIDE
    if (b.high_snr or b.high_lpw) and b.high_acc:
        return SemanticLabel.MOTION
    if (b.abn_hr or b.high_tmp) and not b.high_lpw:
        return SemanticLabel.CRITICAL
    if not b.high_snr or not b.high_lpw:
        return SemanticLabel.UNSTABLE
    return SemanticLabel.REDUCED


def label_features(x: np.ndarray, t: Thresholds = Thresholds()) -> np.ndarray:
    """Rule-engine labels (int ordinals) for an ``(n, 5)`` feature matrix."""
    table = enumerate_rule_table()
    flags = binarize_array(x, t).astype(np.int64)
    index = flags @ (1 << np.arange(4, -1, -1))
    lookup = np.array([int(table[BinaryFeatures(*map(bool, combo))]) for combo in _all_combos()])
    return lookup[index]


def _all_combos():
    return itertools.product((0, 1), repeat=len(FLAG_NAMES))


def enumerate_rule_table() -> dict[BinaryFeatures, SemanticLabel]:
    return {
        BinaryFeatures(*map(bool, combo)): classify_semantics(BinaryFeatures(*map(bool, combo)))
        for combo in _all_combos()
    }


def rule_table_counts() -> dict[SemanticLabel, int]:
    counts = Counter(enumerate_rule_table().values())
    return {label: counts.get(label, 0) for label in SemanticLabel}
