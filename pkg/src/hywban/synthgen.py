"""Dataset synthesis: truncated-Gaussian features, augmentation, labeling and CSV I/O."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, FeatureVector, SemanticLabel, Thresholds, ValidationError, label_features
from .seeding import make_rng

SCHEMA_VERSION = 1
MAX_REJECTIONS = 100


@dataclass(frozen=True)
class FeatureStats:
    mean: float
    std_dev: float
    min: float
    max: float

    def __post_init__(self):
        if not self.std_dev > 0:
            raise ValidationError(f"std_dev must be positive, got {self.std_dev}")
        if not self.min < self.max:
            raise ValidationError("min must be below max")
        if not self.min <= self.mean <= self.max:
            raise ValidationError("mean must lie inside [min, max]")


# Per-feature statistics, in FEATURE_NAMES order.
DEFAULT_STATS: dict[str, FeatureStats] = {
    "snr_db": FeatureStats(23.6, 4.23, 17.57, 33.32),
    "input_power_mw": FeatureStats(0.07, 0.03, 0.02, 0.09),
    "acceleration_ms2": FeatureStats(0.0, 0.1, -0.5, 0.5),
    "heart_rate_bpm": FeatureStats(60.0, 25.0, 50.0, 120.0),
    "body_temp_c": FeatureStats(36.0, 2.0, 34.0, 42.0),
}


def sample_feature(stats: FeatureStats, rng: np.random.Generator) -> float:
    """One draw from Normal(mean, std_dev) truncated to [min, max].

    Rejection sampling; after MAX_REJECTIONS misses the last draw is clamped.
    """
    x = stats.mean
    for _ in range(MAX_REJECTIONS):
        x = rng.normal(stats.mean, stats.std_dev)
        if stats.min <= x <= stats.max:
            return float(x)
    return float(min(max(x, stats.min), stats.max))


def sample_truncated(mean, std, lo: float, hi: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized truncated-normal draws; ``mean``/``std`` may be scalars or length-``size`` arrays."""
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), (size,))
    std = np.broadcast_to(np.asarray(std, dtype=np.float64), (size,))
    out = np.empty(size)
    pending = np.arange(size)
    last = mean.copy()
    for _ in range(MAX_REJECTIONS):
        if pending.size == 0:
            return out
        draws = rng.normal(mean[pending], std[pending])
        ok = (draws >= lo) & (draws <= hi)
        out[pending[ok]] = draws[ok]
        last[pending[~ok]] = draws[~ok]
        pending = pending[~ok]
    out[pending] = np.clip(last[pending], lo, hi)
    return out


def augment(base_rows, factor: int, rng: np.random.Generator,
            stats: dict[str, FeatureStats] | None = None, std_scale: float = 1.0) -> list[FeatureVector]:
    """Expand each base row into ``factor`` noisy copies.

    Each field is redrawn from Normal(base value, std_scale * std_dev) and
    truncated to that field's range. Output order is base-row major.
    """
    if factor < 1:
        raise ValidationError("factor must be >= 1")
    if len(base_rows) == 0:
        raise ValidationError("augment needs at least one base row")
    if std_scale < 0:
        raise ValidationError("std_scale must be non-negative")
    stats = stats or DEFAULT_STATS
    base = np.array([r.as_array() for r in base_rows])
    reps = np.repeat(base, factor, axis=0)
    out = np.empty_like(reps)
    for j, name in enumerate(FEATURE_NAMES):
        s = stats[name]
        if std_scale == 0:
            out[:, j] = np.clip(reps[:, j], s.min, s.max)
        else:
            out[:, j] = sample_truncated(reps[:, j], s.std_dev * std_scale, s.min, s.max, rng, len(reps))
    return [FeatureVector.from_array(row) for row in out]


@dataclass
class Dataset:
    features: np.ndarray  # (n, 5) float64, FEATURE_NAMES order
    labels: np.ndarray    # (n,) int64 ordinals
    seed: int = 0
    thresholds: Thresholds = field(default_factory=Thresholds)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.features) != len(self.labels):
            raise ValidationError("features and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def rows(self):
        for x, y in zip(self.features, self.labels):
            yield FeatureVector.from_array(x), SemanticLabel(int(y))

    def label_histogram(self) -> dict[str, int]:
        counts = np.bincount(self.labels, minlength=len(SemanticLabel))
        return {label.title: int(counts[label]) for label in SemanticLabel}


def generate_dataset(size: int = 2040, seed: int = 42, thresholds: Thresholds = Thresholds(),
                     stats: dict[str, FeatureStats] | None = None) -> Dataset:
    if size < 1:
        raise ValidationError("size must be >= 1")
    stats = stats or DEFAULT_STATS
    rng = make_rng(seed)
    cols = []
    for name in FEATURE_NAMES:
        s = stats[name]
        cols.append(sample_truncated(s.mean, s.std_dev, s.min, s.max, rng, size))
    x = np.column_stack(cols)
    return Dataset(x, label_features(x, thresholds), seed=seed, thresholds=thresholds)


def split(d: Dataset, train_fraction: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0 < train_fraction < 1:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    order = make_rng(seed).permutation(len(d))
    n_train = int(round(train_fraction * len(d)))
    parts = []
    for idx in (order[:n_train], order[n_train:]):
        parts.append(Dataset(d.features[idx], d.labels[idx], seed=d.seed, thresholds=d.thresholds,
                             schema_version=d.schema_version))
    return parts[0], parts[1]


def save_dataset(d: Dataset, path) -> None:
    """Write the CSV plus a ``<path>.json`` sidecar. Floats use ``repr`` so reloads are exact."""
    path = Path(path)
    lines = [",".join(FEATURE_NAMES + ("label",))]
    for x, y in zip(d.features, d.labels):
        lines.append(",".join(repr(float(v)) for v in x) + f",{int(y)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    sidecar = {
        "seed": int(d.seed),
        "size": len(d),
        "thresholds": asdict(d.thresholds),
        "schema_version": d.schema_version,
    }
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def load_dataset(path) -> Dataset:
    path = Path(path)
    text = path.read_text(encoding="utf-8").splitlines()
    header = tuple(text[0].split(","))
    if header != FEATURE_NAMES + ("label",):
        raise ValidationError(f"unexpected dataset header {text[0]!r}")
    rows = [line.split(",") for line in text[1:] if line]
    x = np.array([[float(v) for v in r[:5]] for r in rows]).reshape(-1, 5)
    y = np.array([int(r[5]) for r in rows], dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= len(SemanticLabel)):
        raise ValidationError("label ordinal out of range")
    meta = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    thresholds = Thresholds(**meta["thresholds"]) if "thresholds" in meta else Thresholds()
    return Dataset(x, y, seed=meta.get("seed", 0), thresholds=thresholds,
                   schema_version=meta.get("schema_version", SCHEMA_VERSION))


def truncated_mean(stats: FeatureStats) -> float:
    """Closed-form mean of the truncated normal (used for reporting, not as a test oracle)."""
    a = (stats.min - stats.mean) / stats.std_dev
    b = (stats.max - stats.mean) / stats.std_dev
    pdf = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    cdf = lambda z: 0.5 * math.erfc(-z / math.sqrt(2))
    return stats.mean + stats.std_dev * (pdf(a) - pdf(b)) / (cdf(b) - cdf(a))
