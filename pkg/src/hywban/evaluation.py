"""Confusion matrices, per-class metrics and the feature-level jamming experiment."""
from __future__ import annotations

import numpy as np

from . import neural
from .features import FEATURE_NAMES, SemanticLabel, ValidationError

N = len(SemanticLabel)
DEFAULT_OFFSETS = {"snr_db": 10.0, "input_power_mw": 0.05}


def confusion(preds, truth) -> np.ndarray:
    """6x6 counts, rows = truth, columns = prediction."""
    preds = np.asarray(preds, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if preds.shape != truth.shape:
        raise ValidationError(f"length mismatch: {preds.shape} vs {truth.shape}")
    cm = np.zeros((N, N), dtype=np.int64)
    np.add.at(cm, (truth, preds), 1)
    return cm


def metrics(cm: np.ndarray) -> dict:
    """Accuracy and per-class precision/recall.

    A class with no predictions (precision) or no true samples (recall) gets
    ``None`` rather than 0 so it cannot drag a macro average.
    """
    cm = np.asarray(cm)
    total = int(cm.sum())
    out = {"total": total, "accuracy": float(np.trace(cm) / total) if total else None, "per_class": {}}
    for k in range(N):
        tp = int(cm[k, k])
        predicted = int(cm[:, k].sum())
        actual = int(cm[k, :].sum())
        out["per_class"][SemanticLabel(k).title] = {
            "precision": tp / predicted if predicted else None,
            "recall": tp / actual if actual else None,
            "support": actual,
        }
    return out


def shift_features(x: np.ndarray, offsets: dict[str, float]) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    for name, delta in offsets.items():
        if name not in FEATURE_NAMES:
            raise ValidationError(f"unknown feature {name!r}")
        x[:, FEATURE_NAMES.index(name)] -= delta
    return x


def jamming_feature_experiment(dataset, model, offsets: dict[str, float] | None = None,
                               predict=None) -> dict:
    """Reclassify features after the eavesdropper-side degradation ``offsets``.

    ``predict`` maps an ``(n, 5)`` matrix to label ordinals; it defaults to the
    trained model. Per-class fractions are grouped by the unshifted prediction.
    """
    offsets = DEFAULT_OFFSETS if offsets is None else offsets
    if predict is None:
        predict = (lambda x: neural.predict_quantized(model, x)) if isinstance(model, neural.QuantizedModel) \
            else (lambda x: neural.predict(model, x))
    before = np.asarray(predict(dataset.features))
    after = np.asarray(predict(shift_features(dataset.features, offsets)))
    flipped = before != after
    per_class = {}
    for label in SemanticLabel:
        sel = before == label
        per_class[label.title] = {"n": int(sel.sum()),
                                  "flip_fraction": float(flipped[sel].mean()) if sel.any() else None}
    return {"offsets": dict(offsets), "n": len(before), "flip_fraction": float(flipped.mean()),
            "per_class": per_class, "after_histogram": np.bincount(after, minlength=N).tolist()}
