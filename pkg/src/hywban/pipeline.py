"""End-to-end workflow shared by the CLI and the acceptance tests.

All randomness hangs off ``Config.master_seed``. The dataset seed is the
master seed itself (so ``gen-data --seed S`` matches a pipeline run with
master seed S); every other stream is ``derive_seed(master, tag)`` with the
tags below.
"""
from __future__ import annotations

import csv
import json
from dataclasses import replace
from pathlib import Path

from . import energy, evaluation, modelio, neural, protocol
from .config import Config
from .features import SemanticLabel
from .phychannel import ChannelParams
from .seeding import derive_seed
from .synthgen import Dataset, generate_dataset, save_dataset, split

TAG_SPLIT = "split"
TAG_INIT = "init"
TAG_TRAIN = "train"
TAG_ENROLL = "enroll"
TAG_CAMPAIGN = "campaign"

HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "val_accuracy")


def make_dataset(cfg: Config, size: int | None = None, seed: int | None = None) -> Dataset:
    return generate_dataset(size or cfg.dataset.size, cfg.master_seed if seed is None else seed,
                            cfg.thresholds, cfg.stats)


def split_dataset(cfg: Config, d: Dataset) -> tuple[Dataset, Dataset]:
    return split(d, cfg.dataset.train_fraction, derive_seed(cfg.master_seed, TAG_SPLIT))


def train_models(cfg: Config, d: Dataset):
    """Two-stage training on the configured split; returns ``(model, ae_history, clf_history)``."""
    train, val = split_dataset(cfg, d)
    seed = derive_seed(cfg.master_seed, TAG_TRAIN)
    model = neural.init_model(derive_seed(cfg.master_seed, TAG_INIT))
    model, ae_hist = neural.train_autoencoder(model, train, val, replace(cfg.train, seed=seed))
    model, clf_hist = neural.train_classifier(model, train, val, replace(cfg.train_classifier, seed=seed))
    return model, ae_hist, clf_hist


def write_history(path, history) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for row in history:
            w.writerow(["" if row[c] is None else (row[c] if c == "epoch" else repr(float(row[c])))
                        for c in HISTORY_COLUMNS])


def write_codes(path, model, d: Dataset) -> None:
    """Latent codes plus rule labels, one row per sample, for external plotting."""
    if isinstance(model, neural.QuantizedModel):
        model = model.dequantized()
    codes = neural.encode(model, d.features)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"code_{i}" for i in range(codes.shape[1])] + ["label"])
        for c, y in zip(codes, d.labels):
            w.writerow([repr(float(v)) for v in c] + [int(y)])


def predict(model, x):
    if isinstance(model, neural.QuantizedModel):
        return neural.predict_quantized(model, x)
    return neural.predict(model, x)


def evaluate(model, d: Dataset, offsets=None) -> dict:
    preds = predict(model, d.features)
    cm = evaluation.confusion(preds, d.labels)
    return {
        "confusion_matrix": cm.tolist(),
        "labels": [label.title for label in SemanticLabel],
        "metrics": evaluation.metrics(cm),
        "jamming_feature_experiment": evaluation.jamming_feature_experiment(d, model, offsets),
        "n": len(d),
    }


def simulate(cfg: Config, model, d: Dataset, keyseed: int | None = None, n_sessions: int | None = None,
             params: ChannelParams | None = None, width: int | None = None) -> dict:
    keys = protocol.enroll(derive_seed(cfg.master_seed, TAG_ENROLL) if keyseed is None else keyseed)
    camp = protocol.CampaignConfig(params=params or cfg.channel, width=width or cfg.campaign.width,
                                   master_seed=derive_seed(cfg.master_seed, TAG_CAMPAIGN), energy=cfg.energy)
    return protocol.run_campaign(n_sessions or cfg.campaign.n_sessions, d, model, keys, camp)


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_all(cfg: Config, out_dir) -> dict:
    """gen -> train -> quantize -> eval -> simulate -> energy; returns a summary dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = make_dataset(cfg)
    save_dataset(d, out / "dataset.csv")
    model, ae_hist, clf_hist = train_models(cfg, d)
    modelio.save_model(model, out / "model.bin")
    write_history(out / "history_autoencoder.csv", ae_hist)
    write_history(out / "history_classifier.csv", clf_hist)
    qmodel = neural.quantize(model)
    modelio.save_model(qmodel, out / "model_int8.bin")

    _, val = split_dataset(cfg, d)
    report = {"float": evaluate(model, val), "int8": evaluate(qmodel, val)}
    dump_json(out / "eval.json", report)
    write_codes(out / "codes.csv", model, val)

    campaign = simulate(cfg, model, d)
    dump_json(out / "campaign.json", campaign)
    rows = energy.compare_report(p=cfg.energy)
    (out / "energy.csv").write_text(energy.report_csv(rows), encoding="utf-8")
    return {
        "accuracy": report["float"]["metrics"]["accuracy"],
        "accuracy_int8": report["int8"]["metrics"]["accuracy"],
        "bob_recovery": campaign["bob"]["concept_recovery"]["rate"],
        "eve_recovery": campaign["eve"]["concept_recovery"]["rate"],
        "files": sorted(p.name for p in out.iterdir()),
    }

