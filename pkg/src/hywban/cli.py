"""Command-line entry point.

On failure every command exits non-zero and prints one JSON line to stderr::

    {"error": "FormatError", "message": "bad magic"}
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import energy, modelio, neural, pipeline
from .config import load_config
from .phychannel import Mode
from .synthgen import load_dataset, save_dataset


def _cmd_gen_data(cfg, args):
    d = pipeline.make_dataset(cfg, args.size, args.seed)
    save_dataset(d, args.out)
    return {"rows": len(d), "labels": d.label_histogram(), "out": str(args.out)}


def _cmd_train(cfg, args):
    d = load_dataset(args.data)
    model, ae_hist, clf_hist = pipeline.train_models(cfg, d)
    modelio.save_model(model, args.out_model)
    stem = Path(args.out_model)
    pipeline.write_history(stem.with_name(stem.stem + "_history_autoencoder.csv"), ae_hist)
    pipeline.write_history(stem.with_name(stem.stem + "_history_classifier.csv"), clf_hist)
    return {"out": str(args.out_model), "val_accuracy": clf_hist[-1]["val_accuracy"] if clf_hist else None,
            "overfit": clf_hist[-1].get("overfit") if clf_hist else None}


def _cmd_quantize(cfg, args):
    model = modelio.load_model(args.model)
    if isinstance(model, neural.QuantizedModel):
        raise ValueError("model is already quantized")
    modelio.save_model(neural.quantize(model), args.out)
    return {"out": str(args.out)}


def _cmd_eval(cfg, args):
    model = modelio.load_model(args.model)
    d = load_dataset(args.data)
    if not args.all_rows:
        _, d = pipeline.split_dataset(cfg, d)
    offsets = {"snr_db": args.snr_offset, "input_power_mw": args.power_offset}
    report = pipeline.evaluate(model, d, offsets)
    if args.out:
        pipeline.dump_json(args.out, report)
    if args.codes:
        pipeline.write_codes(args.codes, model, d)
    return {"accuracy": report["metrics"]["accuracy"], "n": report["n"], "out": args.out}


def _cmd_simulate(cfg, args):
    model = modelio.load_model(args.model)
    d = load_dataset(args.data)
    params = cfg.channel
    if args.jam_ratio is not None:
        params = replace(params, jam_power_ratio=args.jam_ratio)
    if args.jam == "off":
        params = replace(params, jam_power_ratio=0.0)
    if args.mode:
        params = replace(params, mode=Mode(args.mode))
    result = pipeline.simulate(cfg, model, d, keyseed=args.keyseed, n_sessions=args.n, params=params,
                               width=args.width)
    if args.out:
        pipeline.dump_json(args.out, result)
    return {"bob_recovery": result["bob"]["concept_recovery"]["rate"],
            "eve_recovery": result["eve"]["concept_recovery"]["rate"], "out": args.out}


def _cmd_energy(cfg, args):
    schemes = [energy.Scheme("sc", b) for b in args.bits]
    if args.jam_bits is None:
        schemes += [energy.Scheme("sc", b, b) for b in args.bits]
    else:
        schemes += [energy.Scheme("sc", b, j) for b in args.bits for j in args.jam_bits if 0 < j <= b]
    schemes += [energy.Scheme("ecdh", k) for k in args.ecdh_bits]
    rows = energy.compare_report(schemes, cfg.energy)
    text = energy.report_json(rows) if args.format == "json" else energy.report_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return None


def _cmd_pipeline(cfg, args):
    return pipeline.run_all(cfg, args.out_dir or cfg.paths.out_dir)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hywban", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="TOML config file (default: $HYWBAN_CONFIG)")
    p.add_argument("--master-seed", type=int, help="override master_seed")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", help="write a labeled dataset CSV and JSON sidecar")
    s.add_argument("--size", type=int)
    s.add_argument("--seed", type=int, help="dataset seed (default: master seed)")
    s.add_argument("--out", type=Path, default=Path("dataset.csv"))
    s.set_defaults(func=_cmd_gen_data)

    s = sub.add_parser("train", help="two-stage training; writes model and history CSVs")
    s.add_argument("--data", type=Path, required=True)
    s.add_argument("--out-model", type=Path, default=Path("model.bin"))
    s.set_defaults(func=_cmd_train)

    s = sub.add_parser("quantize", help="write the int8 model")
    s.add_argument("--model", type=Path, required=True)
    s.add_argument("--out", type=Path, default=Path("model_int8.bin"))
    s.set_defaults(func=_cmd_quantize)

    s = sub.add_parser("eval", help="confusion matrix, metrics and latent-code export")
    s.add_argument("--model", type=Path, required=True)
    s.add_argument("--data", type=Path, required=True)
    s.add_argument("--all-rows", action="store_true", help="evaluate every row instead of the held-out split")
    s.add_argument("--snr-offset", type=float, default=10.0)
    s.add_argument("--power-offset", type=float, default=0.05)
    s.add_argument("--out", type=Path)
    s.add_argument("--codes", type=Path, help="write latent codes CSV here")
    s.set_defaults(func=_cmd_eval)

    s = sub.add_parser("simulate", help="jammed-exchange campaign")
    s.add_argument("--model", type=Path, required=True)
    s.add_argument("--data", type=Path, required=True)
    s.add_argument("--keyseed", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--jam", choices=("on", "off"), default="on")
    s.add_argument("--jam-ratio", type=float)
    s.add_argument("--width", type=int, choices=(8, 16))
    s.add_argument("--mode", choices=[m.value for m in Mode])
    s.add_argument("--out", type=Path)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("energy", help="energy comparison table")
    s.add_argument("--bits", type=int, nargs="+", default=[8, 16])
    s.add_argument("--jam-bits", type=int, nargs="+", help="jam counts to pair with each --bits (default: jam every bit)")
    s.add_argument("--ecdh-bits", type=int, nargs="+", default=[160, 256])
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--out", type=Path)
    s.set_defaults(func=_cmd_energy)

    s = sub.add_parser("pipeline", help="gen -> train -> quantize -> eval -> simulate -> energy")
    s.add_argument("--out-dir", type=Path)
    s.set_defaults(func=_cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.master_seed is not None:
            cfg = replace(cfg, master_seed=args.master_seed)
        summary = args.func(cfg, args)
    except Exception as exc:  # every failure becomes one machine-readable line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    if summary is not None:
        print(json.dumps(summary, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
