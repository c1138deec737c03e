"""Command-line interface.

Stages are separate subcommands communicating through files, plus a
convenience `run-all` that drives the whole grid. All randomness comes
from explicit --seed flags, so identical invocations produce
byte-identical outputs. Messages go to stderr, data to files or stdout.

Exit codes: 0 success, 2 usage or validation error, 3 missing data,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import dataset, features, fusion, head, metrics, pipeline, quadtree, raster
from .errors import (
    EmptySplitError,
    ExtractionError,
    MissingFeaturesError,
    PatchfuseError,
    TrainingDivergenceError,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_DATA = 3
EXIT_NUMERICAL = 4


def _parse_size(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text)
    if not m:
        raise argparse.ArgumentTypeError(f"size must look like 64x64, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("fractions must be three comma-separated numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fractions {text!r}") from None


def _parse_rules(text: str) -> tuple[str, ...]:
    rules = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [r for r in rules if r not in fusion.RULES]
    if bad or not rules:
        raise argparse.ArgumentTypeError(f"rules must be from {fusion.RULES}, got {text!r}")
    return rules


def _parse_levels(text: str) -> tuple[int, ...]:
    try:
        levels = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad levels {text!r}") from None
    bad = [lv for lv in levels if lv not in quadtree.LEVELS]
    if bad or not levels:
        raise argparse.ArgumentTypeError(f"levels must be from {quadtree.LEVELS}, got {text!r}")
    return levels


def _parse_mags(text: str) -> tuple[int, ...]:
    try:
        mags = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad magnifications {text!r}") from None
    bad = [m for m in mags if m not in dataset.MAGNIFICATIONS]
    if bad or not mags:
        raise argparse.ArgumentTypeError(
            f"magnifications must be from {dataset.MAGNIFICATIONS}, got {text!r}"
        )
    return mags


def _load_manifest_file(path, magnification=None):
    with open(path, "r", encoding="ascii", newline="") as fh:
        records = dataset.load_manifest(fh)
    if magnification is not None:
        records = [r for r in records if r.magnification in magnification]
    return records


def _load_split_file(path):
    with open(path, "r", encoding="ascii", newline="") as fh:
        return dataset.read_split(fh)


def _split_of(split_map, record):
    try:
        return split_map[record.image_id]
    except KeyError:
        raise MissingFeaturesError([record.image_id]) from None


def cmd_synth(args) -> int:
    records, images = dataset.generate_synthetic(
        args.patients, args.images_per_patient, args.size[0], args.size[1], args.seed
    )
    out = Path(args.out)
    for rec in records:
        path = out / rec.path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(raster.encode_ppm(images[rec.image_id]))
    with open(out / "manifest.csv", "w", encoding="ascii", newline="") as fh:
        dataset.write_manifest(records, fh)
    print(f"wrote {len(records)} images and manifest.csv under {out}", file=sys.stderr)
    return EXIT_OK


def cmd_split(args) -> int:
    records = _load_manifest_file(args.manifest)
    sa = dataset.split(records, args.fractions, args.seed)
    with open(args.out, "w", encoding="ascii", newline="") as fh:
        dataset.write_split(sa, fh)
    print(f"assigned {len(sa.assignment)} images", file=sys.stderr)
    return EXIT_OK


def _ensure_cache_for(records, level, cache, backend, base_dir) -> int:
    """Fill `cache` with every patch id of `records` at `level`; returns misses."""
    n_new = 0
    for rec in records:
        ids = quadtree.patch_ids(rec.image_id, level)
        missing = [pid for pid in ids if pid not in cache]
        if not missing:
            continue
        image = pipeline.load_image_for(rec, base_dir)
        pset = quadtree.split(image, level, parent_id=rec.image_id)
        batch = []
        for patch in pset.patches:
            pid = quadtree.patch_id(rec.image_id, level, patch.row, patch.col)
            if pid in cache:
                continue
            batch.append(
                (pid, raster.resize_bilinear(patch.image, pipeline.INPUT_SIZE, pipeline.INPUT_SIZE))
            )
        features.extract_batch(batch, backend, cache)
        n_new += len(batch)
    return n_new


def cmd_extract(args) -> int:
    records = _load_manifest_file(args.manifest, args.magnification)
    if args.split:
        split_map = _load_split_file(args.split)
        records = [r for r in records if r.image_id in split_map]
    all_ids = [pid for r in records for pid in quadtree.patch_ids(r.image_id, args.level)]

    cache_path = Path(args.cache)
    if args.backend == "cache":
        cache = features.load_cache(cache_path)
        cache.require(all_ids)
        print(f"cache covers all {len(all_ids)} patch ids", file=sys.stderr)
        return EXIT_OK

    if cache_path.exists():
        cache = features.load_cache(cache_path)
    else:
        cache = features.FeatureCache(dim=features.FEATURE_DIM)
    backend = features.SyntheticBackend(args.seed)
    n_new = _ensure_cache_for(records, args.level, cache, backend, Path(args.manifest).parent)
    features.save_cache(cache, cache_path)
    print(f"extracted {n_new} new vectors ({len(cache)} total)", file=sys.stderr)
    return EXIT_OK


def _patch_examples(records, split_map, cache, level, split_name):
    out = []
    for rec in records:
        if _split_of(split_map, rec) != split_name:
            continue
        for pid in quadtree.patch_ids(rec.image_id, level):
            vec = cache.get(pid)
            if vec is None:
                raise MissingFeaturesError([pid])
            out.append(head.LabeledExample(features=vec.values.astype(np.float64), label=rec.label))
    return out


def cmd_train(args) -> int:
    records = _load_manifest_file(args.manifest, args.magnification)
    split_map = _load_split_file(args.split)
    cache = features.load_cache(args.cache)
    train_set = _patch_examples(records, split_map, cache, args.level, "train")
    val_set = _patch_examples(records, split_map, cache, args.level, "validation")
    if not train_set or not val_set:
        raise EmptySplitError("empty training or validation split")
    config = head.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        patience=args.patience,
        seed=args.seed,
    )
    model = head.train(train_set, val_set, config)
    Path(args.out).write_bytes(head.save_model(model))
    meta = model.meta
    print(
        f"trained {meta.epochs_run} epoch(s), best validation loss {meta.final_val_loss:.6f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    records = _load_manifest_file(args.manifest, args.magnification)
    split_map = _load_split_file(args.split)
    cache = features.load_cache(args.cache)
    model = head.load_model(Path(args.model).read_bytes())
    test_recs = [r for r in records if _split_of(split_map, r) == "test"]
    if not test_recs:
        raise EmptySplitError("test split is empty")

    out = Path(args.out)
    (out / "predictions").mkdir(parents=True, exist_ok=True)
    rules = ("-",) if args.level == 1 else args.rules
    groups: dict[tuple[int, int, str], list[metrics.Prediction]] = {}
    rows: dict[tuple[int, str], list] = {}
    for rec in sorted(test_recs, key=lambda r: r.image_id):
        probs = []
        for pid in quadtree.patch_ids(rec.image_id, args.level):
            vec = cache.get(pid)
            if vec is None:
                raise MissingFeaturesError([pid])
            probs.append(head.forward(model, vec.values.astype(np.float64)))
        for rule in rules:
            decision = fusion.fuse(probs, "sum" if rule == "-" else rule)
            pred = metrics.Prediction(
                image_id=rec.image_id,
                patient_id=rec.patient_id,
                true_label=rec.label,
                predicted_label=decision.predicted_class,
                magnification=rec.magnification,
            )
            groups.setdefault((rec.magnification, args.level, rule), []).append(pred)
            rows.setdefault((rec.magnification, rule), []).append((rec, decision))

    for (mag, rule), entries in sorted(rows.items()):
        name = "none" if rule == "-" else rule
        lines = ["image_id,patient_id,true_label,predicted_label,score_benign,score_malignant"]
        for rec, decision in entries:
            s0, s1 = decision.per_class_scores
            lines.append(
                f"{rec.image_id},{rec.patient_id},{rec.label},"
                f"{decision.predicted_class},{s0:.9e},{s1:.9e}"
            )
        (out / "predictions" / f"{mag}-L{args.level}-{name}.csv").write_bytes(
            ("\n".join(lines) + "\n").encode("ascii")
        )

    report = metrics.build_report(groups)
    (out / "report.csv").write_bytes(report.to_csv().encode("ascii"))
    (out / "report.txt").write_bytes(report.to_text().encode("ascii"))
    print(report.to_text(), end="", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    data = Path(args.image).read_bytes()
    image = raster.decode_ppm(data)
    model = head.load_model(Path(args.model).read_bytes())
    backend = features.SyntheticBackend(args.feature_seed)
    rule = args.rule
    if args.level == 1 and rule != "-":
        print("level 1 is a single patch; --rule is ignored", file=sys.stderr)
        rule = "-"
    decision = pipeline.predict_image(
        model, image, args.level, "sum" if rule == "-" else rule, backend,
        image_id=Path(args.image).stem,
    )
    s0, s1 = decision.per_class_scores
    label = dataset.LABEL_NAMES[decision.predicted_class]
    print(f"class={label} scores={s0:.6g},{s1:.6g} rule={rule} patches={decision.n_patches}")
    return EXIT_OK


def cmd_run_all(args) -> int:
    config = pipeline.ExperimentConfig(
        manifest=args.manifest,
        out_dir=args.out,
        magnifications=args.magnifications,
        levels=args.levels,
        rules=args.rules,
        fractions=args.fractions,
        learning_rate=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        patience=args.patience,
        backend=args.backend,
        cache_source=args.cache,
        seed=args.seed,
    )
    report = pipeline.run_experiment(config)
    print(report.to_text(), end="", file=sys.stderr)
    print(f"report written to {Path(args.out) / 'report.csv'}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchfuse",
        description="Patch-based pathology image classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--patients", type=int, required=True)
    p.add_argument("--images-per-patient", type=int, required=True)
    p.add_argument("--size", type=_parse_size, required=True, help="WxH, e.g. 64x64")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="assign images to train/validation/test")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fractions", type=_parse_fractions, default=(0.7, 0.15, 0.15))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("extract", help="compute or verify patch features")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--level", type=int, choices=quadtree.LEVELS, required=True)
    p.add_argument("--backend", choices=("synthetic", "cache"), default="synthetic")
    p.add_argument("--cache", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--magnification", type=_parse_mags, default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the classifier head on cached features")
    p.add_argument("--cache", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--level", type=int, choices=quadtree.LEVELS, required=True)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--magnification", type=_parse_mags, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on the test split")
    p.add_argument("--model", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--level", type=int, choices=quadtree.LEVELS, required=True)
    p.add_argument("--rules", type=_parse_rules, default=("sum", "product", "max"))
    p.add_argument("--magnification", type=_parse_mags, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one PPM image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--level", type=int, choices=quadtree.LEVELS, required=True)
    p.add_argument("--rule", choices=fusion.RULES + ("-",), default="sum")
    p.add_argument("--feature-seed", type=int, default=0)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("run-all", help="run the full experiment grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--levels", type=_parse_levels, default=(1, 2, 3))
    p.add_argument("--rules", type=_parse_rules, default=("sum", "product", "max"))
    p.add_argument("--magnifications", type=_parse_mags, default=None)
    p.add_argument("--fractions", type=_parse_fractions, default=(0.7, 0.15, 0.15))
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--backend", choices=("synthetic", "cache"), default="synthetic")
    p.add_argument("--cache", default=None)
    p.set_defaults(func=cmd_run_all)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except TrainingDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MissingFeaturesError, EmptySplitError, ExtractionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PatchfuseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
