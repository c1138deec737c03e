"""End-to-end experiment orchestration.

For each requested magnification and segmentation level: split the
corpus (patient-disjoint), tile each image, resize patches to the
299x299 model input, extract-or-reuse cached features, train a head on
the training-split patches (each patch inherits its parent label), fuse
per-patch probabilities over the test split, and report image- and
patient-level accuracy.

Everything is deterministic given the config. The master seed feeds each
stage at a fixed offset: splitting uses seed, training uses seed + 1
(one stream covers init and shuffling), synthetic extraction uses
seed + 2.

Output directory layout:
    splits/<mag>.csv
    features/<mag>-L<level>.cache      (synthetic backend only)
    models/<mag>-L<level>.model
    predictions/<mag>-L<level>-<rule>.csv
    report.csv
    report.txt
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataset, features, fusion, head, metrics, quadtree, raster
from .errors import EmptySplitError, MissingFeaturesError, SplitError

INPUT_SIZE = 299


@dataclass
class ExperimentConfig:
    manifest: str | os.PathLike
    out_dir: str | os.PathLike
    magnifications: tuple[int, ...] | None = None
    levels: tuple[int, ...] = (1, 2, 3)
    rules: tuple[str, ...] = ("sum", "product", "max")
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    learning_rate: float = 0.01
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    backend: str = "synthetic"
    cache_source: str | os.PathLike | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.levels:
            raise ValueError("at least one segmentation level is required")
        bad = [lv for lv in self.levels if lv not in quadtree.LEVELS]
        if bad:
            raise ValueError(f"invalid levels {bad}")
        if any(lv != 1 for lv in self.levels) and not self.rules:
            raise ValueError("at least one fusion rule is required for split levels")
        bad_rules = [r for r in self.rules if r not in fusion.RULES]
        if bad_rules:
            raise ValueError(f"invalid fusion rules {bad_rules}")
        if self.backend not in ("synthetic", "cache"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "cache" and self.cache_source is None:
            raise ValueError("backend 'cache' requires cache_source")


def load_image_for(record: dataset.DatasetRecord, base_dir) -> raster.RasterImage:
    """Read the PPM behind a record; paths resolve against the manifest dir."""
    path = Path(record.path)
    if not path.is_absolute():
        path = Path(base_dir) / path
    with open(path, "rb") as fh:
        return raster.decode_ppm(fh.read())


def patch_probabilities(
    model: head.ClassifierModel,
    image: raster.RasterImage,
    level: int,
    backend,
    image_id: str = "",
) -> list[np.ndarray]:
    """Per-patch class probabilities: split, resize, extract, forward.

    Computed once per image; callers fuse the same list under any number
    of rules without re-running the backend.
    """
    pset = quadtree.split(image, level, parent_id=image_id)
    probs = []
    for patch in pset.patches:
        pid = quadtree.patch_id(image_id, level, patch.row, patch.col)
        resized = raster.resize_bilinear(patch.image, INPUT_SIZE, INPUT_SIZE)
        vec = backend.extract(pid, resized)
        probs.append(head.forward(model, np.asarray(vec, dtype=np.float64)))
    return probs


def predict_image(
    model: head.ClassifierModel,
    image: raster.RasterImage,
    level: int,
    rule: str,
    backend,
    image_id: str = "",
) -> fusion.FusionDecision:
    """Classify one image at a level; at level 1 fusion is a pass-through."""
    probs = patch_probabilities(model, image, level, backend, image_id)
    return fusion.fuse(probs, rule)


def _rule_filename(rule: str) -> str:
    return "none" if rule == "-" else rule


class _ExperimentRun:
    def __init__(self, config: ExperimentConfig):
        self.cfg = config
        self.out = Path(config.out_dir)
        self.base_dir = Path(config.manifest).parent
        self.split_seed = config.seed
        self.train_seed = config.seed + 1
        self.feature_seed = config.seed + 2
        self.source_cache = None
        if config.backend == "cache":
            self.source_cache = features.load_cache(config.cache_source)

    def run(self) -> metrics.EvaluationReport:
        cfg = self.cfg
        with open(cfg.manifest, "r", encoding="ascii", newline="") as fh:
            records = dataset.load_manifest(fh)
        mags = tuple(cfg.magnifications or sorted({r.magnification for r in records}))
        records = [r for r in records if r.magnification in mags]
        if not records:
            raise SplitError(f"manifest has no records at magnifications {mags}")

        for sub in ("splits", "features", "models", "predictions"):
            (self.out / sub).mkdir(parents=True, exist_ok=True)

        assignment = dataset.split(records, cfg.fractions, self.split_seed)
        groups: dict[tuple[int, int, str], list[metrics.Prediction]] = {}
        for mag in mags:
            recs = sorted(
                (r for r in records if r.magnification == mag),
                key=lambda r: r.image_id,
            )
            self._write_split_csv(mag, recs, assignment)
            for level in cfg.levels:
                cache = self._ensure_features(mag, level, recs)
                model = self._train_level(mag, level, recs, assignment, cache)
                self._predict_level(mag, level, recs, assignment, cache, model, groups)

        report = metrics.build_report(groups)
        (self.out / "report.csv").write_bytes(report.to_csv().encode("ascii"))
        (self.out / "report.txt").write_bytes(report.to_text().encode("ascii"))
        return report

    def _write_split_csv(self, mag, recs, assignment):
        sub = {r.image_id: assignment.split_of(r.image_id) for r in recs}
        lines = ["image_id,split"] + [f"{i},{sub[i]}" for i in sorted(sub)]
        path = self.out / "splits" / f"{mag}.csv"
        path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))

    def _ensure_features(self, mag, level, recs) -> features.FeatureCache:
        """Return a cache covering every patch id of recs at this level."""
        all_ids = [
            pid for r in recs for pid in quadtree.patch_ids(r.image_id, level)
        ]
        if self.source_cache is not None:
            self.source_cache.require(all_ids)
            return self.source_cache

        cache_path = self.out / "features" / f"{mag}-L{level}.cache"
        if cache_path.exists():
            cache = features.load_cache(cache_path)
        else:
            cache = features.FeatureCache(dim=features.FEATURE_DIM)
        backend = features.SyntheticBackend(self.feature_seed)
        for r in recs:
            ids = quadtree.patch_ids(r.image_id, level)
            missing = [pid for pid in ids if pid not in cache]
            if not missing:
                continue
            image = load_image_for(r, self.base_dir)
            pset = quadtree.split(image, level, parent_id=r.image_id)
            batch = []
            for patch in pset.patches:
                pid = quadtree.patch_id(r.image_id, level, patch.row, patch.col)
                if pid in cache:
                    continue
                batch.append(
                    (pid, raster.resize_bilinear(patch.image, INPUT_SIZE, INPUT_SIZE))
                )
            features.extract_batch(batch, backend, cache)
        features.save_cache(cache, cache_path)
        return cache

    def _examples(self, recs, assignment, cache, level, split_name):
        out = []
        for r in recs:
            if assignment.split_of(r.image_id) != split_name:
                continue
            for pid in quadtree.patch_ids(r.image_id, level):
                vec = cache.get(pid)
                if vec is None:
                    raise MissingFeaturesError([pid])
                out.append(
                    head.LabeledExample(
                        features=vec.values.astype(np.float64), label=r.label
                    )
                )
        return out

    def _train_level(self, mag, level, recs, assignment, cache) -> head.ClassifierModel:
        cfg = self.cfg
        train_set = self._examples(recs, assignment, cache, level, "train")
        val_set = self._examples(recs, assignment, cache, level, "validation")
        if not train_set or not val_set:
            raise EmptySplitError(
                f"magnification {mag}: empty training or validation split"
            )
        model = head.train(
            train_set,
            val_set,
            head.TrainConfig(
                learning_rate=cfg.learning_rate,
                batch_size=cfg.batch_size,
                max_epochs=cfg.max_epochs,
                patience=cfg.patience,
                seed=self.train_seed,
            ),
        )
        path = self.out / "models" / f"{mag}-L{level}.model"
        path.write_bytes(head.save_model(model))
        return model

    def _predict_level(self, mag, level, recs, assignment, cache, model, groups):
        cfg = self.cfg
        test_recs = [r for r in recs if assignment.split_of(r.image_id) == "test"]
        if not test_recs:
            raise EmptySplitError(f"magnification {mag}: empty test split")
        rules = ("-",) if level == 1 else tuple(cfg.rules)
        rows = {rule: [] for rule in rules}
        for r in test_recs:
            probs = []
            for pid in quadtree.patch_ids(r.image_id, level):
                vec = cache.get(pid)
                if vec is None:
                    raise MissingFeaturesError([pid])
                probs.append(head.forward(model, vec.values.astype(np.float64)))
            for rule in rules:
                decision = fusion.fuse(probs, "sum" if rule == "-" else rule)
                pred = metrics.Prediction(
                    image_id=r.image_id,
                    patient_id=r.patient_id,
                    true_label=r.label,
                    predicted_label=decision.predicted_class,
                    magnification=mag,
                )
                groups.setdefault((mag, level, rule), []).append(pred)
                rows[rule].append((r, decision))
        for rule in rules:
            lines = ["image_id,patient_id,true_label,predicted_label,score_benign,score_malignant"]
            for r, decision in rows[rule]:
                s0, s1 = decision.per_class_scores
                lines.append(
                    f"{r.image_id},{r.patient_id},{r.label},"
                    f"{decision.predicted_class},{s0:.9e},{s1:.9e}"
                )
            path = self.out / "predictions" / f"{mag}-L{level}-{_rule_filename(rule)}.csv"
            path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def run_experiment(config: ExperimentConfig) -> metrics.EvaluationReport:
    """Run the full experiment grid described by the config."""
    return _ExperimentRun(config).run()
