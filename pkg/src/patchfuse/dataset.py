"""Dataset ingestion, patient-disjoint splitting, and synthetic corpora.

The manifest is a CSV with header `image_id,path,label,magnification,
patient_id`; labels are "benign"/"malignant" (case-insensitive) or
"0"/"1", magnifications one of 40/100/200/400. Paths are interpreted
relative to the manifest's directory unless absolute.

Splitting is patient-disjoint: all images of one patient land in one
split, including across magnifications. Each magnification is balanced
independently against the target fractions by a greedy largest-deficit
assignment over seeded-shuffled patients.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ManifestError, SplitError
from .raster import RasterImage

MAGNIFICATIONS = (40, 100, 200, 400)
LABEL_NAMES = ("benign", "malignant")
SPLIT_NAMES = ("train", "validation", "test")
MANIFEST_COLUMNS = ["image_id", "path", "label", "magnification", "patient_id"]


@dataclass(frozen=True)
class DatasetRecord:
    image_id: str
    path: str
    label: int
    magnification: int
    patient_id: str


def _parse_label(token: str) -> int | None:
    t = token.strip().lower()
    if t in ("benign", "0"):
        return 0
    if t in ("malignant", "1"):
        return 1
    return None


def load_manifest(source) -> list[DatasetRecord]:
    """Parse and validate a manifest CSV from a text file object or string."""
    if isinstance(source, (str, bytes)):
        source = io.StringIO(source.decode("ascii") if isinstance(source, bytes) else source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ManifestError("empty manifest", line=1) from None
    if [h.strip() for h in header] != MANIFEST_COLUMNS:
        raise ManifestError(
            f"bad header {header!r}, expected {','.join(MANIFEST_COLUMNS)}", line=1
        )
    records = []
    seen_ids = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(MANIFEST_COLUMNS):
            raise ManifestError(f"expected {len(MANIFEST_COLUMNS)} columns, found {len(row)}", line=lineno)
        image_id, path, label_tok, mag_tok, patient_id = (c.strip() for c in row)
        if not image_id or not path or not patient_id:
            raise ManifestError("empty field", line=lineno)
        label = _parse_label(label_tok)
        if label is None:
            raise ManifestError(f"bad label {label_tok!r}", line=lineno)
        try:
            magnification = int(mag_tok)
        except ValueError:
            raise ManifestError(f"bad magnification {mag_tok!r}", line=lineno) from None
        if magnification not in MAGNIFICATIONS:
            raise ManifestError(
                f"magnification {magnification} not in {MAGNIFICATIONS}", line=lineno
            )
        if image_id in seen_ids:
            raise ManifestError(f"duplicate image_id {image_id!r}", line=lineno)
        seen_ids.add(image_id)
        records.append(DatasetRecord(image_id, path, label, magnification, patient_id))
    return records


def write_manifest(records, dest) -> None:
    """Write records back out in the manifest CSV schema."""
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(MANIFEST_COLUMNS)
    for r in records:
        writer.writerow(
            [r.image_id, r.path, LABEL_NAMES[r.label], r.magnification, r.patient_id]
        )


def parse_breakhis_filename(name: str):
    """Extract (label, magnification, patient_id) from a BreaKHis-style name.

    Example: SOB_B_TA-14-4659CD-40-001.png -> (0, 40, "TA-14-4659CD").
    Returns None when the name does not follow the convention; callers
    fall back to explicit manifest columns.
    """
    base = name.rsplit("/", 1)[-1]
    if "." in base:
        base = base[: base.rindex(".")]
    parts = base.split("_")
    if len(parts) != 3 or parts[1] not in ("B", "M"):
        return None
    fields = parts[2].split("-")
    if len(fields) < 3:
        return None
    try:
        magnification = int(fields[-2])
    except ValueError:
        return None
    if magnification not in MAGNIFICATIONS:
        return None
    patient_id = "-".join(fields[:-2])
    if not patient_id or not fields[-1]:
        return None
    label = 0 if parts[1] == "B" else 1
    return label, magnification, patient_id


@dataclass(frozen=True)
class SplitAssignment:
    """image_id -> split name, plus the inputs that produced it."""

    assignment: dict[str, str]
    seed: int
    fractions: tuple[float, float, float]

    def split_of(self, image_id: str) -> str:
        return self.assignment[image_id]

    def ids_in(self, split_name: str) -> list[str]:
        return sorted(i for i, s in self.assignment.items() if s == split_name)


def split(records, fractions, seed: int) -> SplitAssignment:
    """Assign every record to train/validation/test, patient-disjoint.

    Per magnification (ascending), that magnification's patients are
    shuffled with the seeded generator and greedily assigned to the split
    with the largest remaining image-count deficit. A patient already
    assigned while handling an earlier magnification keeps its split, so
    the assignment is patient-disjoint across the whole corpus. If a
    split ends up without patients in some magnification, the newest
    movable patient of the most-populated split is moved over.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise SplitError(f"fractions must be three positive numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise SplitError(f"fractions must sum to 1, got {sum(fractions)}")
    records = list(records)
    if not records:
        raise SplitError("no records to split")

    rng = np.random.default_rng(seed)
    patient_split: dict[str, str] = {}
    by_mag: dict[int, list[DatasetRecord]] = {}
    for r in records:
        by_mag.setdefault(r.magnification, []).append(r)

    for mag in sorted(by_mag):
        recs = by_mag[mag]
        patients: dict[str, int] = {}
        for r in recs:
            patients[r.patient_id] = patients.get(r.patient_id, 0) + 1
        if len(patients) < 3:
            raise SplitError(
                f"magnification {mag} has {len(patients)} patient(s); "
                "need at least 3 to populate train/validation/test"
            )
        ordered = sorted(patients)
        order = [ordered[i] for i in rng.permutation(len(ordered))]

        total = len(recs)
        targets = {s: f * total for s, f in zip(SPLIT_NAMES, fractions)}
        counts = dict.fromkeys(SPLIT_NAMES, 0)
        members: dict[str, list[str]] = {s: [] for s in SPLIT_NAMES}
        newly_assigned: list[str] = []
        for p in order:
            if p in patient_split:
                s = patient_split[p]
            else:
                s = max(SPLIT_NAMES, key=lambda name: targets[name] - counts[name])
                patient_split[p] = s
                newly_assigned.append(p)
            counts[s] += patients[p]
            members[s].append(p)

        for empty in SPLIT_NAMES:
            if members[empty]:
                continue
            donors = sorted(
                (s for s in SPLIT_NAMES if len(members[s]) >= 2),
                key=lambda s: (-len(members[s]), SPLIT_NAMES.index(s)),
            )
            moved = False
            for donor in donors:
                movable = [p for p in reversed(newly_assigned) if p in members[donor]]
                if movable:
                    p = movable[0]
                    members[donor].remove(p)
                    members[empty].append(p)
                    patient_split[p] = empty
                    moved = True
                    break
            if not moved:
                raise SplitError(
                    f"cannot populate split {empty!r} at magnification {mag}: "
                    "all patients are pinned by other magnifications"
                )

    assignment = {r.image_id: patient_split[r.patient_id] for r in records}
    return SplitAssignment(assignment=assignment, seed=seed, fractions=fractions)


def write_split(sa: SplitAssignment, dest) -> None:
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["image_id", "split"])
    for image_id in sorted(sa.assignment):
        writer.writerow([image_id, sa.assignment[image_id]])


def read_split(source) -> dict[str, str]:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["image_id", "split"]:
        raise ManifestError("bad split file header, expected image_id,split", line=1)
    out = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2 or row[1] not in SPLIT_NAMES:
            raise ManifestError(f"bad split row {row!r}", line=lineno)
        if row[0] in out:
            raise ManifestError(f"duplicate image_id {row[0]!r}", line=lineno)
        out[row[0]] = row[1]
    return out


def generate_synthetic(
    n_patients: int, images_per_patient: int, width: int, height: int, seed: int
) -> tuple[list[DatasetRecord], dict[str, RasterImage]]:
    """Build a deterministic two-class corpus with well-separated statistics.

    Class 0 (benign): bright, low-variance texture (base level 190-230,
    sigma 6). Class 1 (malignant): dark, high-variance texture (base
    40-80, sigma 28) with 2-5 bright elliptical blobs. Patients alternate
    classes; all records carry magnification 40. Paths follow
    `<class>/<patient>/<image>.ppm`.
    """
    if n_patients < 1 or images_per_patient < 1:
        raise ValueError("counts must be at least 1")
    rng = np.random.default_rng(seed)
    records = []
    images = {}
    ys, xs = np.mgrid[0:height, 0:width]
    for p in range(n_patients):
        label = p % 2
        patient_id = f"SYN{p:03d}"
        for i in range(images_per_patient):
            image_id = f"{patient_id}-{i:03d}"
            if label == 0:
                base = rng.uniform(190.0, 230.0)
                pix = base + rng.normal(0.0, 6.0, size=(height, width, 3))
            else:
                base = rng.uniform(40.0, 80.0)
                pix = base + rng.normal(0.0, 28.0, size=(height, width, 3))
                for _ in range(int(rng.integers(2, 6))):
                    cy = rng.uniform(0, height)
                    cx = rng.uniform(0, width)
                    ry = rng.uniform(0.08, 0.25) * height + 1.0
                    rx = rng.uniform(0.08, 0.25) * width + 1.0
                    bump = rng.uniform(60.0, 140.0)
                    mask = ((ys - cy) / ry) ** 2 + ((xs - cx) / rx) ** 2 <= 1.0
                    pix[mask] += bump
            clipped = np.clip(pix, 0.0, 255.0)
            arr = np.floor(clipped + 0.5).astype(np.uint8)
            image = RasterImage(pixels=arr)
            path = f"{LABEL_NAMES[label]}/{patient_id}/{image_id}.ppm"
            records.append(DatasetRecord(image_id, path, label, 40, patient_id))
            images[image_id] = image
    return records, images
