"""Image-level and patient-level accuracy, and the evaluation report.

Image accuracy is correct/total over all predictions. Patient accuracy
is the unweighted mean over patients of each patient's own per-image
accuracy, so a patient with many images counts the same as one with few.
"""

from __future__ import annotations

from dataclasses import dataclass

SEGMENTATION_NAMES = {1: "Non-split", 2: "Quarter-split", 3: "16-way-split"}
REPORT_CSV_HEADER = (
    "magnification,segmentation,fusion,image_accuracy,patient_accuracy,"
    "n_images,n_correct,n_patients"
)
_RULE_ORDER = {"-": 0, "sum": 1, "product": 2, "max": 3}


@dataclass(frozen=True)
class Prediction:
    image_id: str
    patient_id: str
    true_label: int
    predicted_label: int
    magnification: int


def image_accuracy(predictions) -> float:
    """Fraction of predictions whose predicted label matches the truth."""
    preds = list(predictions)
    if not preds:
        raise ValueError("image_accuracy of an empty prediction list")
    correct = sum(1 for p in preds if p.predicted_label == p.true_label)
    return correct / len(preds)


def patient_accuracy(predictions) -> float:
    """Unweighted mean over patients of per-patient image accuracy."""
    preds = list(predictions)
    if not preds:
        raise ValueError("patient_accuracy of an empty prediction list")
    totals: dict[str, int] = {}
    corrects: dict[str, int] = {}
    for p in preds:
        totals[p.patient_id] = totals.get(p.patient_id, 0) + 1
        if p.predicted_label == p.true_label:
            corrects[p.patient_id] = corrects.get(p.patient_id, 0) + 1
    ratios = [corrects.get(pid, 0) / totals[pid] for pid in totals]
    return sum(ratios) / len(ratios)


@dataclass(frozen=True)
class ReportRow:
    magnification: int
    level: int
    rule: str
    image_accuracy: float
    patient_accuracy: float
    n_images: int
    n_correct: int
    n_patients: int

    @property
    def segmentation(self) -> str:
        return SEGMENTATION_NAMES[self.level]


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[ReportRow, ...]

    def to_csv(self) -> str:
        lines = [REPORT_CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.magnification},{r.segmentation},{r.rule},"
                f"{100.0 * r.image_accuracy:.1f},{100.0 * r.patient_accuracy:.1f},"
                f"{r.n_images},{r.n_correct},{r.n_patients}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Aligned table: one block per accuracy level, magnifications as columns."""
        mags = sorted({r.magnification for r in self.rows})
        configs = sorted({(r.level, r.rule) for r in self.rows},
                         key=lambda c: (c[0], _RULE_ORDER.get(c[1], 99)))
        cells = {(r.magnification, r.level, r.rule): r for r in self.rows}

        def block(title: str, pick) -> list[str]:
            lines = [title]
            header = f"{'Segmentation':<14} {'Fusion':<8}" + "".join(
                f" {m:>6}" for m in mags
            )
            lines.append(header)
            lines.append("-" * len(header))
            prev_level = None
            for level, rule in configs:
                seg = SEGMENTATION_NAMES[level] if level != prev_level else ""
                prev_level = level
                row = f"{seg:<14} {rule:<8}"
                for m in mags:
                    r = cells.get((m, level, rule))
                    row += f" {100.0 * pick(r):>6.1f}" if r is not None else f" {'-':>6}"
                lines.append(row)
            return lines

        out = block("Image level", lambda r: r.image_accuracy)
        out.append("")
        out += block("Patient level", lambda r: r.patient_accuracy)
        return "\n".join(out) + "\n"


def build_report(groups: dict) -> EvaluationReport:
    """Assemble rows from {(magnification, level, rule): [Prediction, ...]}.

    Rows are ordered by (level, rule, magnification); the full
    configuration grid yields seven rows per magnification (one non-split
    plus three fusion rules at each of the two split levels).
    """
    rows = []
    for (mag, level, rule), preds in groups.items():
        preds = list(preds)
        if not preds:
            raise ValueError(f"empty prediction group {(mag, level, rule)}")
        rows.append(
            ReportRow(
                magnification=mag,
                level=level,
                rule=rule,
                image_accuracy=image_accuracy(preds),
                patient_accuracy=patient_accuracy(preds),
                n_images=len(preds),
                n_correct=sum(1 for p in preds if p.predicted_label == p.true_label),
                n_patients=len({p.patient_id for p in preds}),
            )
        )
    rows.sort(key=lambda r: (r.level, _RULE_ORDER.get(r.rule, 99), r.magnification))
    return EvaluationReport(rows=tuple(rows))
