import pytest

from patchfuse.metrics import (
    REPORT_CSV_HEADER,
    Prediction,
    build_report,
    image_accuracy,
    patient_accuracy,
)


def pred(image_id, patient, true, predicted, mag=40):
    return Prediction(
        image_id=image_id, patient_id=patient,
        true_label=true, predicted_label=predicted, magnification=mag,
    )


def patient_block(patient, n_correct, n_total, mag=40):
    out = []
    for i in range(n_total):
        correct = i < n_correct
        out.append(pred(f"{patient}-{i}", patient, 0, 0 if correct else 1, mag))
    return out


class TestImageAccuracy:
    def test_nine_of_ten(self):
        assert image_accuracy(patient_block("A", 9, 10)) == 0.9

    def test_all_correct(self):
        assert image_accuracy(patient_block("A", 5, 5)) == 1.0

    def test_none_correct(self):
        assert image_accuracy(patient_block("A", 0, 4)) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            image_accuracy([])


class TestPatientAccuracy:
    def test_fixture_two_patients(self):
        preds = patient_block("A", 2, 4) + patient_block("B", 1, 1)
        assert patient_accuracy(preds) == 0.75

    def test_single_patient_equals_image_accuracy(self):
        preds = patient_block("A", 3, 4)
        assert patient_accuracy(preds) == image_accuracy(preds)

    def test_constant_ratio(self):
        preds = patient_block("A", 1, 2) + patient_block("B", 2, 4) + patient_block("C", 3, 6)
        assert patient_accuracy(preds) == 0.5

    def test_unweighted_mean_ignores_duplication(self):
        base = patient_block("A", 2, 4) + patient_block("B", 1, 1)
        doubled = base + [
            Prediction(p.image_id + "-copy", p.patient_id, p.true_label,
                       p.predicted_label, p.magnification)
            for p in base if p.patient_id == "A"
        ]
        assert patient_accuracy(doubled) == patient_accuracy(base)

    def test_permutation_invariance(self):
        preds = patient_block("A", 2, 4) + patient_block("B", 1, 1)
        assert patient_accuracy(list(reversed(preds))) == patient_accuracy(preds)
        assert image_accuracy(list(reversed(preds))) == image_accuracy(preds)

    def test_image_equals_patient_when_balanced(self):
        # same image count and same correctness count per patient
        preds = patient_block("A", 2, 3) + patient_block("B", 2, 3) + patient_block("C", 2, 3)
        assert image_accuracy(preds) == patient_accuracy(preds)


def full_grid_groups():
    groups = {}
    configs = [(1, "-")] + [(lv, r) for lv in (2, 3) for r in ("sum", "product", "max")]
    for mag in (40, 100, 200, 400):
        for level, rule in configs:
            groups[(mag, level, rule)] = patient_block(f"P{mag}", 3, 4, mag)
    return groups


class TestReport:
    def test_full_grid_shape(self):
        report = build_report(full_grid_groups())
        assert len(report.rows) == 28  # 7 configurations x 4 magnifications
        configs = {(r.level, r.rule) for r in report.rows}
        assert len(configs) == 7
        mags = {r.magnification for r in report.rows}
        assert mags == {40, 100, 200, 400}

    def test_csv_header_and_shape(self):
        csv_text = build_report(full_grid_groups()).to_csv()
        lines = csv_text.strip().split("\n")
        assert lines[0] == REPORT_CSV_HEADER
        assert len(lines) == 1 + 28

    def test_percentage_formatting(self):
        # 116/125 = 0.928 exactly -> rendered as 92.8
        groups = {(40, 1, "-"): patient_block("A", 116, 125)}
        csv_text = build_report(groups).to_csv()
        row = csv_text.strip().split("\n")[1]
        assert row == "40,Non-split,-,92.8,92.8,125,116,1"

    def test_single_group_single_row(self):
        report = build_report({(100, 2, "max"): patient_block("A", 1, 2, 100)})
        assert len(report.rows) == 1
        row = report.rows[0]
        assert row.segmentation == "Quarter-split"
        assert row.rule == "max"
        assert row.n_images == 2 and row.n_correct == 1 and row.n_patients == 1

    def test_text_table_blocks(self):
        text = build_report(full_grid_groups()).to_text()
        assert "Image level" in text and "Patient level" in text
        assert "Non-split" in text and "Quarter-split" in text and "16-way-split" in text

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError):
            build_report({(40, 1, "-"): []})

    def test_row_ordering(self):
        report = build_report(full_grid_groups())
        keys = [(r.level, r.rule) for r in report.rows[::4]]
        assert keys == [
            (1, "-"), (2, "sum"), (2, "product"), (2, "max"),
            (3, "sum"), (3, "product"), (3, "max"),
        ]
