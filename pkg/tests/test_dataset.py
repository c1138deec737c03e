import io

import numpy as np
import pytest

from patchfuse.dataset import (
    DatasetRecord,
    generate_synthetic,
    load_manifest,
    parse_breakhis_filename,
    read_split,
    split,
    write_manifest,
    write_split,
)
from patchfuse.errors import ManifestError, SplitError

HEADER = "image_id,path,label,magnification,patient_id"


def manifest(*rows):
    return "\n".join([HEADER, *rows]) + "\n"


class TestManifest:
    def test_two_valid_rows(self):
        records = load_manifest(manifest(
            "i1,a/b.ppm,benign,40,P1",
            "i2,a/c.ppm,malignant,400,P2",
        ))
        assert records == [
            DatasetRecord("i1", "a/b.ppm", 0, 40, "P1"),
            DatasetRecord("i2", "a/c.ppm", 1, 400, "P2"),
        ]

    def test_numeric_labels(self):
        records = load_manifest(manifest("i1,p,0,40,P1", "i2,q,1,40,P2"))
        assert [r.label for r in records] == [0, 1]

    def test_label_case_insensitive(self):
        records = load_manifest(manifest("i1,p,Benign,40,P1"))
        assert records[0].label == 0

    def test_bad_magnification_names_line(self):
        with pytest.raises(ManifestError) as exc:
            load_manifest(manifest("i1,p,benign,40,P1", "i2,q,benign,250,P2"))
        assert exc.value.line == 3
        assert "250" in str(exc.value)

    def test_bad_label_names_line(self):
        with pytest.raises(ManifestError) as exc:
            load_manifest(manifest("i1,p,tumor,40,P1"))
        assert exc.value.line == 2

    def test_duplicate_id_names_line(self):
        with pytest.raises(ManifestError) as exc:
            load_manifest(manifest("i1,p,benign,40,P1", "i1,q,benign,40,P1"))
        assert exc.value.line == 3

    def test_bad_header(self):
        with pytest.raises(ManifestError) as exc:
            load_manifest("id,path,label\n")
        assert exc.value.line == 1

    def test_missing_column_in_row(self):
        with pytest.raises(ManifestError):
            load_manifest(manifest("i1,p,benign,40"))

    def test_round_trip(self):
        records = load_manifest(manifest(
            "i1,a.ppm,benign,40,P1",
            "i2,b.ppm,malignant,200,P2",
        ))
        buf = io.StringIO()
        write_manifest(records, buf)
        assert load_manifest(buf.getvalue()) == records


class TestBreakhisNames:
    def test_benign_40(self):
        assert parse_breakhis_filename("SOB_B_TA-14-4659CD-40-001.png") == (
            0, 40, "TA-14-4659CD",
        )

    def test_malignant_400(self):
        assert parse_breakhis_filename("SOB_M_DC-14-2523-400-012.png") == (
            1, 400, "DC-14-2523",
        )

    def test_with_directory_prefix(self):
        assert parse_breakhis_filename("x/y/SOB_B_TA-14-4659CD-100-002.png") == (
            0, 100, "TA-14-4659CD",
        )

    def test_no_match(self):
        assert parse_breakhis_filename("random.png") is None
        assert parse_breakhis_filename("SOB_X_TA-14-40-001.png") is None
        assert parse_breakhis_filename("SOB_B_TA-14-4659CD-39-001.png") is None


def corpus(n_patients, images_per_patient=1, magnification=40):
    out = []
    for p in range(n_patients):
        for i in range(images_per_patient):
            out.append(DatasetRecord(
                image_id=f"P{p:03d}-I{i:02d}",
                path=f"{p}/{i}.ppm",
                label=p % 2,
                magnification=magnification,
                patient_id=f"P{p:03d}",
            ))
    return out


class TestSplit:
    def test_deterministic(self):
        records = corpus(10, 3)
        a = split(records, (0.7, 0.15, 0.15), seed=5)
        b = split(records, (0.7, 0.15, 0.15), seed=5)
        assert a.assignment == b.assignment

    def test_patient_disjoint(self):
        records = corpus(12, 4)
        sa = split(records, (0.7, 0.15, 0.15), seed=1)
        by_patient = {}
        for r in records:
            by_patient.setdefault(r.patient_id, set()).add(sa.split_of(r.image_id))
        assert all(len(s) == 1 for s in by_patient.values())

    def test_every_image_assigned_once(self):
        records = corpus(9, 5)
        sa = split(records, (0.6, 0.2, 0.2), seed=3)
        assert sorted(sa.assignment) == sorted(r.image_id for r in records)

    def test_hundred_single_image_patients_hits_targets(self):
        records = corpus(100)
        sa = split(records, (0.7, 0.15, 0.15), seed=11)
        counts = {s: len(sa.ids_in(s)) for s in ("train", "validation", "test")}
        assert abs(counts["train"] - 70) <= 1
        assert abs(counts["validation"] - 15) <= 1
        assert abs(counts["test"] - 15) <= 1

    def test_all_splits_nonempty_with_three_patients(self):
        records = corpus(3, 4)
        sa = split(records, (0.9, 0.05, 0.05), seed=0)
        for s in ("train", "validation", "test"):
            assert sa.ids_in(s)

    def test_too_few_patients(self):
        with pytest.raises(SplitError):
            split(corpus(2, 10), (0.7, 0.15, 0.15), seed=0)

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(SplitError):
            split(corpus(5), (0.5, 0.5, 0.5), seed=0)

    def test_fractions_must_be_positive(self):
        with pytest.raises(SplitError):
            split(corpus(5), (1.0, 0.0, 0.0), seed=0)

    def test_patient_shared_across_magnifications_keeps_one_split(self):
        records = corpus(6, 2, magnification=40) + corpus(6, 2, magnification=100)
        sa = split(records, (0.7, 0.15, 0.15), seed=2)
        by_patient = {}
        for r in records:
            by_patient.setdefault(r.patient_id, set()).add(sa.split_of(r.image_id))
        assert all(len(s) == 1 for s in by_patient.values())

    def test_split_file_round_trip(self):
        sa = split(corpus(10, 2), (0.7, 0.15, 0.15), seed=9)
        buf = io.StringIO()
        write_split(sa, buf)
        assert read_split(buf.getvalue()) == sa.assignment

    def test_property_random_corpora(self, rng):
        for _ in range(20):
            n_pat = int(rng.integers(3, 20))
            per = int(rng.integers(1, 6))
            records = corpus(n_pat, per)
            sa = split(records, (0.7, 0.15, 0.15), seed=int(rng.integers(0, 1000)))
            assert len(sa.assignment) == len(records)
            by_patient = {}
            for r in records:
                by_patient.setdefault(r.patient_id, set()).add(sa.split_of(r.image_id))
            assert all(len(s) == 1 for s in by_patient.values())
            for s in ("train", "validation", "test"):
                assert sa.ids_in(s)


class TestSynthetic:
    def test_same_seed_identical_images(self):
        _, imgs_a = generate_synthetic(3, 2, 16, 16, seed=7)
        _, imgs_b = generate_synthetic(3, 2, 16, 16, seed=7)
        for image_id in imgs_a:
            assert np.array_equal(imgs_a[image_id].pixels, imgs_b[image_id].pixels)

    def test_different_seed_differs(self):
        _, a = generate_synthetic(1, 1, 16, 16, seed=1)
        _, b = generate_synthetic(1, 1, 16, 16, seed=2)
        (ia,), (ib,) = a.values(), b.values()
        assert not np.array_equal(ia.pixels, ib.pixels)

    def test_class_statistics_differ(self):
        records, images = generate_synthetic(6, 4, 24, 24, seed=3)
        mean0 = np.mean([images[r.image_id].pixels.mean() for r in records if r.label == 0])
        mean1 = np.mean([images[r.image_id].pixels.mean() for r in records if r.label == 1])
        assert mean0 > mean1 + 30

    def test_patients_alternate_classes(self):
        records, _ = generate_synthetic(4, 2, 8, 8, seed=0)
        by_patient = {r.patient_id: r.label for r in records}
        assert by_patient == {"SYN000": 0, "SYN001": 1, "SYN002": 0, "SYN003": 1}

    def test_paths_follow_layout(self):
        records, _ = generate_synthetic(2, 1, 8, 8, seed=0)
        assert records[0].path == "benign/SYN000/SYN000-000.ppm"
        assert records[1].path == "malignant/SYN001/SYN001-000.ppm"

    def test_magnification_is_40(self):
        records, _ = generate_synthetic(3, 1, 8, 8, seed=0)
        assert {r.magnification for r in records} == {40}

    def test_counts_validated(self):
        with pytest.raises(ValueError):
            generate_synthetic(0, 1, 8, 8, seed=0)
