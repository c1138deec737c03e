import numpy as np
import pytest

from patchfuse import dataset, raster
from patchfuse.raster import RasterImage


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, width, height):
    return RasterImage(
        pixels=rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    )


def constant_image(width, height, rgb):
    pix = np.empty((height, width, 3), dtype=np.uint8)
    pix[:] = np.asarray(rgb, dtype=np.uint8)
    return RasterImage(pixels=pix)


def make_corpus(root, n_patients=4, images_per_patient=3, size=24, seed=7):
    """Write a synthetic corpus + manifest under `root`; returns manifest path."""
    records, images = dataset.generate_synthetic(
        n_patients, images_per_patient, size, size, seed
    )
    for rec in records:
        path = root / rec.path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(raster.encode_ppm(images[rec.image_id]))
    manifest = root / "manifest.csv"
    with open(manifest, "w", encoding="ascii", newline="") as fh:
        dataset.write_manifest(records, fh)
    return manifest
