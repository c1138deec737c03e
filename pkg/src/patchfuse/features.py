"""Feature extraction contract and the bit-exact on-disk feature cache.

A feature vector is 2048 floats (stored at 32-bit precision). The
built-in synthetic extractor is a deterministic stand-in for a real CNN
backend and exists so the whole pipeline can be exercised at desk scale;
real backends interoperate solely through the cache file format:

    # patchfuse-features v1 dim=<dim>\\n
    <id>\\t<v0> <v1> ... <v_{dim-1}>\\n        (one line per record, sorted by id)

Values are written as `%.8e` (9 significant digits), which round-trips
every finite 32-bit float exactly, including subnormals and negative
zero. Encoding is ASCII, newlines are `\\n`. Lines starting with `#`
after the header are treated as comments (backends may record
provenance notes there).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import CacheFormatError, ExtractionError, MissingFeaturesError
from .quadtree import grid_cuts
from .raster import RasterImage

FEATURE_DIM = 2048
DESCRIPTOR_DIM = 160
_HEADER_RE = re.compile(r"^# patchfuse-features v1 dim=(\d+)$")

_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_MIX2 = np.uint64(0x94D049BB133111EB)


@dataclass(frozen=True)
class FeatureVector:
    """One extracted vector, keyed by image or patch identifier."""

    id: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 1:
            raise ValueError("feature values must be a 1-d vector")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"feature vector {self.id!r} contains non-finite values")
        if "\t" in self.id or "\n" in self.id or not self.id:
            raise ValueError(f"invalid feature id {self.id!r}")
        object.__setattr__(self, "values", v)


class FeatureCache:
    """In-memory id -> FeatureVector map with a fixed dimensionality."""

    def __init__(self, dim: int = FEATURE_DIM):
        if dim < 1:
            raise ValueError("cache dim must be positive")
        self.dim = dim
        self._records: dict[str, FeatureVector] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._records

    def add(self, vector: FeatureVector) -> None:
        if len(vector.values) != self.dim:
            raise ValueError(
                f"vector {vector.id!r} has length {len(vector.values)}, "
                f"cache dim is {self.dim}"
            )
        if vector.id in self._records:
            raise ValueError(f"duplicate feature id {vector.id!r}")
        self._records[vector.id] = vector

    def get(self, record_id: str) -> FeatureVector | None:
        return self._records.get(record_id)

    def ids(self) -> list[str]:
        return sorted(self._records)

    def require(self, ids) -> None:
        """Raise MissingFeaturesError unless every id is cached."""
        missing = [i for i in ids if i not in self._records]
        if missing:
            raise MissingFeaturesError(missing)


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of the SplitMix64 stream for `seed`, as uint64."""
    with np.errstate(over="ignore"):
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _SM64_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _SM64_MIX1
        z = (z ^ (z >> np.uint64(27))) * _SM64_MIX2
        return z ^ (z >> np.uint64(31))


@lru_cache(maxsize=8)
def projection_matrix(seed: int) -> np.ndarray:
    """Fixed 2048 x 160 expansion matrix, entries uniform in [-1, 1).

    Entries are drawn row-major from the SplitMix64 stream of `seed`
    (u = (z >> 11) * 2^-53 mapped to 2u - 1), so the matrix is identical
    across runs and platforms.
    """
    raw = splitmix64(seed, FEATURE_DIM * DESCRIPTOR_DIM)
    u01 = (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return (2.0 * u01 - 1.0).reshape(FEATURE_DIM, DESCRIPTOR_DIM)


def descriptor(image: RasterImage) -> np.ndarray:
    """160-dim raw image descriptor on samples scaled to [0, 1].

    Layout: 96 dims of per-channel 32-bin histograms normalized to sum 1
    (channel-major), then 48 per-channel means over a 4x4 block grid
    (block-major, RGB within each block), then 16 per-block variances
    pooled over all three channels. Blocks use the same floor cut points
    as the quadtree; an empty block (image smaller than the grid)
    contributes zeros.
    """
    cuts_y = np.asarray(grid_cuts(image.height, 4), dtype=np.int64)
    cuts_x = np.asarray(grid_cuts(image.width, 4), dtype=np.int64)
    hist, block_sum, block_sq, block_npix = _kernels.patch_stats(
        image.pixels, cuts_y, cuts_x
    )

    n_pixels = float(image.width * image.height)
    out = np.zeros(DESCRIPTOR_DIM, dtype=np.float64)
    out[:96] = hist.reshape(-1).astype(np.float64) / n_pixels

    npix = block_npix.astype(np.float64)
    nonempty = block_npix > 0
    means = np.zeros((16, 3), dtype=np.float64)
    means[nonempty] = block_sum[nonempty].astype(np.float64) / (
        255.0 * npix[nonempty, None]
    )
    out[96:144] = means.reshape(-1)

    variances = np.zeros(16, dtype=np.float64)
    n3 = 3.0 * npix[nonempty]
    mean_all = block_sum[nonempty].sum(axis=1).astype(np.float64) / (255.0 * n3)
    ex2 = block_sq[nonempty].astype(np.float64) / (65025.0 * n3)
    variances[nonempty] = ex2 - mean_all * mean_all
    out[144:160] = variances
    return out


def extract_synthetic(image: RasterImage, seed: int) -> np.ndarray:
    """Deterministic 2048-dim float32 features: descriptor x projection."""
    expanded = projection_matrix(int(seed)) @ descriptor(image)
    return expanded.astype(np.float32)


class SyntheticBackend:
    """Extraction backend wrapping extract_synthetic with a fixed seed."""

    name = "synthetic"

    def __init__(self, seed: int):
        self.seed = int(seed)

    def extract(self, record_id: str, image: RasterImage) -> np.ndarray:
        return extract_synthetic(image, self.seed)


class CacheBackend:
    """Backend that only serves vectors already present in a source cache."""

    name = "cache"

    def __init__(self, source: FeatureCache):
        self.source = source

    def extract(self, record_id: str, image: RasterImage) -> np.ndarray:
        vec = self.source.get(record_id)
        if vec is None:
            raise MissingFeaturesError([record_id])
        return vec.values


def extract_batch(images, backend, cache: FeatureCache) -> FeatureCache:
    """Ensure every (id, image) pair is cached, computing only the misses.

    Ids already present are never recomputed. If the backend fails for
    some ids, the remaining ids are still processed and an
    ExtractionError listing the failures is raised at the end; successful
    extractions stay in the cache.
    """
    seen = set()
    failures = {}
    for record_id, image in images:
        if record_id in seen:
            raise ValueError(f"duplicate id in batch: {record_id!r}")
        seen.add(record_id)
        if record_id in cache:
            continue
        try:
            values = backend.extract(record_id, image)
            cache.add(FeatureVector(id=record_id, values=values))
        except Exception as exc:  # noqa: BLE001 - per-id isolation is the contract
            failures[record_id] = exc
    if failures:
        raise ExtractionError(failures)
    return cache


def write_cache(cache: FeatureCache, dest) -> None:
    """Write the cache to a binary file object in the normative format."""
    dest.write(f"# patchfuse-features v1 dim={cache.dim}\n".encode("ascii"))
    for record_id in cache.ids():
        vec = cache.get(record_id)
        body = " ".join(f"{float(v):.8e}" for v in vec.values)
        dest.write(f"{record_id}\t{body}\n".encode("ascii"))


def read_cache(source) -> FeatureCache:
    """Parse a cache file from a binary file object, enforcing the format."""
    raw = source.read()
    if isinstance(raw, str):
        raw = raw.encode("ascii")
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise CacheFormatError(f"cache file is not ASCII: {exc}") from None
    lines = text.split("\n")
    if not lines or not (m := _HEADER_RE.match(lines[0])):
        raise CacheFormatError(
            "missing or malformed header (expected '# patchfuse-features v1 dim=<n>')",
            line=1,
        )
    cache = FeatureCache(dim=int(m.group(1)))
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        if line.startswith("#"):
            continue
        record_id, sep, body = line.partition("\t")
        if not sep or not record_id:
            raise CacheFormatError("expected '<id>\\t<values>'", line=lineno)
        tokens = body.split()
        if len(tokens) != cache.dim:
            raise CacheFormatError(
                f"expected {cache.dim} values, found {len(tokens)}", line=lineno
            )
        try:
            values = np.array([float(t) for t in tokens], dtype=np.float64)
        except ValueError:
            raise CacheFormatError("non-numeric value token", line=lineno) from None
        values32 = values.astype(np.float32)
        if not np.all(np.isfinite(values32)):
            raise CacheFormatError("non-finite value", line=lineno)
        if record_id in cache:
            raise CacheFormatError(f"duplicate id {record_id!r}", line=lineno)
        cache.add(FeatureVector(id=record_id, values=values32))
    return cache


def load_cache(path) -> FeatureCache:
    with open(path, "rb") as fh:
        return read_cache(fh)


def save_cache(cache: FeatureCache, path) -> None:
    with open(path, "wb") as fh:
        write_cache(cache, fh)
