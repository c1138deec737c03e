"""Even quadtree tiling of an image into 1, 4 or 16 patches.

Level 1 is the whole image, level 2 a 2x2 grid, level 3 a 4x4 grid.
Axis cut points are floor(dim * i / grid) so the patches tile the image
exactly even when the dimension is not divisible; patch sizes then
differ by at most one pixel per axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import RasterImage

LEVELS = (1, 2, 3)


def grid_size(level: int) -> int:
    """Patches per axis at a level: 1, 2 or 4."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level}")
    return 2 ** (level - 1)


def grid_cuts(dim: int, parts: int) -> list[int]:
    """Cut points floor(dim*i/parts) for i = 0..parts; tiles [0, dim) exactly."""
    return [dim * i // parts for i in range(parts + 1)]


def patch_id(parent_id: str, level: int, row: int, col: int) -> str:
    """Stable identifier used as the feature-cache key for one patch."""
    return f"{parent_id}#L{level}R{row}C{col}"


def patch_ids(parent_id: str, level: int) -> list[str]:
    """All patch ids of an image at a level, row-major."""
    g = grid_size(level)
    return [patch_id(parent_id, level, r, c) for r in range(g) for c in range(g)]


@dataclass(frozen=True)
class Patch:
    image: RasterImage
    row: int
    col: int


@dataclass(frozen=True)
class PatchSet:
    """Row-major patches of one parent image; len(patches) == 4**(level-1)."""

    parent_id: str
    level: int
    patches: tuple[Patch, ...]

    def ids(self) -> list[str]:
        return [patch_id(self.parent_id, self.level, p.row, p.col) for p in self.patches]


def split(image: RasterImage, level: int, parent_id: str = "") -> PatchSet:
    """Cut the image into a 2^(level-1) x 2^(level-1) grid of patches.

    The grid is cut from the original image directly (not by re-splitting
    level-2 patches), so every patch is nonempty whenever both dimensions
    are at least the grid size.
    """
    g = grid_size(level)
    if image.width < g or image.height < g:
        raise ValueError(
            f"image {image.width}x{image.height} too small for level {level} "
            f"(needs at least {g} pixels per axis)"
        )
    cuts_y = grid_cuts(image.height, g)
    cuts_x = grid_cuts(image.width, g)
    patches = []
    for r in range(g):
        for c in range(g):
            tile = image.pixels[cuts_y[r]:cuts_y[r + 1], cuts_x[c]:cuts_x[c + 1]]
            patches.append(Patch(image=RasterImage(pixels=tile.copy()), row=r, col=c))
    return PatchSet(parent_id=parent_id, level=level, patches=tuple(patches))


def reassemble(patchset: PatchSet, parent_w: int, parent_h: int) -> RasterImage:
    """Stitch a PatchSet back into the parent image; the inverse of split.

    Raises ValueError when the patch grid is inconsistent with the
    declared parent dimensions.
    """
    g = grid_size(patchset.level)
    if len(patchset.patches) != g * g:
        raise ValueError(
            f"expected {g * g} patches for level {patchset.level}, "
            f"got {len(patchset.patches)}"
        )
    seen = {(p.row, p.col) for p in patchset.patches}
    if seen != {(r, c) for r in range(g) for c in range(g)}:
        raise ValueError("patch grid coordinates do not cover the full grid")
    cuts_y = grid_cuts(parent_h, g)
    cuts_x = grid_cuts(parent_w, g)
    out = np.empty((parent_h, parent_w, 3), dtype=np.uint8)
    for p in patchset.patches:
        want_h = cuts_y[p.row + 1] - cuts_y[p.row]
        want_w = cuts_x[p.col + 1] - cuts_x[p.col]
        if p.image.height != want_h or p.image.width != want_w:
            raise ValueError(
                f"patch R{p.row}C{p.col} is {p.image.width}x{p.image.height}, "
                f"expected {want_w}x{want_h} for parent {parent_w}x{parent_h}"
            )
        out[cuts_y[p.row]:cuts_y[p.row + 1], cuts_x[p.col]:cuts_x[p.col + 1]] = p.image.pixels
    return RasterImage(pixels=out)
