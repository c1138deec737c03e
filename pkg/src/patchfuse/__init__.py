"""Patch-based classification of high-resolution pathology images.

Quadtree tiling, deterministic bilinear resizing, cached 2048-dim
feature extraction, a softmax classifier head trained by gradient
descent, probability fusion across patches, and image-/patient-level
accuracy reporting.
"""

from .errors import PatchfuseError

__version__ = "0.1.0"
__all__ = ["PatchfuseError", "__version__"]
