"""Combine per-patch class probabilities into one image-level decision.

Three rules: per-class sum, per-class product (accumulated in log space
to survive many small factors), and per-class maximum. The winning class
is the argmax of the aggregated scores, ties breaking toward the lowest
class index. Aggregation runs over sorted per-class values so the result
is bitwise independent of patch order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RULES = ("sum", "product", "max")
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class FusionDecision:
    predicted_class: int
    per_class_scores: tuple[float, ...]
    rule: str
    n_patches: int


def fuse(patch_probs, rule: str) -> FusionDecision:
    """Aggregate patch probability vectors under one rule.

    `patch_probs` is a nonempty sequence of equal-length probability
    vectors (one per patch). The product rule sums logs of values floored
    at 1e-12 and reports exp of the total, which matches the direct
    product to ~1e-9 relative wherever the direct product is
    representable.
    """
    if rule not in RULES:
        raise ValueError(f"unknown fusion rule {rule!r}, expected one of {RULES}")
    probs = [np.asarray(p, dtype=np.float64) for p in patch_probs]
    if not probs:
        raise ValueError("cannot fuse an empty patch list")
    k = probs[0].shape
    if len(k) != 1 or any(p.shape != k for p in probs):
        raise ValueError("patch probability vectors must share one length")
    stacked = np.sort(np.stack(probs), axis=0)

    if rule == "sum":
        scores = stacked.sum(axis=0)
    elif rule == "product":
        scores = np.exp(np.log(np.maximum(stacked, PROB_FLOOR)).sum(axis=0))
    else:
        scores = stacked[-1]

    return FusionDecision(
        predicted_class=int(np.argmax(scores)),
        per_class_scores=tuple(float(s) for s in scores),
        rule=rule,
        n_patches=len(probs),
    )
