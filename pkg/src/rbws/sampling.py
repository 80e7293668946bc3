"""Seeded Latin hypercube sampling over box parameter domains."""

from __future__ import annotations

import numpy as np


def lhs_sample(p: int, n: int, bounds, seed: int = 0) -> list[np.ndarray]:
    """Draw n points in the p-dimensional box with one point per stratum.

    Each axis is split into n equal-width strata; a seeded generator picks
    the intra-stratum position and an independent stratum permutation per
    axis. Same seed, same samples, bit for bit.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.shape != (p, 2):
        raise ValueError(f"bounds must be ({p}, 2), got {bounds.shape}")
    lo, hi = bounds[:, 0], bounds[:, 1]
    if np.any(hi <= lo):
        raise ValueError("degenerate bounds: need min < max per dimension")
    rng = np.random.default_rng(seed)
    unit = (rng.random((n, p)) + np.stack(
        [rng.permutation(n) for _ in range(p)], axis=1)) / n
    pts = lo + unit * (hi - lo)
    return [pts[i].copy() for i in range(n)]
