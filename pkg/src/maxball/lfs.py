"""Local feature size of surface points and the derived sampling prior."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySkeleton, SubsetTooLarge
from .morphology import Skeleton
from .spatial import PointKdTree

EPS_FRACTION = 1e-3


@dataclass(frozen=True, eq=False)
class SamplingPrior:
    lfs: np.ndarray
    weight: np.ndarray
    sharpness: float = 1.0


def local_feature_size(surface_points, skeleton: Skeleton | np.ndarray, *, threads: int = 1) -> np.ndarray:
    """Distance from each surface point to the nearest skeletal sphere centre."""
    centers = skeleton.centers if isinstance(skeleton, Skeleton) else np.asarray(skeleton)
    if len(centers) == 0:
        raise EmptySkeleton("skeleton has no spheres")
    dist, _ = PointKdTree(centers).query(surface_points, 1, threads=threads)
    return dist[:, 0]


def prior_weights(lfs, sharpness: float = 1.0) -> SamplingPrior:
    """Normalised weights ``(lfs + eps) ** -sharpness`` with ``eps = 1e-3 * median(lfs)``."""
    lfs = np.asarray(lfs, dtype=np.float64)
    if lfs.size == 0:
        raise ValueError("empty lfs vector")
    if sharpness <= 0:
        raise ValueError("sharpness must be positive")
    # absolute floor keeps weights finite when most points sit on the skeleton
    eps = max(EPS_FRACTION * float(np.median(lfs)), 1e-12)
    raw = (lfs + eps) ** -sharpness
    return SamplingPrior(lfs=lfs, weight=raw / raw.sum(), sharpness=float(sharpness))


def weighted_sample(points, prior: SamplingPrior, m: int, seed: int = 0) -> np.ndarray:
    """Draw ``m`` distinct indices without replacement, probability proportional to weight.

    Each index gets an exponential key ``E_i / w_i``; the ``m`` smallest keys
    win and are returned in ascending key order (the sequential draw order).
    """
    n = len(prior.weight)
    if points is not None and len(points) != n:
        raise ValueError("points and prior differ in length")
    if m < 1:
        raise ValueError("m must be positive")
    if m > n:
        raise SubsetTooLarge(f"cannot draw {m} of {n} points")
    rng = np.random.default_rng(seed)
    keys = rng.standard_exponential(n) / prior.weight
    return np.argsort(keys, kind="stable")[:m]
