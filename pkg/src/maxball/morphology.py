"""Dilation of a distance field over a k-NN structuring element and skeleton selection.

The residual ``dilate(udf) - udf`` is zero exactly at points whose distance
value is the maximum of their neighbourhood, i.e. the candidate centres of
maximal inscribed balls. Keeping the ``n`` smallest residuals yields the
skeleton.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import LengthMismatch, SubsetTooLarge
from .occupancy import VolumeSamples
from .spatial import KnnGraph

EXACT_MAXIMUM_EPS = 1e-9


def dilate(values, graph: KnnGraph, *, threads: int = 1, backend: str | None = None) -> np.ndarray:
    """Neighbourhood maximum: ``out[i] = max(values[j] for j in graph.neighbors[i])``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if len(values) != len(graph):
        raise LengthMismatch(f"field has {len(values)} values, graph has {len(graph)} rows")
    nbrs = np.ascontiguousarray(graph.neighbors, dtype=np.int32)
    return np.asarray(_backend.get(backend).dilate(values, nbrs, threads))


def dilation_residual(udf, dilated) -> np.ndarray:
    udf = np.asarray(udf, dtype=np.float64)
    dilated = np.asarray(dilated, dtype=np.float64)
    if udf.shape != dilated.shape:
        raise LengthMismatch(f"{udf.shape} vs {dilated.shape}")
    return dilated - udf


@dataclass(frozen=True)
class SkeletalSphere:
    center: tuple
    radius: float
    residual: float
    source_index: int


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Selected spheres sorted by ascending residual, then source index."""

    centers: np.ndarray
    radii: np.ndarray
    residuals: np.ndarray
    source_index: np.ndarray
    parameters: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def spheres(self) -> list[SkeletalSphere]:
        return [
            SkeletalSphere(tuple(map(float, c)), float(r), float(e), int(i))
            for c, r, e, i in zip(self.centers, self.radii, self.residuals, self.source_index)
        ]


def select_skeleton(samples: VolumeSamples, residuals, n: int, parameters: dict | None = None) -> Skeleton:
    """Keep the ``n`` samples with the smallest residual (ties: lower index first).

    The ``n`` smallest values minimise the residual sum over all size-``n``
    subsets, so no search is needed.
    """
    residuals = np.asarray(residuals, dtype=np.float64)
    if samples.udf is None:
        raise ValueError("samples carry no udf values")
    if len(residuals) != len(samples):
        raise LengthMismatch(f"{len(residuals)} residuals for {len(samples)} samples")
    if n < 1:
        raise ValueError("n must be positive")
    if n > len(samples):
        raise SubsetTooLarge(f"requested {n} spheres from {len(samples)} samples")
    if n < len(residuals):
        # everything strictly below the n-th value, then the tied block in index order
        cutoff = np.partition(residuals, n - 1)[n - 1]
        below = np.flatnonzero(residuals < cutoff)
        tied = np.flatnonzero(residuals == cutoff)[: n - len(below)]
        pick = np.concatenate([below, tied])
    else:
        pick = np.arange(len(residuals))
    pick = pick[np.lexsort((pick, residuals[pick]))]
    return Skeleton(
        centers=samples.points[pick],
        radii=samples.udf[pick],
        residuals=residuals[pick],
        source_index=pick.astype(np.int64),
        parameters=dict(parameters or {}),
    )


def exact_maxima_count(residuals, eps: float = EXACT_MAXIMUM_EPS) -> int:
    return int(np.count_nonzero(np.asarray(residuals) < eps))


def maximal_ball_oracle(samples: VolumeSamples, *, tol: float = 1e-12, block: int = 1024) -> np.ndarray:
    """Brute-force ball maximality: ``i`` is maximal unless some ``j != i`` has
    ``|p_i - p_j| + r_i <= r_j``. Quadratic; meant for a few thousand samples.
    """
    if samples.udf is None:
        raise ValueError("samples carry no udf values")
    p, r = samples.points, samples.udf
    n = len(p)
    flags = np.ones(n, dtype=bool)
    for b0 in range(0, n, block):
        b1 = min(n, b0 + block)
        d = np.linalg.norm(p[b0:b1, None, :] - p[None, :, :], axis=2)
        contained = d + r[b0:b1, None] <= r[None, :] + tol
        contained[np.arange(b1 - b0), np.arange(b0, b1)] = False
        flags[b0:b1] = ~contained.any(axis=1)
    return flags
