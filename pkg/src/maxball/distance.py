"""Unsigned and signed distance to the mesh surface."""
from __future__ import annotations

import numpy as np

from .occupancy import VolumeSamples, occupancy_batch
from .spatial import TriangleBvh, closest_distance_batch


def udf_batch(bvh: TriangleBvh, points, *, threads: int = 1, backend: str | None = None) -> np.ndarray:
    """Exact closest distance to the surface for each point, order-aligned with the input."""
    return closest_distance_batch(bvh, points, threads=threads, backend=backend)


def attach_udf(bvh: TriangleBvh, samples: VolumeSamples, *, threads: int = 1,
               backend: str | None = None) -> VolumeSamples:
    return samples.with_udf(udf_batch(bvh, samples.points, threads=threads, backend=backend))


def sdf_batch(bvh: TriangleBvh, points, *, seed: int = 0, threads: int = 1,
              backend: str | None = None) -> np.ndarray:
    """Negative inside, positive outside."""
    d = udf_batch(bvh, points, threads=threads, backend=backend)
    inside = occupancy_batch(bvh, points, seed=seed, threads=threads, backend=backend) == 1
    return np.where(inside, -d, d)


def sdf(bvh: TriangleBvh, p, *, seed: int = 0, backend: str | None = None) -> float:
    return float(sdf_batch(bvh, p, seed=seed, backend=backend)[0])
