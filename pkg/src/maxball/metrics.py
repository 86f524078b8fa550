"""Chamfer and Hausdorff distances between point sets.

Chamfer is the *sum* of the two directed mean nearest-neighbour distances
(plain L2, not squared).
"""
from __future__ import annotations

import numpy as np

from .errors import EmptySet
from .spatial import PointKdTree


def _points(a):
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    if len(a) == 0:
        raise EmptySet("point set is empty")
    return a


def directed_distances(a, b, *, threads: int = 1) -> np.ndarray:
    """For each point of ``a``, distance to its nearest point of ``b``."""
    a, b = _points(a), _points(b)
    dist, _ = PointKdTree(b).query(a, 1, threads=threads)
    return dist[:, 0]


def chamfer(a, b, *, threads: int = 1) -> float:
    ab = directed_distances(a, b, threads=threads)
    ba = directed_distances(b, a, threads=threads)
    return float(ab.mean() + ba.mean())


def hausdorff(a, b, *, threads: int = 1) -> float:
    ab = directed_distances(a, b, threads=threads)
    ba = directed_distances(b, a, threads=threads)
    return float(max(ab.max(), ba.max()))
