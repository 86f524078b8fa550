"""Acceleration structures: triangle BVH and point k-d tree / k-NN graph."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from .errors import EmptyMesh, TooFewPoints
from .mesh import Aabb, TriangleMesh


@dataclass(frozen=True, eq=False)
class TriangleBvh:
    """Flattened binary BVH over triangle bounding boxes.

    Node ``i`` has bounds ``lo[i]``/``hi[i]``. Internal nodes store their
    children in ``left``/``right``; leaves have ``left == -1`` and own the
    triangles ``tris[start:start + count]`` (corner coordinates, 9 floats per
    row, in leaf order). ``order`` maps leaf order back to mesh triangle ids.
    """

    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    tris: np.ndarray
    order: np.ndarray
    leaf_capacity: int

    @property
    def n_nodes(self) -> int:
        return len(self.lo)

    @property
    def n_triangles(self) -> int:
        return len(self.tris)

    @property
    def root_box(self) -> Aabb:
        return Aabb(self.lo[0].copy(), self.hi[0].copy())

    def kernel_args(self) -> tuple:
        return (self.lo, self.hi, self.left, self.right, self.start, self.count, self.tris)

    def depth(self) -> int:
        best, stack = 0, [(0, 1)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.left[node] >= 0:
                stack += [(int(self.left[node]), d + 1), (int(self.right[node]), d + 1)]
        return best


def build_bvh(mesh: TriangleMesh, leaf_capacity: int = 4) -> TriangleBvh:
    """Median split on the longest centroid axis until leaves hold ``leaf_capacity`` triangles."""
    if mesh.n_triangles == 0:
        raise EmptyMesh("cannot build a BVH over zero triangles")
    if leaf_capacity < 1:
        raise ValueError("leaf_capacity must be positive")
    corners = mesh.corners
    tlo, thi = corners.min(axis=1), corners.max(axis=1)
    cent = corners.mean(axis=1)
    order = np.arange(mesh.n_triangles)
    lo, hi, left, right, start, count = [], [], [], [], [], []
    stack = [(0, len(order), -1, 0)]  # begin, end, parent, side
    while stack:
        b, e, parent, side = stack.pop()
        node = len(lo)
        if parent >= 0:
            (left if side == 0 else right)[parent] = node
        idx = order[b:e]
        lo.append(tlo[idx].min(axis=0))
        hi.append(thi[idx].max(axis=0))
        left.append(-1)
        right.append(-1)
        if e - b <= leaf_capacity:
            start.append(b)
            count.append(e - b)
            continue
        start.append(0)
        count.append(0)
        c = cent[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order[b:e] = idx[np.argsort(c[:, axis], kind="stable")]
        mid = b + (e - b) // 2
        stack.append((mid, e, node, 1))
        stack.append((b, mid, node, 0))
    tris = np.ascontiguousarray(corners[order].reshape(-1, 9))
    as_i32 = lambda xs: np.ascontiguousarray(xs, dtype=np.int32)  # noqa: E731
    return TriangleBvh(
        lo=np.ascontiguousarray(lo, dtype=np.float64),
        hi=np.ascontiguousarray(hi, dtype=np.float64),
        left=as_i32(left),
        right=as_i32(right),
        start=as_i32(start),
        count=as_i32(count),
        tris=tris,
        order=order,
        leaf_capacity=leaf_capacity,
    )


@dataclass(frozen=True)
class RayCrossing:
    count: int
    degenerate: bool


def as_points(a) -> np.ndarray:
    """``(N, 3)`` float64, C-contiguous and writable (the compiled kernels reject read-only buffers)."""
    return np.require(np.reshape(a, (-1, 3)), np.float64, ["C", "W"])


def count_ray_crossings_batch(bvh: TriangleBvh, origins, directions, *, threads: int = 1,
                              backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Crossing counts (hits with t > 0) and degeneracy flags for many rays."""
    origins = as_points(origins)
    directions = as_points(np.broadcast_to(np.reshape(directions, (-1, 3)), origins.shape))
    counts, flags = _backend.get(backend).ray_crossings(
        origins, directions, *bvh.kernel_args(), threads
    )
    return np.asarray(counts), np.asarray(flags).astype(bool)


def count_ray_crossings(bvh: TriangleBvh, origin, direction, *, backend: str | None = None) -> RayCrossing:
    counts, flags = count_ray_crossings_batch(bvh, origin, direction, backend=backend)
    return RayCrossing(int(counts[0]), bool(flags[0]))


def closest_distance_batch(bvh: TriangleBvh, queries, *, threads: int = 1,
                           backend: str | None = None) -> np.ndarray:
    q = as_points(queries)
    return np.asarray(_backend.get(backend).closest_distance(q, *bvh.kernel_args(), threads))


def closest_distance(bvh: TriangleBvh, query, *, backend: str | None = None) -> float:
    """Exact minimum point-to-triangle distance."""
    return float(closest_distance_batch(bvh, query, backend=backend)[0])


# ---------------------------------------------------------------------------- k-NN

@dataclass(frozen=True, eq=False)
class KnnGraph:
    """Reflexive k-NN lists: row ``i`` is ``[i, nn_1, ..., nn_k]``, int32."""

    k: int
    neighbors: np.ndarray

    def __len__(self) -> int:
        return len(self.neighbors)


_EXTRA = 3
_ROWS = 65536
_TIE_RTOL = 1e-9


class PointKdTree:
    """Exact k-NN over a fixed 3D point set.

    Candidates come from :class:`scipy.spatial.cKDTree`; distances are then
    recomputed here and rows re-sorted by ``(distance, index)`` so that ties
    are broken by the smaller index. Rows whose k-th distance is tied with
    the last candidate are re-queried with a doubled candidate count.

    ``lattice`` may carry ``(ijk, steps)`` integer lattice coordinates for the
    points. Distances between tree points are then computed from integer index
    differences, so equal offsets give bit-identical distances regardless of
    where the lattice sits in space.
    """

    def __init__(self, points, lattice=None):
        self.points = np.ascontiguousarray(np.reshape(points, (-1, 3)), dtype=np.float64)
        self._tree = cKDTree(self.points, balanced_tree=True, compact_nodes=True)
        if lattice is not None:
            ijk, steps = lattice
            lattice = (np.asarray(ijk, dtype=np.int64), np.asarray(steps, dtype=np.float64))
        self.lattice = lattice

    def __len__(self) -> int:
        return len(self.points)

    def _d2(self, queries, qidx, cand):
        if qidx is not None and self.lattice is not None:
            ijk, steps = self.lattice
            e = (ijk[cand] - ijk[qidx][:, None, :]).astype(np.float64) * steps
        else:
            e = self.points[cand] - queries[:, None, :]
        return e[..., 0] * e[..., 0] + e[..., 1] * e[..., 1] + e[..., 2] * e[..., 2]

    def _rows(self, queries, qidx, k, threads):
        n = len(self.points)
        c = min(n, k + _EXTRA)
        _, cand = self._tree.query(queries, k=c, workers=threads)
        cand = np.asarray(cand, dtype=np.int64).reshape(len(queries), c)
        d2 = self._d2(queries, qidx, cand)
        if qidx is not None:
            d2[cand == qidx[:, None]] = -1.0  # own index always first
        unsorted = np.any(np.diff(d2, axis=1) <= 0.0, axis=1)
        if unsorted.any():
            sub_c, sub_d = cand[unsorted], d2[unsorted]
            by_index = np.argsort(sub_c, axis=1, kind="stable")
            sub_c = np.take_along_axis(sub_c, by_index, axis=1)
            sub_d = np.take_along_axis(sub_d, by_index, axis=1)
            by_dist = np.argsort(sub_d, axis=1, kind="stable")
            cand[unsorted] = np.take_along_axis(sub_c, by_dist, axis=1)
            d2[unsorted] = np.take_along_axis(sub_d, by_dist, axis=1)
        if c < n:
            kth = d2[:, k - 1]
            tied = d2[:, c - 1] <= np.maximum(kth, 0.0) * (1.0 + _TIE_RTOL)
            if tied.any():
                rows = np.flatnonzero(tied)
                sub_q = queries[rows]
                sub_i = None if qidx is None else qidx[rows]
                big_c, big_d = self._rows_wide(sub_q, sub_i, k, threads, 2 * c)
                cand[rows, :], d2[rows, :] = big_c[:, :c], big_d[:, :c]
        return cand[:, :k], d2[:, :k]

    def _rows_wide(self, queries, qidx, k, threads, c):
        n = len(self.points)
        saved = k
        while True:
            c = min(n, c)
            cand, d2 = self._rows_fixed(queries, qidx, c, threads)
            if c == n:
                return cand, d2
            tied = d2[:, c - 1] <= np.maximum(d2[:, saved - 1], 0.0) * (1.0 + _TIE_RTOL)
            if not tied.any():
                return cand, d2
            c *= 2

    def _rows_fixed(self, queries, qidx, c, threads):
        _, cand = self._tree.query(queries, k=c, workers=threads)
        cand = np.asarray(cand, dtype=np.int64).reshape(len(queries), c)
        d2 = self._d2(queries, qidx, cand)
        if qidx is not None:
            d2[cand == qidx[:, None]] = -1.0
        by_index = np.argsort(cand, axis=1, kind="stable")
        cand = np.take_along_axis(cand, by_index, axis=1)
        d2 = np.take_along_axis(d2, by_index, axis=1)
        by_dist = np.argsort(d2, axis=1, kind="stable")
        return np.take_along_axis(cand, by_dist, axis=1), np.take_along_axis(d2, by_dist, axis=1)

    def query(self, queries, k: int = 1, *, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """``(distances, indices)`` of the k nearest tree points to each query, shape ``(m, k)``."""
        q = np.ascontiguousarray(np.reshape(queries, (-1, 3)), dtype=np.float64)
        if not 1 <= k <= len(self.points):
            raise TooFewPoints(f"k={k} with {len(self.points)} points")
        idx = np.empty((len(q), k), dtype=np.int64)
        d2 = np.empty((len(q), k))
        for r0 in range(0, len(q), _ROWS):
            idx[r0:r0 + _ROWS], d2[r0:r0 + _ROWS] = self._rows(q[r0:r0 + _ROWS], None, k, threads)
        return np.sqrt(d2), idx

    def knn_graph(self, k: int, *, threads: int = 1) -> KnnGraph:
        n = len(self.points)
        if k < 1:
            raise ValueError("k must be positive")
        if n <= k:
            raise TooFewPoints(f"need more than k={k} points, got {n}")
        out = np.empty((n, k + 1), dtype=np.int32)
        for r0 in range(0, n, _ROWS):
            r1 = min(n, r0 + _ROWS)
            qidx = np.arange(r0, r1)
            cand, _ = self._rows(self.points[r0:r1], qidx, k + 1, threads)
            missing = cand[:, 0] != qidx  # only with > k coincident points
            if missing.any():
                cand[missing, 1:] = cand[missing, :-1]
                cand[missing, 0] = qidx[missing]
            out[r0:r1] = cand
        out.flags.writeable = False
        return KnnGraph(k=k, neighbors=out)


def build_knn_graph(points, k: int, *, lattice=None, threads: int = 1) -> KnnGraph:
    """Reflexive k-NN graph: each row holds the point itself then its k nearest neighbours.

    Ties in distance are broken by the smaller index.
    """
    pts = np.reshape(points, (-1, 3))
    if k < 1:
        raise ValueError("k must be positive")
    if len(pts) <= k:
        raise TooFewPoints(f"need more than k={k} points, got {len(pts)}")
    return PointKdTree(pts, lattice=lattice).knn_graph(k, threads=threads)
