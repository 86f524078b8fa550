"""Even-odd ray-casting occupancy and inner-point samplers."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import time

import numpy as np

from . import _backend
from .errors import DegenerateOccupancy, NoInnerPoints
from .mesh import TriangleMesh, bounding_box
from .spatial import TriangleBvh, as_points

_DRAW_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class VolumeSamples:
    """Candidate inner points, all with occupancy 1.

    ``source`` records how they were produced (``kind`` is ``"uniform_random"``
    or ``"meshgrid"`` plus its parameters). ``lattice`` is ``(ijk, steps)`` for
    meshgrid samples and ``None`` otherwise. ``udf`` is filled in later by
    :func:`maxball.distance.attach_udf`.
    """

    points: np.ndarray
    source: dict
    udf: np.ndarray | None = None
    lattice: tuple | None = None
    drawn: int = 0

    def __len__(self) -> int:
        return len(self.points)

    @property
    def kept_fraction(self) -> float:
        return len(self.points) / self.drawn if self.drawn else 0.0

    def with_udf(self, udf: np.ndarray) -> "VolumeSamples":
        udf = np.asarray(udf, dtype=np.float64)
        if udf.shape != (len(self.points),):
            raise ValueError("udf must align with the sample points")
        return replace(self, udf=udf)

    def subset(self, index) -> "VolumeSamples":
        index = np.asarray(index)
        lattice = None
        if self.lattice is not None:
            lattice = (self.lattice[0][index], self.lattice[1])
        return VolumeSamples(
            points=self.points[index],
            source=dict(self.source, subset=int(len(index))),
            udf=None if self.udf is None else self.udf[index],
            lattice=lattice,
            drawn=self.drawn,
        )


def occupancy_batch(bvh: TriangleBvh, points, *, seed: int = 0, threads: int = 1,
                    backend: str | None = None) -> np.ndarray:
    """Inside (1) / outside (0) flags by crossing parity.

    A cast that grazes an edge or vertex is retried with up to 8 random
    directions drawn from a stream keyed on the point coordinates and ``seed``;
    the majority of the first three clean casts wins.
    """
    pts = as_points(points)
    out = np.asarray(
        _backend.get(backend).occupancy(pts, *bvh.kernel_args(), np.uint64(seed & (2**64 - 1)), threads)
    )
    bad = np.flatnonzero(out == 2)
    if bad.size:
        raise DegenerateOccupancy(pts[bad[0]])
    return out


def occupancy(bvh: TriangleBvh, p, *, seed: int = 0, backend: str | None = None) -> int:
    return int(occupancy_batch(bvh, p, seed=seed, backend=backend)[0])


def _tick(timings, stage, t0):
    if timings is not None:
        timings[stage] = timings.get(stage, 0.0) + time.perf_counter() - t0


def sample_inner_points_random(mesh: TriangleMesh, bvh: TriangleBvh, box_count: int, seed: int = 0,
                               *, threads: int = 1, backend: str | None = None,
                               timings: dict | None = None) -> VolumeSamples:
    """Uniform draws in the tight bounding box, filtered by occupancy, in draw order.

    ``timings``, when given, accumulates seconds under ``"sampling"`` and
    ``"occupancy"``.
    """
    if box_count < 1:
        raise ValueError("box_count must be at least 1")
    box = bounding_box(mesh, 0.0)
    rng = np.random.default_rng(seed)
    kept = []
    for c0 in range(0, box_count, _DRAW_CHUNK):
        t0 = time.perf_counter()
        m = min(_DRAW_CHUNK, box_count - c0)
        p = box.lo + rng.random((m, 3)) * box.extent
        _tick(timings, "sampling", t0)
        t0 = time.perf_counter()
        occ = occupancy_batch(bvh, p, seed=seed, threads=threads, backend=backend)
        kept.append(p[occ == 1])
        _tick(timings, "occupancy", t0)
    points = np.concatenate(kept)
    if len(points) == 0:
        raise NoInnerPoints(f"none of {box_count} box points fell inside the mesh")
    source = {"kind": "uniform_random", "seed": int(seed), "box_count": int(box_count)}
    return VolumeSamples(points=points, source=source, drawn=int(box_count))


@dataclass(frozen=True)
class GridFrame:
    """Placement of a lattice: ``world = origin + local @ axes`` with ``local`` in ``[0, extent]``."""

    origin: np.ndarray
    axes: np.ndarray = field(default_factory=lambda: np.eye(3))
    extent: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        for name in ("origin", "axes", "extent"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh) -> "GridFrame":
        box = bounding_box(mesh, 0.0)
        return cls(origin=box.lo, axes=np.eye(3), extent=box.extent)

    def transformed(self, rotation, translation=(0.0, 0.0, 0.0)) -> "GridFrame":
        r = np.asarray(rotation, dtype=np.float64)
        return GridFrame(
            origin=r @ self.origin + np.asarray(translation, dtype=np.float64),
            axes=self.axes @ r.T,
            extent=self.extent,
        )


def lattice_points(frame: GridFrame, resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell centres of a ``resolution``³ lattice in row-major (x slowest) order.

    Returns ``(world_points, ijk, steps)``.
    """
    steps = frame.extent / resolution
    r = np.arange(resolution)
    ijk = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    local = (ijk + 0.5) * steps
    return frame.origin + local @ frame.axes, ijk, steps


def sample_inner_points_grid(mesh: TriangleMesh, bvh: TriangleBvh, resolution: int, *,
                             frame: GridFrame | None = None, seed: int = 0, threads: int = 1,
                             backend: str | None = None, timings: dict | None = None) -> VolumeSamples:
    """Cell-centred lattice over the bounding box (or ``frame``), filtered by occupancy."""
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    t0 = time.perf_counter()
    frame = frame or GridFrame.from_mesh(mesh)
    world, ijk, steps = lattice_points(frame, resolution)
    _tick(timings, "sampling", t0)
    t0 = time.perf_counter()
    occ = occupancy_batch(bvh, world, seed=seed, threads=threads, backend=backend)
    keep = occ == 1
    _tick(timings, "occupancy", t0)
    if not keep.any():
        raise NoInnerPoints(f"no cell centre of the {resolution}^3 lattice is inside the mesh")
    source = {"kind": "meshgrid", "resolution": int(resolution), "seed": int(seed)}
    return VolumeSamples(points=world[keep], source=source, lattice=(ijk[keep], steps), drawn=len(world))
