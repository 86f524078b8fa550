"""Triangle mesh container, OBJ/PLY input and output, watertightness report."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from plyfile import PlyData, PlyElement

from .errors import EmptyMesh, ParseError

DEGENERATE_AREA = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle surface.

    ``vertices`` is ``(V, 3)`` float64 and ``triangles`` is ``(T, 3)`` int64.
    Both arrays are read-only; the mesh can be shared across threads.
    ``dropped`` counts degenerate triangles removed by :func:`validate_mesh`.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64, copy=True).reshape(-1, 3)
        t = np.array(self.triangles, dtype=np.int64, copy=True).reshape(-1, 3)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ParseError("triangle index out of range")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "triangles", _frozen(t))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def corners(self) -> np.ndarray:
        """``(T, 3, 3)`` triangle corner coordinates."""
        return _frozen(self.vertices[self.triangles])

    @cached_property
    def _cross(self) -> np.ndarray:
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return _frozen(0.5 * np.linalg.norm(self._cross, axis=1))

    @cached_property
    def normals(self) -> np.ndarray:
        n = self._cross / np.maximum(2.0 * self.areas, 1e-300)[:, None]
        return _frozen(n)

    def volume(self) -> float:
        """Signed enclosed volume (positive for outward winding)."""
        c = self.corners
        return float(np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0)

    def transformed(self, rotation: np.ndarray, translation=(0.0, 0.0, 0.0)) -> "TriangleMesh":
        v = self.vertices @ np.asarray(rotation, dtype=np.float64).T + np.asarray(translation, dtype=np.float64)
        return TriangleMesh(v, self.triangles)


@dataclass(frozen=True)
class Aabb:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=np.float64))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=np.float64))

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points)
        return np.all((p >= self.lo) & (p <= self.hi), axis=1)


@dataclass(frozen=True)
class WatertightReport:
    closed: bool
    boundary_edge_count: int
    non_manifold_edge_count: int
    inconsistent_edge_count: int = 0

    def as_dict(self) -> dict:
        return {
            "closed": self.closed,
            "boundary_edge_count": self.boundary_edge_count,
            "non_manifold_edge_count": self.non_manifold_edge_count,
            "inconsistent_edge_count": self.inconsistent_edge_count,
        }


def validate_mesh(vertices, triangles) -> TriangleMesh:
    """Build a mesh, dropping triangles whose area is at most 1e-12."""
    mesh = TriangleMesh(vertices, triangles)
    keep = mesh.areas > DEGENERATE_AREA
    if not keep.all():
        mesh = TriangleMesh(mesh.vertices, mesh.triangles[keep], dropped=int((~keep).sum()))
    if mesh.n_triangles == 0:
        raise EmptyMesh("mesh has no non-degenerate triangles")
    return mesh


def is_watertight(mesh: TriangleMesh) -> WatertightReport:
    t = mesh.triangles
    if len(t) == 0:
        return WatertightReport(False, 0, 0, 0)
    directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    undirected = np.sort(directed, axis=1)
    keys, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    boundary = int((counts == 1).sum())
    non_manifold = int((counts > 2).sum())
    # a consistently wound pair traverses the shared edge once in each direction
    forward = (directed[:, 0] < directed[:, 1]).astype(np.int64)
    n_forward = np.bincount(inverse, weights=forward, minlength=len(keys))
    inconsistent = int(((counts == 2) & (n_forward != 1)).sum())
    closed = boundary == 0 and non_manifold == 0 and inconsistent == 0
    return WatertightReport(closed, boundary, non_manifold, inconsistent)


def bounding_box(mesh: TriangleMesh, padding_fraction: float = 0.0) -> Aabb:
    if mesh.n_triangles == 0:
        raise EmptyMesh("cannot bound an empty mesh")
    if padding_fraction < 0:
        raise ValueError("padding_fraction must be non-negative")
    used = mesh.vertices[np.unique(mesh.triangles)]
    lo, hi = used.min(axis=0), used.max(axis=0)
    pad = padding_fraction * float((hi - lo).max())
    return Aabb(lo - pad, hi + pad)


# --------------------------------------------------------------------------- I/O

def _format_of(path, fmt):
    if fmt is None:
        fmt = Path(path).suffix.lower().lstrip(".")
    fmt = fmt.lower()
    if fmt not in ("obj", "ply"):
        raise ParseError(f"unsupported mesh format {fmt!r}")
    return fmt


def _fan(polys):
    tris = []
    for poly in polys:
        if len(poly) < 3:
            raise ParseError(f"face with {len(poly)} vertices")
        for i in range(1, len(poly) - 1):
            tris.append((poly[0], poly[i], poly[i + 1]))
    return np.asarray(tris, dtype=np.int64).reshape(-1, 3)


def _read_obj(path):
    verts, faces = [], []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "v":
                    if len(parts) < 4:
                        raise ParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    idx = []
                    for tok in parts[1:]:
                        i = int(tok.split("/")[0])
                        idx.append(i - 1 if i > 0 else len(verts) + i)
                    faces.append(idx)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return np.asarray(verts, dtype=np.float64).reshape(-1, 3), _fan(faces)


def _read_ply(path):
    try:
        ply = PlyData.read(str(path))
        vert = ply["vertex"]
        xyz = np.column_stack([np.asarray(vert[c], dtype=np.float64) for c in "xyz"])
        faces = np.zeros((0, 3), dtype=np.int64)
        extras = {
            p.name: np.asarray(vert[p.name], dtype=np.float64)
            for p in vert.properties
            if p.name not in ("x", "y", "z")
        }
        if "face" in ply:
            fel = ply["face"]
            name = "vertex_indices" if "vertex_indices" in fel.data.dtype.names else "vertex_index"
            raw = fel[name]
            if len(raw) and all(len(f) == 3 for f in raw):
                faces = np.vstack(raw).astype(np.int64)
            else:
                faces = _fan([list(f) for f in raw])
    except ParseError:
        raise
    except Exception as exc:  # plyfile raises a zoo of exception types
        raise ParseError(f"{path}: {exc}") from exc
    return xyz, faces, extras


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Load an OBJ or PLY mesh, dropping degenerate triangles.

    Vertices are not deduplicated, so the input indexing is preserved.
    """
    if not os.path.exists(path):
        raise ParseError(f"{path}: no such file")
    fmt = _format_of(path, format)
    if fmt == "obj":
        v, t = _read_obj(path)
    else:
        v, t, _ = _read_ply(path)
    if len(t) and (t.min() < 0 or t.max() >= len(v)):
        raise ParseError(f"{path}: face index out of range")
    return validate_mesh(v, t)


def load_points(path, format: str | None = None) -> tuple[np.ndarray, dict]:
    """Load the vertex positions (and extra float vertex properties) of a file."""
    if not os.path.exists(path):
        raise ParseError(f"{path}: no such file")
    fmt = _format_of(path, format)
    if fmt == "obj":
        v, _ = _read_obj(path)
        return v, {}
    v, _, extras = _read_ply(path)
    return v, extras


def write_ply(path, points, faces=None, properties: dict | None = None, binary: bool = True) -> None:
    """Write points (and optional triangles) as PLY.

    ``properties`` maps names to per-vertex arrays stored as float64 columns.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    properties = properties or {}
    dtype = [("x", "f8"), ("y", "f8"), ("z", "f8")] + [(name, "f8") for name in properties]
    data = np.empty(len(pts), dtype=dtype)
    data["x"], data["y"], data["z"] = pts[:, 0], pts[:, 1], pts[:, 2]
    for name, values in properties.items():
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(pts),):
            raise ValueError(f"property {name!r} has shape {values.shape}, expected ({len(pts)},)")
        data[name] = values
    elements = [PlyElement.describe(data, "vertex")]
    if faces is not None:
        f = np.asarray(faces, dtype=np.int32).reshape(-1, 3)
        fdata = np.empty(len(f), dtype=[("vertex_indices", "i4", (3,))])
        fdata["vertex_indices"] = f
        elements.append(PlyElement.describe(fdata, "face"))
    PlyData(elements, text=not binary, byte_order="<").write(str(path))


def save_mesh(path, mesh: TriangleMesh, format: str | None = None, binary: bool = True) -> None:
    fmt = _format_of(path, format)
    if fmt == "ply":
        write_ply(path, mesh.vertices, mesh.triangles, binary=binary)
        return
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in (mesh.triangles + 1).tolist():
            fh.write(f"f {a} {b} {c}\n")
