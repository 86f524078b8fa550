"""Analytic test shapes with closed-form skeletons.

Each shape generates a watertight tessellation and knows, in closed form,
whether a point is inside, its distance to the true surface and its distance
to the true skeleton (the set of maximal-ball centres).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySkeleton, InvalidConfig, UnsupportedResolution
from .mesh import TriangleMesh

# ----------------------------------------------------------------------------- helpers


def _norm(p):
    return np.linalg.norm(p, axis=-1)


def _segment_distance(p, a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    ab = b - a
    t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return _norm(p - (a + t[:, None] * ab))


def _barycentric_lattice(order):
    pts = [(i / order, j / order) for i in range(order + 1) for j in range(order + 1 - i)]
    w = np.array([(1 - u - v, u, v) for u, v in pts])
    return w


def sampled_deviation(shape, mesh: TriangleMesh, order: int = 6) -> float:
    """Max |surface distance| over a barycentric lattice on every triangle."""
    w = _barycentric_lattice(order)
    c = mesh.corners
    worst = 0.0
    for b0 in range(0, len(c), 4096):
        pts = np.einsum("kj,tjd->tkd", w, c[b0:b0 + 4096]).reshape(-1, 3)
        worst = max(worst, float(np.abs(shape.surface_distance(pts)).max()))
    return worst


class AnalyticShape:
    kind = "shape"
    #: maximal-ball radius at the skeleton "core", for sanity checks
    core_radius = 0.0

    def mesh(self) -> TriangleMesh:
        raise NotImplementedError

    def contains(self, p) -> np.ndarray:
        raise NotImplementedError

    def surface_distance(self, p) -> np.ndarray:
        raise NotImplementedError

    def skeleton_distance(self, p) -> np.ndarray:
        raise NotImplementedError

    def deviation_bound(self) -> float:
        """Upper bound on the distance between the tessellation and the true surface."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def spec(self) -> str:
        return f"{self.kind}:" + ",".join(f"{k}={v}" for k, v in self.params().items())


# ----------------------------------------------------------------------------- sphere

_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_V = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=np.float64)
_ICO_F = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def icosphere(subdiv: int, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Subdivided icosahedron with ``20 * 4**subdiv`` faces, vertices on the sphere."""
    v = _ICO_V / _norm(_ICO_V)[:, None]
    f = _ICO_F
    for _ in range(subdiv):
        edges = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
        uniq, inv = np.unique(edges, axis=0, return_inverse=True)
        inv = inv.ravel()
        mid = v[uniq[:, 0]] + v[uniq[:, 1]]
        mid /= _norm(mid)[:, None]
        m = inv.reshape(3, -1).T + len(v)  # midpoints of edges (01, 12, 20)
        v = np.vstack([v, mid])
        a, b, c = f[:, 0], f[:, 1], f[:, 2]
        ab, bc, ca = m[:, 0], m[:, 1], m[:, 2]
        f = np.concatenate([
            np.stack([a, ab, ca], 1), np.stack([b, bc, ab], 1),
            np.stack([c, ca, bc], 1), np.stack([ab, bc, ca], 1),
        ])
    return TriangleMesh(v * radius + np.asarray(center, float), f)


@dataclass(frozen=True)
class Sphere(AnalyticShape):
    r: float = 1.0
    subdiv: int = 4
    kind = "sphere"

    def __post_init__(self):
        if not 0 <= self.subdiv <= 8:
            raise UnsupportedResolution(f"sphere subdiv must be in [0, 8], got {self.subdiv}")

    @property
    def core_radius(self):
        return self.r

    def mesh(self):
        return icosphere(self.subdiv, self.r)

    def contains(self, p):
        return _norm(np.atleast_2d(p)) < self.r

    def surface_distance(self, p):
        return np.abs(_norm(np.atleast_2d(p)) - self.r)

    def skeleton_distance(self, p):
        return _norm(np.atleast_2d(p))

    def deviation_bound(self):
        return self.r * (1.0 - math.cos(math.pi / (2.0 * 2 ** self.subdiv)))

    def params(self):
        return {"r": self.r, "subdiv": self.subdiv}


# ----------------------------------------------------------------------------- box

_BOX_FACES = np.array([
    [0, 1, 3, 2], [4, 6, 7, 5], [0, 4, 5, 1], [2, 3, 7, 6], [0, 2, 6, 4], [1, 5, 7, 3],
])


def box_mesh(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box as 12 outward-wound triangles."""
    h = np.asarray(size, float) / 2.0
    v = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], float)
    v = v * h + np.asarray(center, float)
    tris = []
    for a, b, c, d in _BOX_FACES:
        tris += [[a, b, c], [a, c, d]]
    return TriangleMesh(v, tris)


def _clip(poly, a, b):
    """Sutherland-Hodgman: keep the part of a 2D polygon with ``a . x <= b``."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = a @ p - b, a @ q - b
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            out.append(p + (q - p) * (fp / (fp - fq)))
    return out


class _PlanarPiece:
    """Convex polygon ``{x : n . x = c} ∩ {A x <= b}`` stored in 2D plane coordinates."""

    def __init__(self, normal, offset, halfspaces, span):
        n = np.asarray(normal, float)
        n = n / np.linalg.norm(n)
        offset = offset / np.linalg.norm(normal)
        helper = np.eye(3)[int(np.argmin(np.abs(n)))]
        u = np.cross(n, helper)
        u /= np.linalg.norm(u)
        w = np.cross(n, u)
        self.n, self.u, self.w, self.o = n, u, w, n * offset
        poly = [np.array(p, float) for p in ((-span, -span), (span, -span), (span, span), (-span, span))]
        for a, b in halfspaces:
            a = np.asarray(a, float)
            a2 = np.array([a @ u, a @ w])
            b2 = b - a @ self.o
            if np.allclose(a2, 0.0):
                if b2 < -1e-15:
                    poly = []
                continue
            poly = _clip(poly, a2, b2)
            if not poly:
                break
        self.poly = np.array(poly).reshape(-1, 2)

    @property
    def empty(self):
        return len(self.poly) == 0

    def distance(self, p):
        rel = p - self.o
        dn = rel @ self.n
        q = np.stack([rel @ self.u, rel @ self.w], axis=1)
        poly = self.poly
        m = len(poly)
        e = np.roll(poly, -1, axis=0) - poly
        area2 = float(np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1]))
        best = np.full(len(p), np.inf)
        inside = np.ones(len(p), dtype=bool) if m >= 3 and abs(area2) > 1e-14 else np.zeros(len(p), bool)
        sign = 1.0 if area2 >= 0 else -1.0
        for i in range(m):
            d = q - poly[i]
            ee = e[i] @ e[i]
            if ee > 0:
                t = np.clip((d @ e[i]) / ee, 0.0, 1.0)
            else:
                t = np.zeros(len(q))
            best = np.minimum(best, _norm(d - t[:, None] * e[i]))
            cross = e[i][0] * d[:, 1] - e[i][1] * d[:, 0]
            inside &= sign * cross >= -1e-14
        planar = np.where(inside, 0.0, best)
        return np.sqrt(dn * dn + planar * planar)


@dataclass(frozen=True)
class Box(AnalyticShape):
    """Box with full edge lengths ``a, b, c`` centred at the origin."""

    a: float = 2.0
    b: float = 1.0
    c: float = 1.0
    kind = "box"

    def __post_init__(self):
        if min(self.a, self.b, self.c) <= 0:
            raise UnsupportedResolution("box edges must be positive")

    @property
    def half(self):
        return np.array([self.a, self.b, self.c]) / 2.0

    @property
    def core_radius(self):
        return float(self.half.min())

    def mesh(self):
        return box_mesh((self.a, self.b, self.c))

    def contains(self, p):
        return np.all(np.abs(np.atleast_2d(p)) < self.half, axis=1)

    def surface_distance(self, p):
        p = np.abs(np.atleast_2d(p))
        h = self.half
        outside = _norm(np.maximum(p - h, 0.0))
        inside = (h - p).min(axis=1)
        return np.where(np.all(p < h, axis=1), inside, outside)

    def medial_pieces(self) -> list:
        """Medial surface restricted to the positive octant, as convex planar pieces.

        A point belongs to the medial surface when its smallest face distance
        ``h_i - x_i`` is attained twice: by two adjacent faces (a bisector
        plane) or by a pair of opposite faces (the plane ``x_i = 0``).
        """
        h = self.half
        span = 4.0 * float(h.max())
        eye = np.eye(3)
        octant = [(-eye[i], 0.0) for i in range(3)] + [(eye[i], h[i]) for i in range(3)]
        pieces = []
        for i in range(3):
            for j in range(i + 1, 3):
                k = 3 - i - j
                # h_i - x_i = h_j - x_j  <=>  x_i - x_j = h_i - h_j ; and that value <= h_k - x_k
                normal = eye[i] - eye[j]
                extra = [(eye[k] - eye[i], h[k] - h[i])]
                pieces.append(_PlanarPiece(normal, h[i] - h[j], octant + extra, span))
        for i in range(3):
            extra = [(eye[k], h[k] - h[i]) for k in range(3) if k != i]
            pieces.append(_PlanarPiece(eye[i], 0.0, octant + extra, span))
        return [pc for pc in pieces if not pc.empty]

    def skeleton_distance(self, p):
        q = np.abs(np.atleast_2d(np.asarray(p, float)))
        dist = np.full(len(q), np.inf)
        for piece in self.medial_pieces():
            dist = np.minimum(dist, piece.distance(q))
        return dist

    def deviation_bound(self):
        return 0.0

    def params(self):
        return {"a": self.a, "b": self.b, "c": self.c}


# ----------------------------------------------------------------------------- torus

def torus_mesh(R: float, r: float, n_major: int, n_minor: int) -> TriangleMesh:
    u = 2 * np.pi * np.arange(n_major) / n_major
    v = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    verts = np.stack([
        (R + r * np.cos(vv)) * np.cos(uu),
        (R + r * np.cos(vv)) * np.sin(uu),
        r * np.sin(vv),
    ], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    i1, j1 = (i + 1) % n_major, (j + 1) % n_minor
    a = (i * n_minor + j).ravel()
    b = (i1 * n_minor + j).ravel()
    c = (i1 * n_minor + j1).ravel()
    d = (i * n_minor + j1).ravel()
    tris = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return TriangleMesh(verts, tris)


@dataclass(frozen=True)
class Torus(AnalyticShape):
    R: float = 1.0
    r: float = 0.3
    n_major: int = 200
    n_minor: int = 50
    kind = "torus"

    def __post_init__(self):
        if self.n_major < 3 or self.n_minor < 3:
            raise UnsupportedResolution("torus needs at least 3 segments per direction")
        if not 0 < self.r < self.R:
            raise UnsupportedResolution("torus requires 0 < r < R")

    @property
    def core_radius(self):
        return self.r

    def mesh(self):
        return torus_mesh(self.R, self.r, self.n_major, self.n_minor)

    def _tube(self, p):
        p = np.atleast_2d(p)
        rho = np.hypot(p[:, 0], p[:, 1])
        return np.hypot(rho - self.R, p[:, 2])

    def contains(self, p):
        return self._tube(p) < self.r

    def surface_distance(self, p):
        return np.abs(self._tube(p) - self.r)

    def skeleton_distance(self, p):
        return self._tube(p)

    def deviation_bound(self):
        # sagitta across the tube plus sagitta along the major circle
        return self.r * (1 - math.cos(math.pi / self.n_minor)) + (self.R + self.r) * (
            1 - math.cos(math.pi / self.n_major)
        )

    def params(self):
        return {"R": self.R, "r": self.r, "res": f"{self.n_major}x{self.n_minor}"}


# ----------------------------------------------------------------------------- capsule

def capsule_mesh(r: float, h: float, n_around: int, n_cap: int) -> TriangleMesh:
    """Cylinder of length ``h`` along z with hemispherical caps of radius ``r``."""
    rings = []
    # latitude angles from the south pole (excluded) to the north pole (excluded)
    south = [-math.pi / 2 + math.pi / 2 * k / n_cap for k in range(1, n_cap + 1)]
    north = [math.pi / 2 * k / n_cap for k in range(0, n_cap)]
    for lat in south:
        rings.append((r * math.cos(lat), -h / 2 + r * math.sin(lat)))
    for lat in north:
        rings.append((r * math.cos(lat), h / 2 + r * math.sin(lat)))
    theta = 2 * np.pi * np.arange(n_around) / n_around
    verts = [np.array([[0.0, 0.0, -h / 2 - r]])]
    for rad, z in rings:
        verts.append(np.stack([rad * np.cos(theta), rad * np.sin(theta), np.full(n_around, z)], 1))
    verts.append(np.array([[0.0, 0.0, h / 2 + r]]))
    verts = np.vstack(verts)
    top = len(verts) - 1
    ring = lambda k, i: 1 + k * n_around + (i % n_around)  # noqa: E731
    tris = []
    for i in range(n_around):
        tris.append([0, ring(0, i + 1), ring(0, i)])
    for k in range(len(rings) - 1):
        for i in range(n_around):
            a, b = ring(k, i), ring(k, i + 1)
            c, d = ring(k + 1, i + 1), ring(k + 1, i)
            tris += [[a, b, c], [a, c, d]]
    last = len(rings) - 1
    for i in range(n_around):
        tris.append([top, ring(last, i), ring(last, i + 1)])
    return TriangleMesh(verts, tris)


@dataclass(frozen=True)
class Capsule(AnalyticShape):
    r: float = 0.3
    h: float = 1.0
    n_around: int = 64
    n_cap: int = 16
    kind = "capsule"

    def __post_init__(self):
        if self.n_around < 3 or self.n_cap < 1:
            raise UnsupportedResolution("capsule needs n_around >= 3 and n_cap >= 1")
        if self.r <= 0 or self.h <= 0:
            raise UnsupportedResolution("capsule needs positive r and h")

    @property
    def core_radius(self):
        return self.r

    def mesh(self):
        return capsule_mesh(self.r, self.h, self.n_around, self.n_cap)

    def _axis(self, p):
        return _segment_distance(np.atleast_2d(p), (0, 0, -self.h / 2), (0, 0, self.h / 2))

    def contains(self, p):
        return self._axis(p) < self.r

    def surface_distance(self, p):
        return np.abs(self._axis(p) - self.r)

    def skeleton_distance(self, p):
        return self._axis(p)

    def deviation_bound(self):
        # sagitta of the quad diagonal on the caps; the barrel only sags around the axis
        return self.r * (1 - math.cos(math.hypot(math.pi / self.n_around, math.pi / (4 * self.n_cap))))

    def params(self):
        return {"r": self.r, "h": self.h, "res": f"{self.n_around}x{self.n_cap}"}


# ----------------------------------------------------------------------------- finned cylinder

@dataclass(frozen=True)
class FinnedCylinder(AnalyticShape):
    """Cylinder along z with a thin rectangular fin sticking out along +x.

    The cross-section (circle plus fin) is star-shaped about the axis, so
    the caps are fans around a centre vertex. There is no closed-form
    skeleton; the shape exists to give regions of very different local
    feature size.
    """

    r: float = 0.5
    h: float = 2.0
    fin_length: float = 0.6
    fin_thickness: float = 0.08
    n_around: int = 96
    n_layers: int = 24
    n_fin: int = 12
    kind = "finned"

    def __post_init__(self):
        if not 0 < self.fin_thickness < 2 * self.r:
            raise UnsupportedResolution("fin thickness must be below the cylinder diameter")
        if self.n_around < 8 or self.n_layers < 1 or self.n_fin < 1:
            raise UnsupportedResolution("finned cylinder resolution too small")

    @property
    def core_radius(self):
        return self.r

    @property
    def _root_x(self):
        return math.sqrt(self.r ** 2 - (self.fin_thickness / 2) ** 2)

    def profile(self) -> np.ndarray:
        """Counter-clockwise outline of the cross-section."""
        t2 = self.fin_thickness / 2
        th0 = math.asin(t2 / self.r)
        arc = np.linspace(th0, 2 * np.pi - th0, self.n_around)
        pts = [np.stack([self.r * np.cos(arc), self.r * np.sin(arc)], 1)]
        tip = self.r + self.fin_length
        xs = np.linspace(self._root_x, tip, self.n_fin + 1)[1:]
        pts.append(np.stack([xs, np.full_like(xs, -t2)], 1))
        xs_back = xs[::-1][1:]
        pts.append(np.stack([xs_back, np.full_like(xs_back, t2)], 1))
        return np.vstack(pts)

    def mesh(self):
        prof = self.profile()
        m = len(prof)
        zs = np.linspace(-self.h / 2, self.h / 2, self.n_layers + 1)
        verts = [np.column_stack([prof, np.full(m, z)]) for z in zs]
        verts.append([[0.0, 0.0, zs[0]], [0.0, 0.0, zs[-1]]])
        verts = np.vstack(verts)
        bottom_c, top_c = len(verts) - 2, len(verts) - 1
        tris = []
        for layer in range(self.n_layers):
            o0, o1 = layer * m, (layer + 1) * m
            for i in range(m):
                j = (i + 1) % m
                tris += [[o0 + i, o0 + j, o1 + j], [o0 + i, o1 + j, o1 + i]]
        top = self.n_layers * m
        for i in range(m):
            j = (i + 1) % m
            tris.append([bottom_c, j, i])
            tris.append([top_c, top + i, top + j])
        return TriangleMesh(verts, tris)

    def _in_profile(self, xy):
        t2 = self.fin_thickness / 2
        circle = np.hypot(xy[:, 0], xy[:, 1]) < self.r
        fin = (np.abs(xy[:, 1]) < t2) & (xy[:, 0] > 0) & (xy[:, 0] < self.r + self.fin_length)
        return circle | fin

    def contains(self, p):
        p = np.atleast_2d(p)
        return self._in_profile(p[:, :2]) & (np.abs(p[:, 2]) < self.h / 2)

    def region_labels(self, points) -> np.ndarray:
        """``"fin"`` beyond the fin root, ``"cap"`` on the end planes, else ``"barrel"``."""
        p = np.atleast_2d(points)
        labels = np.full(len(p), "barrel", dtype=object)
        cap = np.isclose(np.abs(p[:, 2]), self.h / 2)
        fin = p[:, 0] > self._root_x + 1e-9
        labels[fin] = "fin"
        labels[cap & ~fin] = "cap"
        return labels

    def deviation_bound(self):
        return self.r * (1 - math.cos(math.pi / self.n_around))

    def params(self):
        return {
            "r": self.r, "h": self.h, "fin_length": self.fin_length,
            "fin_thickness": self.fin_thickness, "res": f"{self.n_around}x{self.n_layers}x{self.n_fin}",
        }


# ----------------------------------------------------------------------------- API

def generate_mesh(shape: AnalyticShape, resolution=None) -> TriangleMesh:
    """Tessellate ``shape``; ``resolution`` optionally overrides its own."""
    if resolution is not None:
        shape = with_resolution(shape, resolution)
    return shape.mesh()


def with_resolution(shape: AnalyticShape, resolution):
    res = _parse_res(resolution)
    if isinstance(shape, Sphere):
        return Sphere(shape.r, *res[:1])
    if isinstance(shape, Torus):
        return Torus(shape.R, shape.r, *_pad(res, 2))
    if isinstance(shape, Capsule):
        return Capsule(shape.r, shape.h, *_pad(res, 2))
    if isinstance(shape, FinnedCylinder):
        return FinnedCylinder(shape.r, shape.h, shape.fin_length, shape.fin_thickness, *_pad(res, 3))
    if isinstance(shape, Box):
        return shape
    raise UnsupportedResolution(f"unknown shape {shape!r}")


def _pad(res, n):
    if len(res) != n:
        raise UnsupportedResolution(f"expected {n} resolution components, got {res}")
    return res


def _parse_res(value):
    if isinstance(value, int):
        return (value,)
    if isinstance(value, str):
        try:
            return tuple(int(x) for x in value.lower().split("x"))
        except ValueError:
            raise UnsupportedResolution(f"bad resolution {value!r}") from None
    return tuple(int(x) for x in value)


def analytic_skeleton_error(shape: AnalyticShape, skeleton) -> dict:
    """Mean and max distance from the skeleton centres to the analytic skeleton."""
    centers = getattr(skeleton, "centers", skeleton)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if len(centers) == 0:
        raise EmptySkeleton("skeleton has no spheres")
    d = shape.skeleton_distance(centers)
    return {"mean": float(d.mean()), "max": float(d.max())}


_KINDS = {
    "sphere": (Sphere, {"r": float, "subdiv": int}),
    "box": (Box, {"a": float, "b": float, "c": float}),
    "torus": (Torus, {"R": float, "r": float, "res": ("n_major", "n_minor")}),
    "capsule": (Capsule, {"r": float, "h": float, "res": ("n_around", "n_cap")}),
    "finned": (FinnedCylinder, {
        "r": float, "h": float, "fin_length": float, "fin_thickness": float,
        "res": ("n_around", "n_layers", "n_fin"),
    }),
}


def parse_shape(spec: str) -> AnalyticShape:
    """Parse ``kind:key=value,...``, e.g. ``torus:R=1,r=0.3,res=200x50``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind not in _KINDS:
        raise InvalidConfig(f"unknown shape kind {kind!r} (choose from {sorted(_KINDS)})")
    cls, fields = _KINDS[kind]
    kwargs = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq or key not in fields:
            raise InvalidConfig(f"bad shape parameter {item!r} for {kind}")
        conv = fields[key]
        if isinstance(conv, tuple):
            parts = _parse_res(value)
            if len(parts) != len(conv):
                raise InvalidConfig(f"{kind} res needs {len(conv)} components")
            kwargs.update(zip(conv, parts))
        else:
            try:
                kwargs[key] = conv(value)
            except ValueError:
                raise InvalidConfig(f"bad value in {item!r}") from None
    return cls(**kwargs)
