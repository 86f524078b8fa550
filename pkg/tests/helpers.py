"""Independent brute-force references used across the tests."""
import numpy as np


def point_triangle_distance(p, a, b, c):
    """Distance by projecting onto the plane, falling back to the three edges."""
    n = np.cross(b - a, c - a)
    n = n / np.linalg.norm(n)
    h = np.dot(p - a, n)
    q = p - h * n
    # inside test with same-side signs
    inside = all(np.dot(np.cross(v1 - v0, q - v0), n) >= 0 for v0, v1 in ((a, b), (b, c), (c, a)))
    if inside:
        return abs(h)
    return min(segment_distance(p, v0, v1) for v0, v1 in ((a, b), (b, c), (c, a)))


def segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def mesh_distance(mesh, p):
    c = mesh.corners
    return min(point_triangle_distance(np.asarray(p, float), *c[i]) for i in range(len(c)))


def ray_crossings(mesh, origin, direction):
    """Plain Moller-Trumbore over every triangle, no acceleration, no edge handling."""
    count = 0
    for a, b, c in mesh.corners:
        e1, e2 = b - a, c - a
        pv = np.cross(direction, e2)
        det = np.dot(e1, pv)
        if abs(det) < 1e-15:
            continue
        s = origin - a
        u = np.dot(s, pv) / det
        qv = np.cross(s, e1)
        v = np.dot(direction, qv) / det
        t = np.dot(e2, qv) / det
        if u >= 0 and v >= 0 and u + v <= 1 and t > 0:
            count += 1
    return count


def brute_knn(points, k):
    """Row i: i then the k nearest other points, ties by smaller index."""
    p = np.asarray(points, float)
    d2 = ((p[:, None, :] - p[None, :, :]) ** 2).sum(-1)
    out = []
    for i in range(len(p)):
        d = d2[i].copy()
        d[i] = -1.0
        order = np.lexsort((np.arange(len(p)), d))
        out.append(order[: k + 1])
    return np.array(out)


def brute_local_maxima(values, neighbors):
    """Indices whose value is >= every value in their neighbourhood row."""
    return {i for i in range(len(values)) if all(values[i] >= values[j] for j in neighbors[i])}
