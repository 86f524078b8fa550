"""Pure numpy implementations of the compiled kernels.

BVH traversal is done breadth-first over a whole batch of queries at once
(a "wavefront" of ``(query, node)`` pairs), which keeps every step vectorised.
Arithmetic follows the compiled kernels operation for operation, so results
match bit for bit (retry directions may differ in the last ulp because numpy
and libm ``cos``/``sin`` are not guaranteed to round identically).
"""
import numpy as np

EDGE_TOL = 1e-9
DET_TOL = 1e-12
HIT_TOL = 1e-12
BOX_TOL = 1e-12
MAX_RETRIES = 8
MAX_VOTES = 3
PRIMARY_DIRECTION = (0.8164965809095576, 0.4472135955052349, 0.3651483717042742)

_CHUNK = 8192
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _cross(a, b):
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def _ray_hits_box(o, d, lo, hi):
    zero = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (lo - o) * inv
        t2 = (hi - o) * inv
    tlo = np.minimum(t1, t2)
    thi = np.maximum(t1, t2)
    in_slab = (o >= lo) & (o <= hi)
    tlo = np.where(zero, np.where(in_slab, -np.inf, np.inf), tlo)
    thi = np.where(zero, np.where(in_slab, np.inf, -np.inf), thi)
    tmin = np.maximum(tlo.max(axis=1), 0.0)
    tmax = thi.min(axis=1)
    with np.errstate(invalid="ignore"):
        return tmin <= tmax + BOX_TOL * (1.0 + np.abs(tmax))


def _ray_tri(o, d, t):
    """Crossing indicator and degeneracy flag for rays ``o + s d`` against triangles ``t`` (m, 9)."""
    v0 = t[:, 0:3]
    e1 = t[:, 3:6] - v0
    e2 = t[:, 6:9] - v0
    s = o - v0
    p = _cross(d, e2)
    det = _dot(e1, p)
    flat = np.abs(det) < DET_TOL
    n = _cross(e1, e2)
    nn = np.sqrt(_dot(n, n))
    deg_flat = flat & (nn > 0.0) & (np.abs(_dot(s, n)) <= EDGE_TOL * nn)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        u = _dot(s, p) * inv
        q = _cross(s, e1)
        v = _dot(d, q) * inv
        hit = _dot(e2, q) * inv
        ok = ~flat
        ok &= ~((u < -EDGE_TOL) | (u > 1.0 + EDGE_TOL))
        ok &= ~((v < -EDGE_TOL) | (u + v > 1.0 + EDGE_TOL))
        ok &= ~(hit < -HIT_TOL)
        deg = ok & ((hit <= HIT_TOL) | (u < EDGE_TOL) | (v < EDGE_TOL) | (u + v > 1.0 - EDGE_TOL))
    crosses = ok & (hit > HIT_TOL)
    return crosses, deg | deg_flat


def _expand_leaves(q, nodes, start, count):
    cnt = count[nodes].astype(np.int64)
    rq = np.repeat(q, cnt)
    offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    tri = np.repeat(start[nodes].astype(np.int64), cnt) + offs
    return rq, tri


def ray_crossings(origins, directions, lo, hi, left, right, start, count, tris, threads=1):
    origins = np.asarray(origins, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    n = len(origins)
    counts = np.zeros(n, dtype=np.int32)
    flags = np.zeros(n, dtype=np.uint8)
    for c0 in range(0, n, _CHUNK):
        c1 = min(n, c0 + _CHUNK)
        size = c1 - c0
        hit_total = np.zeros(size, dtype=np.int64)
        deg_total = np.zeros(size, dtype=np.int64)
        q = np.arange(size)
        node = np.zeros(size, dtype=np.int64)
        o, d = origins[c0:c1], directions[c0:c1]
        while q.size:
            keep = _ray_hits_box(o[q], d[q], lo[node], hi[node])
            q, node = q[keep], node[keep]
            leaf = left[node] < 0
            if leaf.any():
                rq, tri = _expand_leaves(q[leaf], node[leaf], start, count)
                hit, deg = _ray_tri(o[rq], d[rq], tris[tri])
                hit_total += np.bincount(rq, weights=hit, minlength=size).astype(np.int64)
                deg_total += np.bincount(rq, weights=deg, minlength=size).astype(np.int64)
            inner = ~leaf
            iq, inn = q[inner], node[inner]
            q = np.concatenate([iq, iq])
            node = np.concatenate([left[inn], right[inn]]).astype(np.int64)
        counts[c0:c1] = hit_total
        flags[c0:c1] = deg_total > 0
    return counts, flags


def _splitmix(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def _point_keys(points, seed):
    bits = (np.ascontiguousarray(points, dtype=np.float64) + 0.0).view(np.uint64)
    key = _splitmix(np.full(len(points), np.uint64(seed), dtype=np.uint64))
    for a in range(3):
        key = _splitmix(key ^ bits[:, a])
    return key


def retry_directions(points, seed, retries):
    key = _point_keys(points, seed)
    out = np.empty((len(points), retries, 3))
    for r in range(retries):
        with np.errstate(over="ignore"):  # wrapping uint64 arithmetic is intended
            s1 = _splitmix(key + np.uint64(2 * r + 1) * _GOLDEN)
            s2 = _splitmix(key + np.uint64(2 * r + 2) * _GOLDEN)
        u = (s1 >> np.uint64(11)).astype(np.float64) * 1.1102230246251565e-16
        v = (s2 >> np.uint64(11)).astype(np.float64) * 1.1102230246251565e-16
        z = 1.0 - 2.0 * u
        rxy = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = 6.283185307179586 * v
        out[:, r, 0] = rxy * np.cos(phi)
        out[:, r, 1] = rxy * np.sin(phi)
        out[:, r, 2] = z
    return out


def occupancy(points, lo, hi, left, right, start, count, tris, seed, threads=1):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = len(points)
    out = np.zeros(n, dtype=np.uint8)
    inside_box = np.all((points >= lo[0]) & (points <= hi[0]), axis=1)
    idx = np.flatnonzero(inside_box)
    if idx.size == 0:
        return out
    p = points[idx]
    d0 = np.broadcast_to(np.asarray(PRIMARY_DIRECTION), p.shape)
    c, deg = ray_crossings(p, np.ascontiguousarray(d0), lo, hi, left, right, start, count, tris)
    out[idx] = c & 1
    bad = np.flatnonzero(deg)
    if bad.size == 0:
        return out
    pb = p[bad]
    dirs = retry_directions(pb, seed, MAX_RETRIES)
    parity = np.full((len(bad), MAX_RETRIES), -1, dtype=np.int64)
    for r in range(MAX_RETRIES):
        cr, dr = ray_crossings(pb, np.ascontiguousarray(dirs[:, r]), lo, hi, left, right, start, count, tris)
        parity[:, r] = np.where(dr > 0, -1, cr & 1)
    for j, row in enumerate(parity):
        votes = [int(x) for x in row if x >= 0][:MAX_VOTES]
        if not votes:
            out[idx[bad[j]]] = 2
            continue
        ones = sum(votes)
        zeros = len(votes) - ones
        out[idx[bad[j]]] = 1 if ones > zeros else 0 if zeros > ones else votes[0]
    return out


def _box_dist2(p, lo, hi):
    below = np.where(p < lo, lo - p, 0.0)
    above = np.where(p > hi, p - hi, 0.0)
    e = below + above
    e = e * e
    return e[:, 0] + e[:, 1] + e[:, 2]


def _tri_dist2(p, t):
    a, b, c = t[:, 0:3], t[:, 3:6], t[:, 6:9]
    ab, ac = b - a, c - a
    ap, bp, cp = p - a, p - b, p - c
    d1, d2 = _dot(ab, ap), _dot(ac, ap)
    d3, d4 = _dot(ab, bp), _dot(ac, bp)
    d5, d6 = _dot(ab, cp), _dot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4
    out = np.empty(len(p))
    todo = np.ones(len(p), dtype=bool)

    def take(mask, value_fn):
        sel = todo & mask
        if sel.any():
            out[sel] = value_fn(sel)
            todo[sel] = False

    def sq(sel, pt):
        e = p[sel] - pt
        return e[:, 0] * e[:, 0] + e[:, 1] * e[:, 1] + e[:, 2] * e[:, 2]

    take((d1 <= 0.0) & (d2 <= 0.0), lambda s: _dot(ap[s], ap[s]))
    take((d3 >= 0.0) & (d4 <= d3), lambda s: _dot(bp[s], bp[s]))
    with np.errstate(divide="ignore", invalid="ignore"):
        take((vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0),
             lambda s: sq(s, a[s] + (d1[s] / (d1[s] - d3[s]))[:, None] * ab[s]))
        take((d6 >= 0.0) & (d5 <= d6), lambda s: _dot(cp[s], cp[s]))
        take((vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0),
             lambda s: sq(s, a[s] + (d2[s] / (d2[s] - d6[s]))[:, None] * ac[s]))

        def edge_bc(s):
            w = (d4[s] - d3[s]) / ((d4[s] - d3[s]) + (d5[s] - d6[s]))
            return sq(s, b[s] + w[:, None] * (c[s] - b[s]))

        take((va <= 0.0) & ((d4 - d3) >= 0.0) & ((d5 - d6) >= 0.0), edge_bc)

        def face(s):
            denom = 1.0 / (va[s] + vb[s] + vc[s])
            v = vb[s] * denom
            w = vc[s] * denom
            return sq(s, a[s] + ab[s] * v[:, None] + ac[s] * w[:, None])

        take(np.ones(len(p), dtype=bool), face)
    return out


def closest_distance(points, lo, hi, left, right, start, count, tris, threads=1):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = len(points)
    out = np.empty(n)
    for c0 in range(0, n, _CHUNK):
        p = points[c0:c0 + _CHUNK]
        size = len(p)
        # upper bound from a greedy descent towards the nearest child box
        node = np.zeros(size, dtype=np.int64)
        inner = left[node] >= 0
        while inner.any():
            l, r = left[node[inner]], right[node[inner]]
            dl = _box_dist2(p[inner], lo[l], hi[l])
            dr = _box_dist2(p[inner], lo[r], hi[r])
            node[inner] = np.where(dl <= dr, l, r)
            inner = left[node] >= 0
        rq, tri = _expand_leaves(np.arange(size), node, start, count)
        best = np.full(size, np.inf)
        np.minimum.at(best, rq, _tri_dist2(p[rq], tris[tri]))
        # exact pass with pruning
        q = np.arange(size)
        node = np.zeros(size, dtype=np.int64)
        while q.size:
            keep = _box_dist2(p[q], lo[node], hi[node]) < best[q]
            q, node = q[keep], node[keep]
            leaf = left[node] < 0
            if leaf.any():
                rq, tri = _expand_leaves(q[leaf], node[leaf], start, count)
                np.minimum.at(best, rq, _tri_dist2(p[rq], tris[tri]))
            iq, inn = q[~leaf], node[~leaf]
            q = np.concatenate([iq, iq])
            node = np.concatenate([left[inn], right[inn]]).astype(np.int64)
        out[c0:c0 + size] = np.sqrt(best)
    return out


def dilate(field, neighbors, threads=1):
    field = np.asarray(field, dtype=np.float64)
    neighbors = np.asarray(neighbors)
    if neighbors.size and (neighbors.min() < 0 or neighbors.max() >= len(field)):
        raise IndexError("neighbor index out of range")
    out = np.empty(len(neighbors))
    step = max(1, 4_000_000 // max(1, neighbors.shape[1]))
    for c0 in range(0, len(neighbors), step):
        out[c0:c0 + step] = field[neighbors[c0:c0 + step]].max(axis=1)
    return out
