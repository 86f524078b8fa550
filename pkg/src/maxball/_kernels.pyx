# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: BVH ray-crossing counts, occupancy, closest distance, dilation.

Every routine here has a numpy twin in ``_fallback.py`` that follows the same
floating-point operation order, so both backends agree to the last bit.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs, sqrt, cos, sin, INFINITY
from libc.stdint cimport uint64_t, int32_t, uint8_t
from libc.string cimport memcpy

cnp.import_array()

# shared numerical constants (mirrored in _fallback.py, checked by the test-suite)
EDGE_TOL = 1e-9
DET_TOL = 1e-12
HIT_TOL = 1e-12
BOX_TOL = 1e-12
MAX_RETRIES = 8
MAX_VOTES = 3
PRIMARY_DIRECTION = (0.8164965809095576, 0.4472135955052349, 0.3651483717042742)

cdef double _EDGE_TOL = 1e-9
cdef double _DET_TOL = 1e-12
cdef double _HIT_TOL = 1e-12
cdef double _BOX_TOL = 1e-12
cdef int _MAX_RETRIES = 8
cdef int _MAX_VOTES = 3
cdef double _TWO_PI = 6.283185307179586
cdef double _INV_2_53 = 1.1102230246251565e-16

cdef enum:
    STACK_SIZE = 256

cdef struct Bvh:
    const double* lo
    const double* hi
    const int32_t* left
    const int32_t* right
    const int32_t* start
    const int32_t* count
    const double* tris


cdef Bvh _view(double[:, ::1] lo, double[:, ::1] hi, int32_t[::1] left, int32_t[::1] right,
               int32_t[::1] start, int32_t[::1] count, double[:, ::1] tris):
    cdef Bvh b
    b.lo = &lo[0, 0]
    b.hi = &hi[0, 0]
    b.left = &left[0]
    b.right = &right[0]
    b.start = &start[0]
    b.count = &count[0]
    b.tris = &tris[0, 0]
    return b


cdef inline double _dot(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline void _cross(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline bint _ray_hits_box(const double* o, const double* d, const double* lo,
                               const double* hi) noexcept nogil:
    cdef double tmin = 0.0, tmax = INFINITY, t1, t2, tmp, inv
    cdef int a
    for a in range(3):
        if d[a] == 0.0:
            if o[a] < lo[a] or o[a] > hi[a]:
                return 0
        else:
            inv = 1.0 / d[a]
            t1 = (lo[a] - o[a]) * inv
            t2 = (hi[a] - o[a]) * inv
            if t1 > t2:
                tmp = t1
                t1 = t2
                t2 = tmp
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
    return tmin <= tmax + _BOX_TOL * (1.0 + fabs(tmax))


cdef inline int _ray_tri(const double* o, const double* d, const double* t,
                         int* degenerate) noexcept nogil:
    cdef double e1[3]
    cdef double e2[3]
    cdef double p[3]
    cdef double s[3]
    cdef double q[3]
    cdef double n[3]
    cdef double det, inv, u, v, hit, nn
    cdef int a
    for a in range(3):
        e1[a] = t[3 + a] - t[a]
        e2[a] = t[6 + a] - t[a]
        s[a] = o[a] - t[a]
    _cross(d, e2, p)
    det = _dot(e1, p)
    if fabs(det) < _DET_TOL:
        _cross(e1, e2, n)
        nn = sqrt(_dot(n, n))
        if nn > 0.0 and fabs(_dot(s, n)) <= _EDGE_TOL * nn:
            degenerate[0] = 1
        return 0
    inv = 1.0 / det
    u = _dot(s, p) * inv
    if u < -_EDGE_TOL or u > 1.0 + _EDGE_TOL:
        return 0
    _cross(s, e1, q)
    v = _dot(d, q) * inv
    if v < -_EDGE_TOL or u + v > 1.0 + _EDGE_TOL:
        return 0
    hit = _dot(e2, q) * inv
    if hit < -_HIT_TOL:
        return 0
    if hit <= _HIT_TOL or u < _EDGE_TOL or v < _EDGE_TOL or u + v > 1.0 - _EDGE_TOL:
        degenerate[0] = 1
    return 1 if hit > _HIT_TOL else 0


cdef int _cast(const double* o, const double* d, const Bvh* b, int* degenerate) noexcept nogil:
    cdef int32_t stack[STACK_SIZE]
    cdef int top = 0, hits = 0, node, i
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _ray_hits_box(o, d, b.lo + 3 * node, b.hi + 3 * node):
            continue
        if b.left[node] < 0:
            for i in range(b.start[node], b.start[node] + b.count[node]):
                hits += _ray_tri(o, d, b.tris + 9 * i, degenerate)
        else:
            stack[top] = b.right[node]
            stack[top + 1] = b.left[node]
            top += 2
    return hits


cdef inline uint64_t _splitmix(uint64_t x) noexcept nogil:
    x = x + <uint64_t>0x9E3779B97F4A7C15
    x = (x ^ (x >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    x = (x ^ (x >> 27)) * <uint64_t>0x94D049BB133111EB
    return x ^ (x >> 31)


cdef inline uint64_t _bits(double x) noexcept nogil:
    cdef uint64_t out
    x = x + 0.0  # fold -0.0 onto +0.0
    memcpy(&out, &x, 8)
    return out


cdef inline uint64_t _point_key(const double* p, uint64_t seed) noexcept nogil:
    cdef uint64_t key = _splitmix(seed)
    key = _splitmix(key ^ _bits(p[0]))
    key = _splitmix(key ^ _bits(p[1]))
    key = _splitmix(key ^ _bits(p[2]))
    return key


cdef inline void _retry_direction(uint64_t key, int r, double* d) noexcept nogil:
    cdef uint64_t s1 = _splitmix(key + <uint64_t>(2 * r + 1) * <uint64_t>0x9E3779B97F4A7C15)
    cdef uint64_t s2 = _splitmix(key + <uint64_t>(2 * r + 2) * <uint64_t>0x9E3779B97F4A7C15)
    cdef double u = <double>(s1 >> 11) * _INV_2_53
    cdef double v = <double>(s2 >> 11) * _INV_2_53
    cdef double z = 1.0 - 2.0 * u
    cdef double rxy = sqrt(max(0.0, 1.0 - z * z))
    cdef double phi = _TWO_PI * v
    d[0] = rxy * cos(phi)
    d[1] = rxy * sin(phi)
    d[2] = z


cdef int _occupancy_one(const double* p, const Bvh* b, uint64_t seed,
                        const double* d0) noexcept nogil:
    cdef int a, r, deg, c, first = -1, ones = 0, zeros = 0
    cdef double d[3]
    cdef uint64_t key
    for a in range(3):
        if p[a] < b.lo[a] or p[a] > b.hi[a]:
            return 0
    deg = 0
    c = _cast(p, d0, b, &deg)
    if deg == 0:
        return c & 1
    key = _point_key(p, seed)
    for r in range(_MAX_RETRIES):
        _retry_direction(key, r, d)
        deg = 0
        c = _cast(p, d, b, &deg)
        if deg:
            continue
        if first < 0:
            first = c & 1
        if c & 1:
            ones += 1
        else:
            zeros += 1
        if ones + zeros == _MAX_VOTES:
            break
    if ones + zeros == 0:
        return 2
    if ones > zeros:
        return 1
    if zeros > ones:
        return 0
    return first


cdef inline double _box_dist2(const double* p, const double* lo, const double* hi) noexcept nogil:
    cdef double s = 0.0, e
    cdef int a
    for a in range(3):
        if p[a] < lo[a]:
            e = lo[a] - p[a]
            s += e * e
        elif p[a] > hi[a]:
            e = p[a] - hi[a]
            s += e * e
    return s


cdef inline double _sq(const double* p, const double* c) noexcept nogil:
    cdef double x = p[0] - c[0], y = p[1] - c[1], z = p[2] - c[2]
    return x * x + y * y + z * z


cdef double _tri_dist2(const double* p, const double* t) noexcept nogil:
    # closest point on triangle by Voronoi-region classification
    cdef double ab[3]
    cdef double ac[3]
    cdef double ap[3]
    cdef double bp[3]
    cdef double cp[3]
    cdef double c[3]
    cdef double d1, d2, d3, d4, d5, d6, va, vb, vc, v, w, denom
    cdef int a
    for a in range(3):
        ab[a] = t[3 + a] - t[a]
        ac[a] = t[6 + a] - t[a]
        ap[a] = p[a] - t[a]
        bp[a] = p[a] - t[3 + a]
        cp[a] = p[a] - t[6 + a]
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    if d1 <= 0.0 and d2 <= 0.0:
        return _dot(ap, ap)
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    if d3 >= 0.0 and d4 <= d3:
        return _dot(bp, bp)
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        for a in range(3):
            c[a] = t[a] + v * ab[a]
        return _sq(p, c)
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    if d6 >= 0.0 and d5 <= d6:
        return _dot(cp, cp)
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        for a in range(3):
            c[a] = t[a] + w * ac[a]
        return _sq(p, c)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        for a in range(3):
            c[a] = t[3 + a] + w * (t[6 + a] - t[3 + a])
        return _sq(p, c)
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    for a in range(3):
        c[a] = t[a] + ab[a] * v + ac[a] * w
    return _sq(p, c)


cdef double _closest2(const double* p, const Bvh* b) noexcept nogil:
    cdef int32_t stack[STACK_SIZE]
    cdef int top, node, i, l, r
    cdef double best = INFINITY, d2, dl, dr
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if _box_dist2(p, b.lo + 3 * node, b.hi + 3 * node) >= best:
            continue
        if b.left[node] < 0:
            for i in range(b.start[node], b.start[node] + b.count[node]):
                d2 = _tri_dist2(p, b.tris + 9 * i)
                if d2 < best:
                    best = d2
        else:
            l = b.left[node]
            r = b.right[node]
            dl = _box_dist2(p, b.lo + 3 * l, b.hi + 3 * l)
            dr = _box_dist2(p, b.lo + 3 * r, b.hi + 3 * r)
            # push the farther child first so the nearer one is visited next
            if dl <= dr:
                if dr < best:
                    stack[top] = r
                    top += 1
                if dl < best:
                    stack[top] = l
                    top += 1
            else:
                if dl < best:
                    stack[top] = l
                    top += 1
                if dr < best:
                    stack[top] = r
                    top += 1
    return best


# ----------------------------------------------------------------------------- batch API

def ray_crossings(double[:, ::1] origins, double[:, ::1] directions,
                  double[:, ::1] lo, double[:, ::1] hi, int32_t[::1] left, int32_t[::1] right,
                  int32_t[::1] start, int32_t[::1] count, double[:, ::1] tris, int threads=1):
    cdef Py_ssize_t n = origins.shape[0], i
    cdef Bvh b = _view(lo, hi, left, right, start, count, tris)
    counts = np.zeros(n, dtype=np.int32)
    flags = np.zeros(n, dtype=np.uint8)
    cdef int32_t[::1] cv = counts
    cdef uint8_t[::1] fv = flags
    cdef int deg
    for i in prange(n, nogil=True, num_threads=max(threads, 1), schedule="dynamic", chunksize=64):
        deg = 0
        cv[i] = _cast(&origins[i, 0], &directions[i, 0], &b, &deg)
        fv[i] = deg
    return counts, flags


def occupancy(double[:, ::1] points, double[:, ::1] lo, double[:, ::1] hi,
              int32_t[::1] left, int32_t[::1] right, int32_t[::1] start, int32_t[::1] count,
              double[:, ::1] tris, uint64_t seed, int threads=1):
    """0 outside, 1 inside, 2 when every cast was degenerate."""
    cdef Py_ssize_t n = points.shape[0], i
    cdef Bvh b = _view(lo, hi, left, right, start, count, tris)
    cdef double d0[3]
    d0[0] = PRIMARY_DIRECTION[0]
    d0[1] = PRIMARY_DIRECTION[1]
    d0[2] = PRIMARY_DIRECTION[2]
    out = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] ov = out
    for i in prange(n, nogil=True, num_threads=max(threads, 1), schedule="dynamic", chunksize=256):
        ov[i] = <uint8_t>_occupancy_one(&points[i, 0], &b, seed, d0)
    return out


def closest_distance(double[:, ::1] points, double[:, ::1] lo, double[:, ::1] hi,
                     int32_t[::1] left, int32_t[::1] right, int32_t[::1] start,
                     int32_t[::1] count, double[:, ::1] tris, int threads=1):
    cdef Py_ssize_t n = points.shape[0], i
    cdef Bvh b = _view(lo, hi, left, right, start, count, tris)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    for i in prange(n, nogil=True, num_threads=max(threads, 1), schedule="dynamic", chunksize=128):
        ov[i] = sqrt(_closest2(&points[i, 0], &b))
    return out


def retry_directions(double[:, ::1] points, uint64_t seed, int retries):
    """Directions of the retry rays, exposed for cross-backend tests."""
    cdef Py_ssize_t n = points.shape[0], i
    cdef int r
    out = np.empty((n, retries, 3), dtype=np.float64)
    cdef double[:, :, ::1] ov = out
    cdef uint64_t key
    for i in range(n):
        key = _point_key(&points[i, 0], seed)
        for r in range(retries):
            _retry_direction(key, r, &ov[i, r, 0])
    return out


def dilate(const double[::1] field, const int32_t[:, ::1] neighbors, int threads=1):
    cdef Py_ssize_t n = neighbors.shape[0], m = neighbors.shape[1], i, j
    cdef Py_ssize_t size = field.shape[0]
    cdef double best, val
    cdef int32_t idx
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    if n and (np.asarray(neighbors).min() < 0 or np.asarray(neighbors).max() >= size):
        raise IndexError("neighbor index out of range")
    for i in prange(n, nogil=True, num_threads=max(threads, 1), schedule="static"):
        best = field[neighbors[i, 0]]
        for j in range(1, m):
            val = field[neighbors[i, j]]
            if val > best:
                best = val
        ov[i] = best
    return out
