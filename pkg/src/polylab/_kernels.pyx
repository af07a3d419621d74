# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: batched curvature/torsion and the crankshaft chain.

Signatures mirror :mod:`polylab._fallback` exactly; :mod:`polylab.kernels`
picks one of the two at import.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport acos, sqrt, cos, sin

cnp.import_array()


cdef inline double _clamp(double c) nogil:
    if c > 1.0:
        return 1.0
    if c < -1.0:
        return -1.0
    return c


cdef inline double _angle3(double ax, double ay, double az,
                           double bx, double by, double bz) nogil:
    cdef double na = ax * ax + ay * ay + az * az
    cdef double nb = bx * bx + by * by + bz * bz
    return acos(_clamp((ax * bx + ay * by + az * bz) / sqrt(na * nb)))


cdef double _curvature_one(const double[:, ::1] e, bint closed) nogil:
    cdef Py_ssize_t n = e.shape[0], d = e.shape[1], i, k, m
    cdef double total = 0.0, dot, n1, n2
    m = n if closed else n - 1
    for i in range(m):
        k = i + 1
        if k == n:
            k = 0
        if d == 3:
            total += _angle3(e[i, 0], e[i, 1], e[i, 2], e[k, 0], e[k, 1], e[k, 2])
        else:
            dot = e[i, 0] * e[k, 0] + e[i, 1] * e[k, 1]
            n1 = e[i, 0] * e[i, 0] + e[i, 1] * e[i, 1]
            n2 = e[k, 0] * e[k, 0] + e[k, 1] * e[k, 1]
            total += acos(_clamp(dot / sqrt(n1 * n2)))
    return total


def total_curvature_batch(const double[:, :, ::1] edges, bint closed):
    """Sum of turning angles for each polygon in a (B, n, d) stack."""
    cdef Py_ssize_t B = edges.shape[0], b
    out = np.empty(B, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for b in range(B):
            res[b] = _curvature_one(edges[b], closed)
    return out


def total_torsion_batch(const double[:, :, ::1] edges):
    """Sum of binormal dihedral angles over the n cyclic edge triples."""
    cdef Py_ssize_t B = edges.shape[0], n = edges.shape[1], b, i, k, m
    cdef double bx0, by0, bz0, bx1, by1, bz1, nb0, nb1, total
    out = np.empty(B, dtype=np.float64)
    cdef double[::1] res = out
    cdef const double[:, ::1] e
    with nogil:
        for b in range(B):
            e = edges[b]
            total = 0.0
            for i in range(n):
                k = (i + 1) % n
                m = (i + 2) % n
                bx0 = e[i, 1] * e[k, 2] - e[i, 2] * e[k, 1]
                by0 = e[i, 2] * e[k, 0] - e[i, 0] * e[k, 2]
                bz0 = e[i, 0] * e[k, 1] - e[i, 1] * e[k, 0]
                bx1 = e[k, 1] * e[m, 2] - e[k, 2] * e[m, 1]
                by1 = e[k, 2] * e[m, 0] - e[k, 0] * e[m, 2]
                bz1 = e[k, 0] * e[m, 1] - e[k, 1] * e[m, 0]
                nb0 = bx0 * bx0 + by0 * by0 + bz0 * bz0
                nb1 = bx1 * bx1 + by1 * by1 + bz1 * bz1
                if nb0 == 0.0 or nb1 == 0.0:
                    continue
                total += acos(_clamp((bx0 * bx1 + by0 * by1 + bz0 * bz1) / sqrt(nb0 * nb1)))
            res[b] = total
    return out


def crankshaft_run(double[:, ::1] edges, const long[::1] pivot_i, const long[::1] pivot_j,
                   const double[::1] angles, long record_every, double[::1] out):
    """Apply crankshaft moves in place; record total curvature periodically.

    Returns the number of moves skipped because the hinge chord vanished.
    """
    cdef Py_ssize_t n = edges.shape[0], nmoves = pivot_i.shape[0]
    cdef Py_ssize_t mv, i, j, t, idx, cnt, start, rec = 0
    cdef long skipped = 0
    cdef double ax, ay, az, L, c, s, omc, vx, vy, vz, dot, cx, cy, cz, wx, wy, wz, nw
    with nogil:
        for mv in range(nmoves):
            i = pivot_i[mv]
            j = pivot_j[mv]
            if i > j:
                i, j = j, i
            cnt = j - i
            if cnt > n - cnt:
                start = j
                cnt = n - cnt
            else:
                start = i
            ax = 0.0
            ay = 0.0
            az = 0.0
            idx = start
            for t in range(cnt):
                ax += edges[idx, 0]
                ay += edges[idx, 1]
                az += edges[idx, 2]
                idx += 1
                if idx == n:
                    idx = 0
            L = sqrt(ax * ax + ay * ay + az * az)
            if L < 1e-12:
                skipped += 1
            else:
                ax /= L
                ay /= L
                az /= L
                c = cos(angles[mv])
                s = sin(angles[mv])
                omc = 1.0 - c
                idx = start
                for t in range(cnt):
                    vx = edges[idx, 0]
                    vy = edges[idx, 1]
                    vz = edges[idx, 2]
                    dot = ax * vx + ay * vy + az * vz
                    cx = ay * vz - az * vy
                    cy = az * vx - ax * vz
                    cz = ax * vy - ay * vx
                    wx = vx * c + cx * s + ax * dot * omc
                    wy = vy * c + cy * s + ay * dot * omc
                    wz = vz * c + cz * s + az * dot * omc
                    nw = 1.0 / sqrt(wx * wx + wy * wy + wz * wz)
                    edges[idx, 0] = wx * nw
                    edges[idx, 1] = wy * nw
                    edges[idx, 2] = wz * nw
                    idx += 1
                    if idx == n:
                        idx = 0
            if record_every > 0 and (mv + 1) % record_every == 0:
                out[rec] = _curvature_one(edges, True)
                rec += 1
    return skipped
