"""Pure-Python/numpy versions of the hot loops in ``_kernels.pyx``.

Used when the compiled extension is unavailable or when ``POLYLAB_PURE=1``.
The crankshaft loop is plain Python and slow; it exists so results can be
reproduced (and cross-checked) without a compiler.
"""
import math

import numpy as np


def _angles(a, b):
    # sqrt of the product keeps equal parallel edges at exactly zero
    c = np.einsum("...i,...i->...", a, b) / np.sqrt(
        np.einsum("...i,...i->...", a, a) * np.einsum("...i,...i->...", b, b)
    )
    return np.arccos(np.clip(c, -1.0, 1.0))


def total_curvature_batch(edges, closed):
    """Sum of turning angles for each polygon in a (B, n, d) stack."""
    edges = np.asarray(edges, dtype=np.float64)
    if closed:
        nxt = np.roll(edges, -1, axis=1)
        return _angles(edges, nxt).sum(axis=1)
    return _angles(edges[:, :-1], edges[:, 1:]).sum(axis=1)


def total_torsion_batch(edges):
    """Sum of binormal dihedral angles over the n cyclic edge triples."""
    edges = np.asarray(edges, dtype=np.float64)
    b0 = np.cross(edges, np.roll(edges, -1, axis=1))
    b1 = np.roll(b0, -1, axis=1)
    n0 = np.einsum("...i,...i->...", b0, b0)
    n1 = np.einsum("...i,...i->...", b1, b1)
    ok = (n0 > 0) & (n1 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.einsum("...i,...i->...", b0, b1) / np.sqrt(n0 * n1)
    ang = np.where(ok, np.arccos(np.clip(np.where(ok, c, 1.0), -1.0, 1.0)), 0.0)
    return ang.sum(axis=1)


def _curvature_closed(e):
    n = len(e)
    total = 0.0
    for i in range(n):
        a = e[i]
        b = e[(i + 1) % n]
        na = a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
        nb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2]
        c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / math.sqrt(na * nb)
        total += math.acos(min(1.0, max(-1.0, c)))
    return total


def crankshaft_run(edges, pivot_i, pivot_j, angles, record_every, out):
    """Apply crankshaft moves in place; record total curvature periodically.

    Returns the number of moves skipped because the hinge chord vanished.
    """
    n = edges.shape[0]
    e = edges.tolist()
    skipped = 0
    rec = 0
    for mv in range(len(pivot_i)):
        i, j = int(pivot_i[mv]), int(pivot_j[mv])
        if i > j:
            i, j = j, i
        cnt = j - i
        if cnt > n - cnt:
            start, cnt = j, n - cnt
        else:
            start = i
        idxs = [(start + t) % n for t in range(cnt)]
        ax = ay = az = 0.0
        for idx in idxs:
            ax += e[idx][0]
            ay += e[idx][1]
            az += e[idx][2]
        L = math.sqrt(ax * ax + ay * ay + az * az)
        if L < 1e-12:
            skipped += 1
        else:
            ax /= L
            ay /= L
            az /= L
            c = math.cos(angles[mv])
            s = math.sin(angles[mv])
            omc = 1.0 - c
            for idx in idxs:
                vx, vy, vz = e[idx]
                dot = ax * vx + ay * vy + az * vz
                cx = ay * vz - az * vy
                cy = az * vx - ax * vz
                cz = ax * vy - ay * vx
                wx = vx * c + cx * s + ax * dot * omc
                wy = vy * c + cy * s + ay * dot * omc
                wz = vz * c + cz * s + az * dot * omc
                nw = 1.0 / math.sqrt(wx * wx + wy * wy + wz * wz)
                e[idx] = [wx * nw, wy * nw, wz * nw]
        if record_every > 0 and (mv + 1) % record_every == 0:
            out[rec] = _curvature_closed(e)
            rec += 1
    edges[:] = np.asarray(e)
    return skipped
