"""Polygon containers and the geometric functionals measured on them.

Polygons are stored as edge vectors, one row per edge. Arms are open
chains of ``n`` edges (``n + 1`` vertices); closed polygons have ``n``
edges summing to zero and ``n`` distinct vertices.

Every scalar functional has a ``batch_*`` twin operating on a
``(B, n, d)`` stack of edge arrays, which is what the Monte Carlo harness
uses.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import kernels
from .errors import PolygonDomainError, UnsupportedDimensionError

DEFAULT_CLOSURE_TOL = 1e-10


def _as_edges(edges, min_edges: int) -> np.ndarray:
    arr = np.array(edges, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise UnsupportedDimensionError(
            f"edges must have shape (n, d) with d in {{2, 3}}, got {arr.shape}"
        )
    if arr.shape[0] < min_edges:
        raise ValueError(f"need at least {min_edges} edges, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("edges contain NaN or Inf")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PolygonArm:
    """Open polygonal chain given by its edge vectors."""

    edges: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "edges", _as_edges(self.edges, 1))

    @property
    def n(self) -> int:
        return self.edges.shape[0]

    @property
    def d(self) -> int:
        return self.edges.shape[1]

    closed = False

    def vertices(self) -> np.ndarray:
        """The ``n + 1`` vertices, starting at the origin."""
        v = np.zeros((self.n + 1, self.d))
        np.cumsum(self.edges, axis=0, out=v[1:])
        return v


@dataclass(frozen=True)
class ClosedPolygon:
    """Closed polygon; the edges must sum to zero up to ``tol``.

    The closure test is relative: ``|sum e_i| <= tol * sum |e_i|``.
    """

    edges: np.ndarray
    tol: float = field(default=DEFAULT_CLOSURE_TOL, compare=False)

    def __post_init__(self):
        e = _as_edges(self.edges, 3)
        object.__setattr__(self, "edges", e)
        defect = np.linalg.norm(e.sum(axis=0))
        length = np.linalg.norm(e, axis=1).sum()
        if defect > self.tol * length:
            raise ValueError(
                f"polygon does not close: |sum e| = {defect:.3e} > {self.tol:g} * {length:.6g}"
            )

    @property
    def n(self) -> int:
        return self.edges.shape[0]

    @property
    def d(self) -> int:
        return self.edges.shape[1]

    closed = True

    def vertices(self) -> np.ndarray:
        """The ``n`` distinct vertices, starting at the origin."""
        v = np.zeros((self.n, self.d))
        np.cumsum(self.edges[:-1], axis=0, out=v[1:])
        return v


Polygon = PolygonArm | ClosedPolygon


def turning_angle(e1, e2) -> float:
    """Angle in ``[0, pi]`` between two edge vectors."""
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    na = float(np.dot(a, a))
    nb = float(np.dot(b, b))
    if na == 0 or nb == 0:
        raise PolygonDomainError("turning angle undefined for a zero-length edge")
    c = float(np.dot(a, b)) / np.sqrt(na * nb)
    return float(np.arccos(min(1.0, max(-1.0, c))))


def _check_nonzero(edges: np.ndarray) -> None:
    norms = np.linalg.norm(edges, axis=-1)
    bad = np.flatnonzero(norms.reshape(-1) == 0)
    if bad.size:
        n = edges.shape[-2]
        idx = int(bad[0]) % n
        if edges.ndim == 3:
            b = int(bad[0]) // n
            raise PolygonDomainError(f"edge {idx} of polygon {b} has zero length", index=idx, sample=b)
        raise PolygonDomainError(f"edge {idx} has zero length", index=idx)


def total_curvature(p: Polygon) -> float:
    """Sum of turning angles (``n`` of them when closed, ``n - 1`` for arms)."""
    _check_nonzero(p.edges)
    if p.n == 1:
        return 0.0
    return float(kernels.total_curvature_batch(np.ascontiguousarray(p.edges[None]), p.closed)[0])


def total_torsion(p: ClosedPolygon) -> float:
    """Sum over cyclic edge triples of the angle between consecutive binormals.

    Each vertex contributes an angle in ``[0, pi]``; a vertex whose adjacent
    edges are parallel contributes 0.
    """
    if p.d != 3:
        raise UnsupportedDimensionError("torsion is only defined for space polygons (d = 3)")
    _check_nonzero(p.edges)
    return float(kernels.total_torsion_batch(np.ascontiguousarray(p.edges[None]))[0])


def chord_squared_mean(p: Polygon, k: int) -> float:
    """Mean squared length of chords spanning ``k`` consecutive edges."""
    return float(batch_chord_squared_mean(p.edges[None], k, p.closed)[0])


def gyradius_squared(p: Polygon) -> float:
    """Mean squared distance of the vertices from their centroid."""
    return float(batch_gyradius_squared(p.edges[None], p.closed)[0])


def closure_defect(p: Polygon) -> np.ndarray:
    return p.edges.sum(axis=0)


def total_length(p: Polygon) -> float:
    return float(np.linalg.norm(p.edges, axis=1).sum())


# -- batched versions: edges has shape (B, n, d) ---------------------------


def batch_total_curvature(edges, closed: bool = True) -> np.ndarray:
    edges = np.ascontiguousarray(edges, dtype=np.float64)
    _check_nonzero(edges)
    if edges.shape[1] == 1:
        return np.zeros(edges.shape[0])
    return kernels.total_curvature_batch(edges, closed)


def batch_total_torsion(edges) -> np.ndarray:
    edges = np.ascontiguousarray(edges, dtype=np.float64)
    if edges.shape[-1] != 3:
        raise UnsupportedDimensionError("torsion is only defined for space polygons (d = 3)")
    _check_nonzero(edges)
    return kernels.total_torsion_batch(edges)


def batch_chord_squared_mean(edges, k: int, closed: bool = True) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.float64)
    n = edges.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"chord skip k must satisfy 1 <= k <= {n}, got {k}")
    if closed:
        ext = np.concatenate([edges, edges[:, :k]], axis=1)
        s = np.cumsum(ext, axis=1)
        s = np.concatenate([np.zeros_like(s[:, :1]), s], axis=1)
        chords = s[:, k : k + n] - s[:, :n]
    else:
        s = np.cumsum(edges, axis=1)
        s = np.concatenate([np.zeros_like(s[:, :1]), s], axis=1)
        chords = s[:, k:] - s[:, : n + 1 - k]
    return np.einsum("bij,bij->bi", chords, chords).mean(axis=1)


def batch_gyradius_squared(edges, closed: bool = True) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.float64)
    steps = edges[:, :-1] if closed else edges
    v = np.concatenate([np.zeros_like(edges[:, :1]), np.cumsum(steps, axis=1)], axis=1)
    v = v - v.mean(axis=1, keepdims=True)
    return np.einsum("bij,bij->bi", v, v).mean(axis=1)


def batch_total_length(edges) -> np.ndarray:
    return np.linalg.norm(np.asarray(edges, dtype=np.float64), axis=-1).sum(axis=1)


# -- CSV format: poly_id, edge_index, x, y[, z] -----------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_polygons_csv(polygons: Iterable, out: TextIO, start_id: int = 0, header: bool = True) -> int:
    """Write polygons (or raw ``(n, d)`` edge arrays) one row per edge.

    Returns the number of polygons written.
    """
    w = csv.writer(out, lineterminator="\n")
    count = 0
    d_seen = None
    for pid, poly in enumerate(polygons, start=start_id):
        edges = poly.edges if hasattr(poly, "edges") else np.asarray(poly)
        d = edges.shape[1]
        if d_seen is None:
            d_seen = d
            if header:
                w.writerow(["poly_id", "edge_index", "x", "y", "z"][: 2 + d])
        elif d != d_seen:
            raise UnsupportedDimensionError("cannot mix planar and spatial polygons in one file")
        for i, e in enumerate(edges):
            w.writerow([pid, i, *(_fmt(c) for c in e)])
        count += 1
    return count


def read_polygons_csv(src: TextIO | str) -> list[tuple[int, np.ndarray]]:
    """Read the edge CSV back into ``(poly_id, edges)`` pairs, in file order."""
    if isinstance(src, str):
        src = io.StringIO(src)
    rows = csv.reader(src)
    header = next(rows)
    d = len(header) - 2
    if header[:2] != ["poly_id", "edge_index"] or d not in (2, 3):
        raise ValueError(f"unrecognised polygon CSV header: {header}")
    polys: dict[int, list[tuple[int, Sequence[float]]]] = {}
    for row in rows:
        if not row:
            continue
        pid, idx = int(row[0]), int(row[1])
        polys.setdefault(pid, []).append((idx, [float(c) for c in row[2:]]))
    out = []
    for pid, items in polys.items():
        items.sort(key=lambda t: t[0])
        out.append((pid, np.array([c for _, c in items], dtype=np.float64).reshape(-1, d)))
    return out
