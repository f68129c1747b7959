"""Convex polygon gamuts as halfspace intersections, plus exact projection.

A 2-D gamut is given by polygon vertices (either winding order); it is
normalized to counter-clockwise and converted to unit-normal halfspaces
a . y <= b.  Projection maps points outside the polygon to their nearest
point on the boundary (interior points are untouched).
"""

from __future__ import annotations

import numpy as np

DEGENERACY_EPS = 1e-12


def polygon_to_halfspaces(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normals and offsets of a convex polygon's edges."""
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValueError(f"need at least 3 polygon vertices in 2-D, got shape {v.shape}")
    nxt = np.roll(v, -1, axis=0)
    area2 = float(np.sum(v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]))
    if abs(area2) < DEGENERACY_EPS:
        raise ValueError("degenerate gamut polygon (vertices are collinear)")
    if area2 < 0:
        v = v[::-1]
        nxt = np.roll(v, -1, axis=0)
    tangents = nxt - v
    lengths = np.linalg.norm(tangents, axis=1)
    if np.any(lengths < DEGENERACY_EPS):
        raise ValueError("degenerate gamut polygon (repeated vertices)")
    # CCW winding: outward normal is the tangent rotated -90 degrees.
    normals = np.stack([tangents[:, 1], -tangents[:, 0]], axis=1) / lengths[:, None]
    offsets = np.einsum("ij,ij->i", normals, v)
    # Convexity: every vertex must satisfy every halfspace.
    if np.any(v @ normals.T - offsets[None, :] > 1e-9):
        raise ValueError("gamut polygon is not convex")
    return normals, offsets


def project_into_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Nearest-point projection of 2-D points into a convex polygon."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    normals, offsets = polygon_to_halfspaces(vertices)
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    inside = (pts @ normals.T - offsets[None, :] <= 1e-12).all(axis=1)
    out = pts.copy()
    todo = ~inside
    if not todo.any():
        return out
    p = pts[todo]
    nxt = np.roll(v, -1, axis=0)
    best_d2 = np.full(len(p), np.inf)
    best = np.zeros_like(p)
    for v0, v1 in zip(v, nxt):
        seg = v1 - v0
        t = np.clip(((p - v0) @ seg) / (seg @ seg), 0.0, 1.0)
        cand = v0 + t[:, None] * seg
        d2 = ((p - cand) ** 2).sum(axis=1)
        closer = d2 < best_d2
        best_d2[closer] = d2[closer]
        best[closer] = cand[closer]
    out[todo] = best
    return out
