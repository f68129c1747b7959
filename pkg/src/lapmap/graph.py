"""Weighted pixel-adjacency graphs and unnormalized Laplacians.

Vertices are (optionally strided) pixels of an image; edges carry weights

    w_ij = exp(-d_ij^2 / (2 sigma_s^2)) * exp(-||x_i - x_j||^2 / (2 sigma_r^2))

where d_ij is the spatial distance in original-pixel units and x_i the
color vector.  With sigma_s = 0 the spatial factor is defined to be 1
(purely color-driven weights on a fixed neighborhood structure).

The unnormalized Laplacian is L = D - W with D = diag(row sums of W).
Matrices are stored symmetric-sparse: each off-diagonal entry once
(rows[k] < cols[k]) plus an explicit diagonal.  Weights are never pruned,
however small; the edge support is part of the problem definition.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .images import Image

_CONNECTIVITIES = ("four_neighbors", "eight_neighbors", "knn")


@dataclass(frozen=True)
class GraphParams:
    """Graph construction parameters.

    stride subsamples the pixel lattice (1 keeps every pixel); knn_k is
    only used when connectivity == "knn".
    """

    sigma_r: float = 1.0
    sigma_s: float = 0.0
    connectivity: str = "four_neighbors"
    knn_k: int = 8
    stride: int = 1

    def __post_init__(self):
        if self.sigma_r <= 0:
            raise ValueError(f"sigma_r must be > 0, got {self.sigma_r}")
        if self.sigma_s < 0:
            raise ValueError(f"sigma_s must be >= 0, got {self.sigma_s}")
        if self.connectivity not in _CONNECTIVITIES:
            raise ValueError(
                f"connectivity must be one of {_CONNECTIVITIES}, got {self.connectivity!r}"
            )
        if self.knn_k < 1:
            raise ValueError(f"knn_k must be >= 1, got {self.knn_k}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")


@dataclass(frozen=True, eq=False)
class EdgeSupport:
    """Fixed edge structure shared by a family of graphs.

    vertices are flat pixel indices into the source image; (rows, cols)
    index into the vertex list with rows[k] < cols[k]; spatial_factor is
    the per-edge spatial kernel value (all ones when sigma_s == 0).
    grid_shape is the vertex lattice shape (rows, cols) for lattice
    connectivities, and None for knn.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    spatial_factor: np.ndarray
    vertices: np.ndarray
    grid_shape: tuple[int, int] | None

    @property
    def n_edges(self) -> int:
        return len(self.rows)


@dataclass(eq=False)
class SparseSymMatrix:
    """Symmetric sparse matrix: off-diagonal entries once plus a diagonal."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    diag: np.ndarray

    def to_csr(self) -> sp.csr_matrix:
        i = np.concatenate([self.rows, self.cols, np.arange(self.dim)])
        j = np.concatenate([self.cols, self.rows, np.arange(self.dim)])
        v = np.concatenate([self.values, self.values, self.diag])
        return sp.coo_matrix((v, (i, j)), shape=(self.dim, self.dim)).tocsr()

    def to_dense(self) -> np.ndarray:
        if self.dim > 5000:
            raise ValueError(f"refusing to densify a {self.dim}x{self.dim} matrix")
        out = np.zeros((self.dim, self.dim))
        out[self.rows, self.cols] = self.values
        out[self.cols, self.rows] = self.values
        out[np.arange(self.dim), np.arange(self.dim)] = self.diag
        return out

    def frobenius_norm(self) -> float:
        return float(np.sqrt(2.0 * np.sum(self.values**2) + np.sum(self.diag**2)))

    def with_values(self, values: np.ndarray, diag: np.ndarray) -> "SparseSymMatrix":
        return SparseSymMatrix(self.dim, self.rows, self.cols, values, diag)


def select_vertices(height: int, width: int, params: GraphParams) -> np.ndarray:
    """Flat pixel indices of the vertex set (row-major stride subsampling)."""
    s = params.stride
    if s > height and s > width:
        raise ValueError(f"stride {s} exceeds image extent {height}x{width}")
    rr = np.arange(0, height, s)
    cc = np.arange(0, width, s)
    return (rr[:, None] * width + cc[None, :]).ravel()


def build_support(height: int, width: int, params: GraphParams) -> EdgeSupport:
    """Edge structure plus spatial kernel for an image of the given size."""
    vertices = select_vertices(height, width, params)
    s = params.stride
    gh = len(np.arange(0, height, s))
    gw = len(np.arange(0, width, s))
    n = gh * gw

    if params.connectivity in ("four_neighbors", "eight_neighbors"):
        idx = np.arange(n).reshape(gh, gw)
        pairs = [
            (idx[:, :-1].ravel(), idx[:, 1:].ravel(), float(s)),
            (idx[:-1, :].ravel(), idx[1:, :].ravel(), float(s)),
        ]
        if params.connectivity == "eight_neighbors":
            diag = float(s) * np.sqrt(2.0)
            pairs.append((idx[:-1, :-1].ravel(), idx[1:, 1:].ravel(), diag))
            pairs.append((idx[:-1, 1:].ravel(), idx[1:, :-1].ravel(), diag))
        rows = np.concatenate([p[0] for p in pairs])
        cols = np.concatenate([p[1] for p in pairs])
        dist = np.concatenate([np.full(len(p[0]), p[2]) for p in pairs])
        grid_shape = (gh, gw)
    else:
        if params.knn_k >= n:
            raise ValueError(f"knn_k={params.knn_k} needs more than {n} vertices")
        pos = np.stack([vertices // width, vertices % width], axis=1).astype(float)
        tree = cKDTree(pos)
        dists, nbrs = tree.query(pos, k=params.knn_k + 1)
        src = np.repeat(np.arange(n), params.knn_k)
        dst = nbrs[:, 1:].ravel()
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        _, keep = np.unique(lo * n + hi, return_index=True)
        rows = lo[keep]
        cols = hi[keep]
        dist = np.linalg.norm(pos[rows] - pos[cols], axis=1)
        grid_shape = None

    if params.sigma_s > 0:
        spatial = np.exp(-(dist**2) / (2.0 * params.sigma_s**2))
    else:
        spatial = np.ones(len(rows))
    order = np.lexsort((cols, rows))
    return EdgeSupport(
        dim=n,
        rows=np.ascontiguousarray(rows[order]),
        cols=np.ascontiguousarray(cols[order]),
        spatial_factor=np.ascontiguousarray(spatial[order]),
        vertices=vertices,
        grid_shape=grid_shape,
    )


def adjacency_values(
    support: EdgeSupport, colors: np.ndarray, sigma_r: float
) -> np.ndarray:
    """Per-edge weights for vertex colors (len(colors) == support.dim)."""
    if len(colors) != support.dim:
        raise ValueError(f"expected {support.dim} color rows, got {len(colors)}")
    diff = colors[support.rows] - colors[support.cols]
    sq = np.einsum("ij,ij->i", diff, diff)
    return support.spatial_factor * np.exp(-sq / (2.0 * sigma_r**2))


def degrees(support: EdgeSupport, weights: np.ndarray) -> np.ndarray:
    d = np.bincount(support.rows, weights=weights, minlength=support.dim)
    d += np.bincount(support.cols, weights=weights, minlength=support.dim)
    return d


def build_adjacency(img: Image, params: GraphParams) -> tuple[SparseSymMatrix, EdgeSupport]:
    """Adjacency matrix of an image plus the support it lives on."""
    support = build_support(img.height, img.width, params)
    colors = img.pixels[support.vertices]
    w = adjacency_values(support, colors, params.sigma_r)
    adj = SparseSymMatrix(support.dim, support.rows, support.cols, w, np.zeros(support.dim))
    return adj, support


def build_laplacian(adj: SparseSymMatrix) -> SparseSymMatrix:
    """Unnormalized Laplacian L = D - W of a nonnegative adjacency."""
    if np.any(adj.values < 0):
        raise ValueError("adjacency weights must be nonnegative")
    if np.any(adj.diag != 0):
        raise ValueError("adjacency must have a zero diagonal")
    deg = np.bincount(adj.rows, weights=adj.values, minlength=adj.dim)
    deg += np.bincount(adj.cols, weights=adj.values, minlength=adj.dim)
    return SparseSymMatrix(adj.dim, adj.rows, adj.cols, -adj.values, deg)


def image_laplacian(img: Image, params: GraphParams) -> tuple[SparseSymMatrix, EdgeSupport]:
    adj, support = build_adjacency(img, params)
    return build_laplacian(adj), support


def format_coo(mat: SparseSymMatrix) -> str:
    """Text dump, one `i j value` line per stored entry, (i, j) sorted.

    Both (i, j) and (j, i) are emitted for off-diagonal entries so the dump
    is a plain COO listing of the full symmetric matrix.
    """
    i = np.concatenate([np.arange(mat.dim), mat.rows, mat.cols])
    j = np.concatenate([np.arange(mat.dim), mat.cols, mat.rows])
    v = np.concatenate([mat.diag, mat.values, mat.values])
    order = np.lexsort((j, i))
    lines = [f"{i[k]} {j[k]} {v[k]:.17g}" for k in order]
    return "\n".join(lines) + "\n"


def dump_coo(mat: SparseSymMatrix, path) -> None:
    Path(path).write_text(format_coo(mat))
