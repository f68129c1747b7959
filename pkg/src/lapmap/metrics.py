"""Quality metrics for structure-preserving color transformations.

* RWMS: per-pixel root weighted mean square contrast error between a
  source image X and its mapped version Y.  For pixel i and sample set J,

      eps_i = sqrt( (1/|J_i|) * sum_{j in J_i}
                    (R_Y d_x(i,j) - R_X d_y(i,j))^2 / (R_Y d_x(i,j))^2 )

  where d_x, d_y are color distances, R_X, R_Y the maximum observed
  distances (dynamic ranges), and J_i excludes pairs with d_x < 1e-9.
  Values are reported x100.  Degenerate conventions: a constant X gives
  all-zero RWMS; a constant Y under a varying X gives eps = 1 (x100).

* Commutator norm of two Laplacians, optionally normalized by the
  product of their Frobenius norms.

* Joint-diagonalization residual: how far L_Y is from diagonal in the
  basis of L_X's first k eigenvectors, off(M) / ||M||_F^2.

* Spectral clustering labels from the first k eigenvectors of a
  Laplacian (deterministic in-tree k-means).

* Out-of-gamut fraction against halfspace constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .cluster import kmeans
from .graph import SparseSymMatrix
from .images import Image

PAIR_EXCLUSION_EPS = 1e-9
RANGE_EPS = 1e-12

_CHUNK = 256


def _sample_indices(n: int) -> np.ndarray:
    """Deterministic stride subsample; full set for images up to 64x64."""
    if n <= 4096:
        return np.arange(n)
    stride = int(np.ceil(n / 2000))
    return np.arange(0, n, stride)


def rwms(x_img: Image, y_img: Image) -> tuple[Image, float]:
    """Per-pixel RWMS image (x100) and its mean.

    Images must have the same pixel count (channel counts may differ).
    """
    if x_img.height != y_img.height or x_img.width != y_img.width:
        raise ValueError(
            f"image sizes differ: {x_img.height}x{x_img.width} vs "
            f"{y_img.height}x{y_img.width}"
        )
    x = x_img.pixels
    y = y_img.pixels
    n = len(x)
    sample = _sample_indices(n)
    xj = x[sample]
    yj = y[sample]

    range_x = 0.0
    range_y = 0.0
    for lo in range(0, n, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        range_x = max(range_x, cdist(x[sl], xj).max())
        range_y = max(range_y, cdist(y[sl], yj).max())

    eps = np.zeros(n)
    for lo in range(0, n, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        dx = cdist(x[sl], xj)
        valid = dx >= PAIR_EXCLUSION_EPS
        counts = valid.sum(axis=1)
        has_valid = counts > 0
        if range_y < RANGE_EPS:
            eps[sl] = np.where(has_valid, 1.0, 0.0)
            continue
        dy = cdist(y[sl], yj)
        num = (range_y * dx - range_x * dy) ** 2
        den = (range_y * dx) ** 2
        ratio = np.where(valid, num / np.where(valid, den, 1.0), 0.0)
        mean_sq = ratio.sum(axis=1) / np.maximum(counts, 1)
        eps[sl] = np.where(has_valid, np.sqrt(mean_sq), 0.0)

    eps *= 100.0
    image = Image(eps.reshape(x_img.height, x_img.width, 1))
    return image, float(eps.mean())


def commutator_norm(
    lx: SparseSymMatrix, ly: SparseSymMatrix, normalize: bool = False
) -> float:
    """||[L_X, L_Y]||_F, optionally / (||L_X||_F ||L_Y||_F)."""
    if lx.dim != ly.dim:
        raise ValueError(f"dimension mismatch: {lx.dim} vs {ly.dim}")
    a = lx.to_csr()
    b = ly.to_csr()
    c = a @ b - b @ a
    norm = float(np.sqrt(np.sum(c.data**2)))
    if not normalize:
        return norm
    denom = lx.frobenius_norm() * ly.frobenius_norm()
    if denom == 0.0:
        return 0.0
    return norm / denom


def _first_eigenvectors(lap: SparseSymMatrix, k: int) -> np.ndarray:
    if lap.dim > 3000:
        raise ValueError(f"eigendecomposition limited to 3000 vertices, got {lap.dim}")
    if not 1 <= k <= lap.dim:
        raise ValueError(f"k must be in [1, {lap.dim}], got {k}")
    _, vecs = scipy.linalg.eigh(lap.to_dense(), subset_by_index=(0, k - 1))
    return vecs


def joint_diag_residual(lx: SparseSymMatrix, ly: SparseSymMatrix, k: int) -> float:
    """off(U^T L_Y U) / ||U^T L_Y U||_F^2, U = first k eigenvectors of L_X.

    0 means L_Y is exactly diagonal in L_X's low eigenbasis; the residual
    of a matrix with itself is ~0 up to floating-point error.
    """
    if lx.dim != ly.dim:
        raise ValueError(f"dimension mismatch: {lx.dim} vs {ly.dim}")
    u = _first_eigenvectors(lx, k)
    m = u.T @ (ly.to_csr() @ u)
    total = float(np.sum(m * m))
    if total == 0.0:
        return 0.0
    off = total - float(np.sum(np.diag(m) ** 2))
    return max(off, 0.0) / total


def spectral_clusters(lap: SparseSymMatrix, k: int, seed: int = 0) -> np.ndarray:
    """Cluster vertices by k-means on the first k Laplacian eigenvectors."""
    u = _first_eigenvectors(lap, k)
    labels, _ = kmeans(u, k, seed=seed)
    return labels


def out_of_gamut_fraction(
    img: Image, halfspaces: tuple[np.ndarray, np.ndarray], tol: float = 1e-9
) -> float:
    """Fraction of pixels violating any halfspace a . y <= b by more than tol."""
    a, b = halfspaces
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape[1] != img.channels:
        raise ValueError(
            f"halfspaces are {a.shape[1]}-dimensional, image has {img.channels} channels"
        )
    viol = img.pixels @ a.T - b[None, :]
    return float(np.mean((viol > tol).any(axis=1)))


@dataclass
class MetricsReport:
    """Metric bundle attached to application results."""

    rwms_mean: float
    rwms_image: Image | None = None
    commutator_norm_normalized: float | None = None
    jd_residual: float | None = None
    out_of_gamut_fraction: float | None = None
    baseline: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"rwms_mean": self.rwms_mean}
        if self.commutator_norm_normalized is not None:
            out["commutator_norm_normalized"] = self.commutator_norm_normalized
        if self.jd_residual is not None:
            out["jd_residual"] = self.jd_residual
        if self.out_of_gamut_fraction is not None:
            out["out_of_gamut_fraction"] = self.out_of_gamut_fraction
        if self.baseline:
            out["baseline"] = dict(self.baseline)
        return out
