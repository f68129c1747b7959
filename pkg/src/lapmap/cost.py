"""Commutator-based structure cost and its analytic gradient.

For a fixed edge support, a parametric colormap theta induces mapped
vertex colors and hence a Laplacian L(theta) rebuilt on that support.
Against each target Laplacian L_k (same support) the cost accumulates

    mu0_k ||[L_k, L(theta)]||_F^2  +  mu1_k ||L_k - L(theta)||_F^2

plus a parameter anchor mu2 ||theta - theta0||^2 and optional color
anchors mu3 ||map(theta, X_c) - Y_c||_F^2.  A per-pair fixed "post"
matrix (e.g. a dichromacy simulation) may sit between the map and the
Laplacian, so one theta can drive several differently-observed graphs.

Gradient chain, derived per edge e = (i, j) with E_e the Laplacian
increment of that edge (+1 at (i,i),(j,j), -1 at (i,j),(j,i)):

* d||L_k - L||^2 / dw_e = -2 (D_ii + D_jj - 2 D_ij),  D = L_k - L;
* d||[L_k, L]||^2 / dw_e = 2 (P_ii + P_jj - 2 P_ij),  P = [L_k, [L_k, L]]
  (P is symmetric, being the commutator of a symmetric and an
  antisymmetric matrix);
* dw_e / dtheta = -(w_e / sigma_r^2) *
      sum_ch (y_i - y_j)_ch * (J_i - J_j)_ch ,
  where y are mapped colors and J the per-channel parameter Jacobians.

All formulas are validated against central finite differences in the
test suite; that oracle is the arbiter of correctness here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .colormap import ColormapFamily
from .graph import EdgeSupport, SparseSymMatrix, degrees


def commutator(a: SparseSymMatrix, b: SparseSymMatrix) -> np.ndarray:
    """Dense [A, B] = AB - BA for diagnostics; dims must match."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.dim > 5000:
        raise ValueError("commutator materializes a dense matrix; dim too large")
    ad, bd = a.to_dense(), b.to_dense()
    return ad @ bd - bd @ ad


def off_diagonal_energy(m: np.ndarray) -> float:
    """Sum of squared off-diagonal entries."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"need a square matrix, got shape {m.shape}")
    d = m.copy()
    np.fill_diagonal(d, 0.0)
    return float(np.sum(d * d))


@dataclass(frozen=True)
class CostWeights:
    """Term weights: mu0/mu1 per target pair, mu2/mu3 global."""

    mu0: tuple[float, ...]
    mu1: tuple[float, ...]
    mu2: float
    mu3: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mu0", tuple(float(v) for v in np.atleast_1d(self.mu0)))
        object.__setattr__(self, "mu1", tuple(float(v) for v in np.atleast_1d(self.mu1)))
        if len(self.mu0) != len(self.mu1):
            raise ValueError("mu0 and mu1 must have one weight per target pair")
        if any(v < 0 for v in self.mu0 + self.mu1) or self.mu2 < 0 or self.mu3 < 0:
            raise ValueError("cost weights must be nonnegative")


class _LaplacianCsr:
    """Reusable CSR skeleton for symmetric matrices on a fixed support."""

    def __init__(self, support: EdgeSupport):
        n = support.dim
        i = np.concatenate([support.rows, support.cols, np.arange(n)])
        j = np.concatenate([support.cols, support.rows, np.arange(n)])
        order = np.lexsort((j, i))
        self._perm = order
        self._indices = j[order].astype(np.int32)
        counts = np.bincount(i, minlength=n)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        self.shape = (n, n)

    def build(self, off_values: np.ndarray, diag: np.ndarray) -> sp.csr_matrix:
        raw = np.concatenate([off_values, off_values, diag])
        return sp.csr_matrix(
            (raw[self._perm], self._indices, self._indptr), shape=self.shape
        )


def _csr_entries(m: sp.csr_matrix, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Vectorized lookup of m[rows[k], cols[k]] (0 where not stored)."""
    if m.nnz == 0:
        return np.zeros(len(rows))
    m.sort_indices()
    n = m.shape[0]
    row_rep = np.repeat(np.arange(n), np.diff(m.indptr))
    keys = row_rep.astype(np.int64) * n + m.indices
    queries = rows.astype(np.int64) * n + cols
    pos = np.searchsorted(keys, queries)
    out = np.zeros(len(queries))
    safe = np.minimum(pos, len(keys) - 1)
    hit = keys[safe] == queries
    out[hit] = m.data[pos[hit]]
    return out


@dataclass(eq=False)
class ProblemSpec:
    """Everything fixed during a solve.

    source_colors are the graph vertices' input colors (rows align with
    support vertex numbering); targets live on the same support.  posts
    holds one optional fixed observer matrix per target pair, applied to
    mapped colors before the pair's Laplacian is built.  Anchors and
    gamut halfspaces act on the bare family output.
    """

    support: EdgeSupport
    source_colors: np.ndarray
    family: ColormapFamily
    weights: CostWeights
    targets: tuple[SparseSymMatrix, ...]
    posts: tuple[np.ndarray | None, ...]
    sigma_r: float
    theta0: np.ndarray
    anchors: tuple[np.ndarray, np.ndarray] | None = None
    halfspaces: tuple[np.ndarray, np.ndarray] | None = None
    _target_csr: tuple = field(init=False, repr=False)
    _template: _LaplacianCsr = field(init=False, repr=False)

    def __post_init__(self):
        self.source_colors = np.asarray(self.source_colors, dtype=float)
        self.theta0 = np.asarray(self.theta0, dtype=float)
        self.targets = tuple(self.targets)
        self.posts = tuple(self.posts)
        if self.sigma_r <= 0:
            raise ValueError(f"sigma_r must be > 0, got {self.sigma_r}")
        if len(self.source_colors) != self.support.dim:
            raise ValueError(
                f"need {self.support.dim} source color rows, got {len(self.source_colors)}"
            )
        if self.source_colors.shape[1] != self.family.d_in:
            raise ValueError(
                f"family expects {self.family.d_in} input channels, "
                f"got {self.source_colors.shape[1]}"
            )
        if len(self.targets) != len(self.weights.mu0):
            raise ValueError("one (mu0, mu1) pair per target required")
        if len(self.posts) != len(self.targets):
            raise ValueError("one post entry (or None) per target required")
        for t in self.targets:
            if t.dim != self.support.dim:
                raise ValueError(f"target dim {t.dim} != support dim {self.support.dim}")
            if not (
                np.array_equal(t.rows, self.support.rows)
                and np.array_equal(t.cols, self.support.cols)
            ):
                raise ValueError("targets must live on the problem's edge support")
        for p in self.posts:
            if p is not None and p.shape[1] != self.family.d_out:
                raise ValueError(
                    f"post expects {p.shape[1]} channels, family outputs {self.family.d_out}"
                )
        if self.theta0.shape != (self.family.n_params,):
            raise ValueError(
                f"theta0 must have shape ({self.family.n_params},), got {self.theta0.shape}"
            )
        if self.anchors is not None:
            xc, yc = self.anchors
            xc = np.atleast_2d(np.asarray(xc, dtype=float))
            yc = np.atleast_2d(np.asarray(yc, dtype=float))
            if xc.shape[0] != yc.shape[0]:
                raise ValueError("anchor inputs and outputs must pair up")
            if xc.shape[1] != self.family.d_in or yc.shape[1] != self.family.d_out:
                raise ValueError("anchor colors must match family dimensions")
            self.anchors = (xc, yc)
        if self.halfspaces is not None:
            a, b = self.halfspaces
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.atleast_1d(np.asarray(b, dtype=float))
            if a.shape[0] != len(b) or a.shape[1] != self.family.d_out:
                raise ValueError("halfspaces must be (h, d_out) normals with h offsets")
            self.halfspaces = (a, b)
        self._target_csr = tuple(t.to_csr() for t in self.targets)
        self._template = _LaplacianCsr(self.support)

    @property
    def n_pairs(self) -> int:
        return len(self.targets)

    def mapped_colors(self, theta: np.ndarray) -> np.ndarray:
        return self.family.apply(theta, self.source_colors, self.support.vertices)

    def mapped_laplacian(self, theta: np.ndarray, pair: int = 0) -> SparseSymMatrix:
        """The Laplacian the given pair sees at theta (post applied)."""
        y = self.mapped_colors(theta)
        post = self.posts[pair]
        if post is not None:
            y = y @ post.T
        w = self._edge_weights(y)
        return SparseSymMatrix(
            self.support.dim,
            self.support.rows,
            self.support.cols,
            -w,
            degrees(self.support, w),
        )

    def _edge_weights(self, mapped: np.ndarray) -> np.ndarray:
        diff = mapped[self.support.rows] - mapped[self.support.cols]
        sq = np.einsum("ij,ij->i", diff, diff)
        return self.support.spatial_factor * np.exp(-sq / (2.0 * self.sigma_r**2))


def _pair_states(theta, spec):
    """Mapped colors, per-pair observed colors / weights / degrees."""
    y = spec.mapped_colors(theta)
    states = []
    for post in spec.posts:
        yk = y if post is None else y @ post.T
        w = spec._edge_weights(yk)
        states.append((yk, w, degrees(spec.support, w)))
    return y, states


def _edge_grad_pair(spec, k, w, deg, lphi_csr):
    """d(structure terms of pair k)/d(edge weights), one value per edge."""
    rows, cols = spec.support.rows, spec.support.cols
    target = spec.targets[k]
    s = np.zeros(spec.support.n_edges)
    mu0 = spec.weights.mu0[k]
    mu1 = spec.weights.mu1[k]
    if mu0 != 0.0:
        tcsr = spec._target_csr[k]
        c = tcsr @ lphi_csr - lphi_csr @ tcsr
        p = tcsr @ c - c @ tcsr
        pd = p.diagonal()
        pv = _csr_entries(p, rows, cols)
        s += mu0 * 2.0 * (pd[rows] + pd[cols] - 2.0 * pv)
    if mu1 != 0.0:
        doff = w - (-target.values)
        ddiag = target.diag - deg
        s += mu1 * (-2.0) * (ddiag[rows] + ddiag[cols] - 2.0 * doff)
    return s


def grad_wij(spec: ProblemSpec, mapped, pair: int | None = None) -> np.ndarray:
    """Structure-term gradient w.r.t. mapped edge weights.

    mapped is the mapped Laplacian (or one per pair); pair=None sums the
    contributions of every pair, which assumes they all observe the same
    mapped Laplacian -- pass a sequence when posts differ.
    """
    if isinstance(mapped, SparseSymMatrix):
        laps = [mapped] * spec.n_pairs
    else:
        laps = list(mapped)
        if len(laps) != spec.n_pairs:
            raise ValueError(f"need {spec.n_pairs} Laplacians, got {len(laps)}")
    if pair is not None:
        lap = laps[pair]
        return _edge_grad_pair(spec, pair, -lap.values, lap.diag, lap.to_csr())
    total = np.zeros(spec.support.n_edges)
    for k, lap in enumerate(laps):
        total += _edge_grad_pair(spec, k, -lap.values, lap.diag, lap.to_csr())
    return total


def grad_theta_w(spec: ProblemSpec, theta, edge: int, pair: int = 0) -> np.ndarray:
    """Gradient of one edge's mapped weight w.r.t. theta."""
    theta = np.asarray(theta, dtype=float)
    i = spec.support.rows[edge]
    j = spec.support.cols[edge]
    sel = np.array([i, j])
    colors = spec.source_colors[sel]
    idx = spec.support.vertices[sel]
    y = spec.family.apply(theta, colors, idx)
    jac = spec.family.channel_jacobians(theta, colors, idx)
    post = spec.posts[pair]
    if post is not None:
        y = y @ post.T
        jac = np.einsum("oc,cmn->omn", post, jac)
    diff = y[0] - y[1]
    w = spec.support.spatial_factor[edge] * np.exp(
        -np.dot(diff, diff) / (2.0 * spec.sigma_r**2)
    )
    jdiff = jac[:, 0, :] - jac[:, 1, :]
    return -(w / spec.sigma_r**2) * (diff @ jdiff)


def cost_terms(theta, spec: ProblemSpec) -> dict:
    """Individual cost terms (already weighted) plus their total."""
    theta = np.asarray(theta, dtype=float)
    _, states = _pair_states(theta, spec)
    commutator_terms = []
    difference_terms = []
    for k, (yk, w, deg) in enumerate(states):
        mu0 = spec.weights.mu0[k]
        mu1 = spec.weights.mu1[k]
        target = spec.targets[k]
        c0 = 0.0
        if mu0 != 0.0:
            lphi = spec._template.build(-w, deg)
            c = spec._target_csr[k] @ lphi - lphi @ spec._target_csr[k]
            c0 = mu0 * float(np.sum(c.data**2))
        c1 = 0.0
        if mu1 != 0.0:
            c1 = mu1 * float(
                2.0 * np.sum((target.values + w) ** 2)
                + np.sum((target.diag - deg) ** 2)
            )
        commutator_terms.append(c0)
        difference_terms.append(c1)
    dtheta = theta - spec.theta0
    reg = spec.weights.mu2 * float(dtheta @ dtheta)
    anchor = 0.0
    if spec.anchors is not None and spec.weights.mu3 != 0.0:
        xc, yc = spec.anchors
        resid = spec.family.apply(theta, xc) - yc
        anchor = spec.weights.mu3 * float(np.sum(resid**2))
    total = sum(commutator_terms) + sum(difference_terms) + reg + anchor
    return {
        "commutator": commutator_terms,
        "laplacian_diff": difference_terms,
        "regularizer": reg,
        "anchors": anchor,
        "total": total,
    }


def cost_total(theta, spec: ProblemSpec) -> float:
    return cost_terms(theta, spec)["total"]


def cost_and_grad(theta, spec: ProblemSpec) -> tuple[float, np.ndarray]:
    """Total cost and its gradient in one pass (shared intermediates)."""
    theta = np.asarray(theta, dtype=float)
    fam = spec.family
    rows, cols = spec.support.rows, spec.support.cols
    _, states = _pair_states(theta, spec)
    jac = fam.channel_jacobians(theta, spec.source_colors, spec.support.vertices)
    total = 0.0
    grad = np.zeros(fam.n_params)
    inv_sr2 = 1.0 / spec.sigma_r**2
    for k, (yk, w, deg) in enumerate(states):
        mu0 = spec.weights.mu0[k]
        mu1 = spec.weights.mu1[k]
        target = spec.targets[k]
        lphi = spec._template.build(-w, deg)
        if mu0 != 0.0:
            c = spec._target_csr[k] @ lphi - lphi @ spec._target_csr[k]
            total += mu0 * float(np.sum(c.data**2))
        if mu1 != 0.0:
            total += mu1 * float(
                2.0 * np.sum((target.values + w) ** 2)
                + np.sum((target.diag - deg) ** 2)
            )
        s = _edge_grad_pair(spec, k, w, deg, lphi)
        coef = -s * w * inv_sr2
        post = spec.posts[k]
        jk = jac if post is None else np.einsum("oc,cmn->omn", post, jac)
        for ch in range(yk.shape[1]):
            t = coef * (yk[rows, ch] - yk[cols, ch])
            r = np.zeros(spec.support.dim)
            np.add.at(r, rows, t)
            np.add.at(r, cols, -t)
            grad += jk[ch].T @ r
    dtheta = theta - spec.theta0
    total += spec.weights.mu2 * float(dtheta @ dtheta)
    grad += 2.0 * spec.weights.mu2 * dtheta
    if spec.anchors is not None and spec.weights.mu3 != 0.0:
        xc, yc = spec.anchors
        resid = fam.apply(theta, xc) - yc
        total += spec.weights.mu3 * float(np.sum(resid**2))
        jc = fam.channel_jacobians(theta, xc)
        for ch in range(yc.shape[1]):
            grad += 2.0 * spec.weights.mu3 * (jc[ch].T @ resid[:, ch])
    return total, grad


def grad_total(theta, spec: ProblemSpec) -> np.ndarray:
    return cost_and_grad(theta, spec)[1]


def dense_cost(theta, spec: ProblemSpec) -> float:
    """Literal dense-matrix evaluation of the cost, for validation only."""
    if spec.support.dim > 512:
        raise ValueError("dense reference path is limited to 512 vertices")
    theta = np.asarray(theta, dtype=float)
    n = spec.support.dim
    y = spec.mapped_colors(theta)
    total = 0.0
    for k, post in enumerate(spec.posts):
        yk = y if post is None else y @ post.T
        wmat = np.zeros((n, n))
        diff = yk[spec.support.rows] - yk[spec.support.cols]
        sq = (diff**2).sum(axis=1)
        w = spec.support.spatial_factor * np.exp(-sq / (2.0 * spec.sigma_r**2))
        wmat[spec.support.rows, spec.support.cols] = w
        wmat += wmat.T
        lphi = np.diag(wmat.sum(axis=1)) - wmat
        lt = spec.targets[k].to_dense()
        comm = lt @ lphi - lphi @ lt
        total += spec.weights.mu0[k] * float(np.sum(comm**2))
        total += spec.weights.mu1[k] * float(np.sum((lt - lphi) ** 2))
    dtheta = theta - spec.theta0
    total += spec.weights.mu2 * float(dtheta @ dtheta)
    if spec.anchors is not None and spec.weights.mu3 != 0.0:
        xc, yc = spec.anchors
        resid = spec.family.apply(theta, xc) - yc
        total += spec.weights.mu3 * float(np.sum(resid**2))
    return total
