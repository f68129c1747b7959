"""Parametric colormap families with analytic parameter Jacobians.

A family maps per-pixel color vectors (d_in) to (d_out) under a parameter
vector theta, and exposes:

* ``apply(theta, colors, pixel_indices)`` -> mapped colors,
* ``channel_jacobians(theta, colors, pixel_indices)`` -> d(theta) of every
  output channel, shape (d_out, m, n_params),
* ``project(theta)`` -> Euclidean projection onto the feasible set
  (per-parameter boxes plus simplex-constrained weight groups),
* ``init(rng)`` -> a feasible random starting point.

``pixel_indices`` ties colors to image pixels; global families ignore it,
the local mixture family uses it to look up per-pixel region weights
(``None`` means colors without spatial identity, which get uniform region
weights -- used for anchor colors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import kmeans
from .images import Image

# Inputs are clamped to [VALUE_FLOOR, 1] before exponentiation so power
# curves and their log-derivatives stay finite at black pixels.
VALUE_FLOOR = 1e-6

EXPONENT_MIN = 0.2
EXPONENT_MAX = 5.0
OFFSET_BOUND = 1.0


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {v >= 0, sum(v) = 1} (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = idx[u - css / idx > 0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


class ColormapFamily:
    """Shared projection logic; subclasses define the map itself."""

    d_in: int
    d_out: int
    n_params: int

    def simplex_groups(self) -> list[np.ndarray]:
        return []

    def boxes(self) -> np.ndarray:
        """(n_params, 2) lower/upper bounds; +-inf where unbounded."""
        out = np.empty((self.n_params, 2))
        out[:, 0] = -np.inf
        out[:, 1] = np.inf
        return out

    def project(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(
                f"theta must have shape ({self.n_params},), got {theta.shape}"
            )
        boxes = self.boxes()
        out = np.clip(theta, boxes[:, 0], boxes[:, 1])
        for group in self.simplex_groups():
            out[group] = project_simplex(theta[group])
        return out

    def apply(self, theta, colors, pixel_indices=None) -> np.ndarray:
        raise NotImplementedError

    def channel_jacobians(self, theta, colors, pixel_indices=None) -> np.ndarray:
        raise NotImplementedError

    def init(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def identity_theta(self) -> np.ndarray:
        """Parameters reproducing the input, where the family allows it."""
        raise NotImplementedError(f"{type(self).__name__} has no identity map")

    def describe(self) -> str:
        raise NotImplementedError

    def _check(self, theta, colors):
        theta = np.asarray(theta, dtype=float)
        colors = np.atleast_2d(np.asarray(colors, dtype=float))
        if theta.shape != (self.n_params,):
            raise ValueError(
                f"theta must have shape ({self.n_params},), got {theta.shape}"
            )
        if colors.shape[1] != self.d_in:
            raise ValueError(
                f"colors must have {self.d_in} channels, got {colors.shape[1]}"
            )
        return theta, colors


class GammaMap(ColormapFamily):
    """Offset plus weighted per-channel power curves.

    Each output channel i has a parameter block
    (offset_i, weight_i1, exponent_i1, ..., weight_id, exponent_id) and maps

        y_i = offset_i + sum_j weight_ij * clamp(x_j)^exponent_ij .

    Weight vectors are simplex-constrained (nonnegative, summing to 1), so
    an all-gray input is reproduced exactly whenever offset = 0 and the
    exponents are 1.  Exponents live in [EXPONENT_MIN, EXPONENT_MAX].
    """

    def __init__(self, d_in: int, d_out: int):
        if d_in < 1 or d_out < 1:
            raise ValueError(f"invalid dimensions {d_in}->{d_out}")
        self.d_in = d_in
        self.d_out = d_out
        self.block = 1 + 2 * d_in
        self.n_params = d_out * self.block

    def _split(self, theta):
        blocks = theta.reshape(self.d_out, self.block)
        offsets = blocks[:, 0]
        weights = blocks[:, 1::2]
        exponents = blocks[:, 2::2]
        return offsets, weights, exponents

    def simplex_groups(self):
        base = np.arange(self.d_out) * self.block
        return [b + 1 + 2 * np.arange(self.d_in) for b in base]

    def boxes(self):
        out = super().boxes()
        offsets, _, exponents = self._split(np.arange(self.n_params, dtype=float))
        out[offsets.astype(int), 0] = -OFFSET_BOUND
        out[offsets.astype(int), 1] = OFFSET_BOUND
        exp_idx = exponents.astype(int).ravel()
        out[exp_idx, 0] = EXPONENT_MIN
        out[exp_idx, 1] = EXPONENT_MAX
        return out

    def apply(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        offsets, weights, exponents = self._split(theta)
        xc = np.clip(colors, VALUE_FLOOR, 1.0)
        powered = xc[:, None, :] ** exponents[None, :, :]
        return offsets[None, :] + np.einsum("oj,moj->mo", weights, powered)

    def channel_jacobians(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        offsets, weights, exponents = self._split(theta)
        xc = np.clip(colors, VALUE_FLOOR, 1.0)
        logx = np.log(xc)
        m = len(colors)
        jac = np.zeros((self.d_out, m, self.n_params))
        for i in range(self.d_out):
            base = i * self.block
            powered = xc ** exponents[i][None, :]
            jac[i, :, base] = 1.0
            jac[i, :, base + 1 : base + self.block : 2] = powered
            jac[i, :, base + 2 : base + self.block : 2] = weights[i] * powered * logx
        return jac

    def init(self, rng):
        theta = np.zeros(self.n_params)
        blocks = theta.reshape(self.d_out, self.block)
        blocks[:, 2::2] = 1.0
        for i in range(self.d_out):
            blocks[i, 1::2] = project_simplex(rng.uniform(size=self.d_in))
        return blocks.reshape(-1)

    def identity_theta(self):
        if self.d_in != self.d_out:
            raise NotImplementedError(f"no identity for {self.d_in}->{self.d_out}")
        theta = np.zeros(self.n_params)
        blocks = theta.reshape(self.d_out, self.block)
        blocks[:, 2::2] = 1.0
        for i in range(self.d_out):
            blocks[i, 1 + 2 * i] = 1.0
        return blocks.reshape(-1)

    def describe(self):
        return f"gamma({self.d_in}->{self.d_out})"


class LinearMap(ColormapFamily):
    """A d_out x d_in matrix map, theta stored row-major.

    With simplex_rows=True each output is a convex combination of inputs
    (rows nonnegative, summing to 1); otherwise the map is unconstrained.
    """

    def __init__(self, d_in: int, d_out: int, simplex_rows: bool = True):
        if d_in < 1 or d_out < 1:
            raise ValueError(f"invalid dimensions {d_in}->{d_out}")
        self.d_in = d_in
        self.d_out = d_out
        self.simplex_rows = simplex_rows
        self.n_params = d_in * d_out

    def simplex_groups(self):
        if not self.simplex_rows:
            return []
        return [i * self.d_in + np.arange(self.d_in) for i in range(self.d_out)]

    def apply(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        return colors @ theta.reshape(self.d_out, self.d_in).T

    def channel_jacobians(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        m = len(colors)
        jac = np.zeros((self.d_out, m, self.n_params))
        for i in range(self.d_out):
            jac[i, :, i * self.d_in : (i + 1) * self.d_in] = colors
        return jac

    def init(self, rng):
        rows = rng.uniform(size=(self.d_out, self.d_in))
        if self.simplex_rows:
            rows = np.stack([project_simplex(r) for r in rows])
        else:
            rows /= self.d_in
        return rows.reshape(-1)

    def identity_theta(self):
        if self.d_in != self.d_out:
            raise NotImplementedError(f"no identity for {self.d_in}->{self.d_out}")
        return np.eye(self.d_in).reshape(-1)

    def describe(self):
        kind = "simplex" if self.simplex_rows else "free"
        return f"linear({self.d_in}->{self.d_out}, {kind})"


class LocalMixtureMap(ColormapFamily):
    """Spatially varying map: a soft-weighted mixture of q copies of a base.

    region_weights has one row per image pixel (rows sum to 1); pixel_indices
    selects rows for the colors being mapped.  Colors without a pixel
    identity (pixel_indices=None, e.g. anchor colors) use uniform weights.
    """

    def __init__(self, base: ColormapFamily, region_weights: np.ndarray):
        weights = np.asarray(region_weights, dtype=float)
        if weights.ndim != 2:
            raise ValueError(f"region weights must be 2-D, got shape {weights.shape}")
        if np.any(weights < 0) or not np.allclose(weights.sum(axis=1), 1.0):
            raise ValueError("region weight rows must be nonnegative and sum to 1")
        self.base = base
        self.region_weights = weights
        self.q = weights.shape[1]
        self.d_in = base.d_in
        self.d_out = base.d_out
        self.n_params = self.q * base.n_params

    def _weights_for(self, m, pixel_indices):
        if pixel_indices is None:
            return np.full((m, self.q), 1.0 / self.q)
        w = self.region_weights[np.asarray(pixel_indices)]
        if len(w) != m:
            raise ValueError("pixel_indices length must match colors")
        return w

    def simplex_groups(self):
        nb = self.base.n_params
        return [
            r * nb + g for r in range(self.q) for g in self.base.simplex_groups()
        ]

    def boxes(self):
        return np.tile(self.base.boxes(), (self.q, 1))

    def apply(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        w = self._weights_for(len(colors), pixel_indices)
        nb = self.base.n_params
        out = np.zeros((len(colors), self.d_out))
        for r in range(self.q):
            sub = self.base.apply(theta[r * nb : (r + 1) * nb], colors)
            out += w[:, r, None] * sub
        return out

    def channel_jacobians(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        w = self._weights_for(len(colors), pixel_indices)
        nb = self.base.n_params
        jac = np.zeros((self.d_out, len(colors), self.n_params))
        for r in range(self.q):
            sub = self.base.channel_jacobians(theta[r * nb : (r + 1) * nb], colors)
            jac[:, :, r * nb : (r + 1) * nb] = w[None, :, r, None] * sub
        return jac

    def init(self, rng):
        return np.concatenate([self.base.init(rng) for _ in range(self.q)])

    def describe(self):
        return f"mixture(q={self.q}, {self.base.describe()})"


class ComposedMap(ColormapFamily):
    """Fixed linear maps around a parametric core: y = post @ core(pre @ x).

    Either matrix may be None (identity).  Parameters, constraints, and
    initialization all delegate to the core.
    """

    def __init__(self, core: ColormapFamily, pre=None, post=None):
        self.core = core
        self.pre = None if pre is None else np.asarray(pre, dtype=float)
        self.post = None if post is None else np.asarray(post, dtype=float)
        if self.pre is not None and self.pre.shape[0] != core.d_in:
            raise ValueError(
                f"pre maps into {self.pre.shape[0]} channels, core expects {core.d_in}"
            )
        if self.post is not None and self.post.shape[1] != core.d_out:
            raise ValueError(
                f"post expects {self.post.shape[1]} channels, core outputs {core.d_out}"
            )
        self.d_in = core.d_in if self.pre is None else self.pre.shape[1]
        self.d_out = core.d_out if self.post is None else self.post.shape[0]
        self.n_params = core.n_params

    def simplex_groups(self):
        return self.core.simplex_groups()

    def boxes(self):
        return self.core.boxes()

    def apply(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        if self.pre is not None:
            colors = colors @ self.pre.T
        out = self.core.apply(theta, colors, pixel_indices)
        if self.post is not None:
            out = out @ self.post.T
        return out

    def channel_jacobians(self, theta, colors, pixel_indices=None):
        theta, colors = self._check(theta, colors)
        if self.pre is not None:
            colors = colors @ self.pre.T
        jac = self.core.channel_jacobians(theta, colors, pixel_indices)
        if self.post is not None:
            jac = np.einsum("oc,cmn->omn", self.post, jac)
        return jac

    def init(self, rng):
        return self.core.init(rng)

    def describe(self):
        parts = [self.core.describe()]
        if self.pre is not None:
            parts.append("pre")
        if self.post is not None:
            parts.append("post")
        return f"composed({', '.join(parts)})"


@dataclass(frozen=True, eq=False)
class ColormapParams:
    """A family together with a concrete parameter vector."""

    family: ColormapFamily
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (self.family.n_params,):
            raise ValueError(
                f"theta must have shape ({self.family.n_params},), got {theta.shape}"
            )
        object.__setattr__(self, "theta", theta)


def apply(params: ColormapParams, img: Image) -> Image:
    """Map every pixel of an image; output channel count is family.d_out."""
    fam = params.family
    if img.channels != fam.d_in:
        raise ValueError(
            f"family expects {fam.d_in} channels, image has {img.channels}"
        )
    out = fam.apply(params.theta, img.pixels, np.arange(img.height * img.width))
    return Image(out.reshape(img.height, img.width, fam.d_out))


def jacobian(params: ColormapParams, pixel: np.ndarray) -> np.ndarray:
    """(d_out, n_params) Jacobian of the map at a single color."""
    jac = params.family.channel_jacobians(params.theta, np.atleast_2d(pixel))
    return jac[:, 0, :]


def project_params(params: ColormapParams) -> ColormapParams:
    return ColormapParams(params.family, params.family.project(params.theta))


def init_params(family: ColormapFamily, seed: int = 0) -> ColormapParams:
    theta = family.init(np.random.default_rng(seed))
    return ColormapParams(family, theta)


def soft_region_weights(
    img: Image,
    q: int,
    sigma_c: float = 0.2,
    sigma_p: float = 0.5,
    seed: int = 0,
) -> np.ndarray:
    """Soft assignment of pixels to q color+position clusters.

    Features are colors scaled by 1/sigma_c concatenated with positions
    (normalized by the longer image side) scaled by 1/sigma_p; sigma_p <= 0
    drops the spatial part.  Cluster centers come from k-means; weights are
    Gaussian in feature distance, normalized per pixel.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if sigma_c <= 0:
        raise ValueError(f"sigma_c must be > 0, got {sigma_c}")
    colors = img.pixels
    feats = [colors / sigma_c]
    if sigma_p > 0:
        scale = float(max(img.height, img.width))
        rr, cc = np.meshgrid(
            np.arange(img.height), np.arange(img.width), indexing="ij"
        )
        pos = np.stack([rr.ravel(), cc.ravel()], axis=1) / scale
        feats.append(pos / sigma_p)
    features = np.concatenate(feats, axis=1)
    if len(np.unique(features, axis=0)) < q:
        raise ValueError(f"q={q} exceeds the number of distinct pixels")
    _, centers = kmeans(features, q, seed=seed)
    d2 = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    d2 -= d2.min(axis=1, keepdims=True)
    w = np.exp(-0.5 * d2)
    return w / w.sum(axis=1, keepdims=True)
