"""End-to-end applications: decolorize, daltonize, gamut mapping, fusion.

Each application follows the same pipeline: downsample the input so its
long side fits a budget, optionally subsample graph vertices by a stride
to cap the Laplacian size, build the source Laplacian(s), optimize the
colormap parameters on the graph, then apply the fitted map to the full
resolution input.  Outputs are channel-normalized except for gamut
mapping, whose hard in-gamut guarantee (exact projection) must not be
disturbed afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import colormap as cm
from .cost import CostWeights, ProblemSpec
from .gamut import polygon_to_halfspaces, project_into_polygon
from .graph import GraphParams, SparseSymMatrix, build_support, adjacency_values, build_laplacian, degrees
from .images import (
    Image,
    cvd_simulate,
    cvd_transform,
    normalize_channels,
    resize_longside,
    rgb_to_luma,
    rgb_to_xy_chroma,
)
from .metrics import (
    MetricsReport,
    commutator_norm,
    joint_diag_residual,
    out_of_gamut_fraction,
    rwms,
)
from .optimize import SolveOptions, SolveTrace, best_of_restarts

_EIG_LIMIT = 3000


@dataclass
class AppOptions:
    """Shared knobs for all applications.

    mu0/mu1/mu2/mu3 override the per-application defaults when not None;
    mu0/mu1 accept a scalar (broadcast over target pairs) or a sequence.
    family selects the parametric head: "gamma" or "linear".
    """

    graph: GraphParams = field(default_factory=GraphParams)
    max_side: int = 300
    max_vertices: int = 10000
    seed: int = 0
    restarts: int = 3
    family: str = "gamma"
    mu0: object = None
    mu1: object = None
    mu2: float | None = None
    mu3: float | None = None
    anchors: tuple[np.ndarray, np.ndarray] | None = None
    solver: SolveOptions = field(default_factory=SolveOptions)
    theta_init: np.ndarray | None = None
    compute_eig_metrics: bool = True


@dataclass
class AppResult:
    """Everything a run produces."""

    output: Image
    mapped: Image
    theta: np.ndarray
    family: cm.ColormapFamily
    trace: SolveTrace
    metrics: MetricsReport
    spec: ProblemSpec
    graph_image: Image


def _pair_weights(value, default, n_pairs):
    if value is None:
        value = default
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if len(arr) == 1:
        arr = np.repeat(arr, n_pairs)
    if len(arr) != n_pairs:
        raise ValueError(f"need {n_pairs} pair weights, got {len(arr)}")
    return tuple(arr)


def _graph_stride(height: int, width: int, max_vertices: int) -> int:
    stride = 1
    while np.ceil(height / stride) * np.ceil(width / stride) > max_vertices:
        stride += 1
    return stride


def _prepare_graph(img: Image, options: AppOptions):
    """Downsampled image plus a support sized within the vertex budget."""
    g = resize_longside(img, options.max_side)
    stride = _graph_stride(g.height, g.width, options.max_vertices)
    params = replace(options.graph, stride=max(stride, options.graph.stride))
    support = build_support(g.height, g.width, params)
    return g, support, params


def _laplacian_for(support, colors, sigma_r) -> SparseSymMatrix:
    w = adjacency_values(support, colors, sigma_r)
    adj = SparseSymMatrix(
        support.dim, support.rows, support.cols, w, np.zeros(support.dim)
    )
    return build_laplacian(adj)


def _make_family(kind: str, d_in: int, d_out: int) -> cm.ColormapFamily:
    if kind == "gamma":
        return cm.GammaMap(d_in, d_out)
    if kind == "linear":
        return cm.LinearMap(d_in, d_out, simplex_rows=True)
    raise ValueError(f"unknown family {kind!r}: expected 'gamma' or 'linear'")


def _graph_metrics(spec: ProblemSpec, theta, source_lap, options) -> dict:
    out = {}
    mapped_lap = spec.mapped_laplacian(theta, pair=0)
    out["commutator_norm_normalized"] = commutator_norm(
        source_lap, mapped_lap, normalize=True
    )
    if options.compute_eig_metrics and spec.support.dim <= _EIG_LIMIT:
        k = min(10, spec.support.dim)
        out["jd_residual"] = joint_diag_residual(source_lap, mapped_lap, k)
    return out


def decolorize(img: Image, options: AppOptions | None = None) -> AppResult:
    """Structure-preserving RGB -> grayscale."""
    options = options or AppOptions()
    if img.channels != 3:
        raise ValueError(f"decolorize expects RGB, got {img.channels} channels")
    g, support, params = _prepare_graph(img, options)
    colors = g.pixels[support.vertices]
    source_lap = _laplacian_for(support, colors, params.sigma_r)
    family = _make_family(options.family, 3, 1)
    weights = CostWeights(
        mu0=_pair_weights(options.mu0, 1.0, 1),
        mu1=_pair_weights(options.mu1, 1.0, 1),
        mu2=1.0 if options.mu2 is None else options.mu2,
        mu3=0.0 if options.mu3 is None else options.mu3,
    )
    spec = ProblemSpec(
        support=support,
        source_colors=colors,
        family=family,
        weights=weights,
        targets=(source_lap,),
        posts=(None,),
        sigma_r=params.sigma_r,
        theta0=np.zeros(family.n_params),
        anchors=options.anchors,
    )
    theta, trace = best_of_restarts(
        spec, options.seed, options.restarts, options.solver, options.theta_init
    )
    mapped = cm.apply(cm.ColormapParams(family, theta), img)
    output = normalize_channels(mapped)

    rwms_image, rwms_mean = rwms(img, output)
    luma = rgb_to_luma(img)
    _, luma_rwms = rwms(img, luma)
    extra = _graph_metrics(spec, theta, source_lap, options)
    report = MetricsReport(
        rwms_mean=rwms_mean,
        rwms_image=rwms_image,
        commutator_norm_normalized=extra.get("commutator_norm_normalized"),
        jd_residual=extra.get("jd_residual"),
        baseline={"luma_rwms_mean": luma_rwms},
    )
    return AppResult(output, mapped, theta, family, trace, report, spec, g)


def daltonize(
    img: Image, kind: str = "deuteranopia", options: AppOptions | None = None
) -> AppResult:
    """Recolor so structure survives a dichromat's view of the output.

    Two structure pairs share one map: the source Laplacian against the
    Laplacian of the simulated mapped image, and against the Laplacian of
    the mapped image itself (keeping the output faithful for normal view).
    """
    options = options or AppOptions()
    if img.channels != 3:
        raise ValueError(f"daltonize expects RGB, got {img.channels} channels")
    transform = cvd_transform(kind)
    g, support, params = _prepare_graph(img, options)
    colors = g.pixels[support.vertices]
    source_lap = _laplacian_for(support, colors, params.sigma_r)
    family = _make_family(options.family, 3, 3)
    weights = CostWeights(
        mu0=_pair_weights(options.mu0, 1.0, 2),
        mu1=_pair_weights(options.mu1, 1.0, 2),
        mu2=1.0 if options.mu2 is None else options.mu2,
        mu3=0.0 if options.mu3 is None else options.mu3,
    )
    spec = ProblemSpec(
        support=support,
        source_colors=colors,
        family=family,
        weights=weights,
        targets=(source_lap, source_lap),
        posts=(transform.matrix, None),
        sigma_r=params.sigma_r,
        theta0=np.zeros(family.n_params),
        anchors=options.anchors,
    )
    theta, trace = best_of_restarts(
        spec, options.seed, options.restarts, options.solver, options.theta_init
    )
    mapped = cm.apply(cm.ColormapParams(family, theta), img)
    output = normalize_channels(mapped)

    rwms_image, rwms_mean = rwms(img, output)
    _, sim_in = rwms(img, cvd_simulate(img, transform))
    _, sim_out = rwms(img, cvd_simulate(output, transform))
    extra = _graph_metrics(spec, theta, source_lap, options)
    report = MetricsReport(
        rwms_mean=rwms_mean,
        rwms_image=rwms_image,
        commutator_norm_normalized=extra.get("commutator_norm_normalized"),
        jd_residual=extra.get("jd_residual"),
        baseline={
            "rwms_simulated_input": sim_in,
            "rwms_simulated_output": sim_out,
        },
    )
    return AppResult(output, mapped, theta, family, trace, report, spec, g)


def gamut_map(
    img: Image, polygon: np.ndarray, options: AppOptions | None = None
) -> AppResult:
    """Map chromaticities into a convex target polygon, structure-first.

    The source Laplacian comes from the RGB image; the fitted map acts on
    xy chromaticities.  After optimization the full-resolution mapped
    chromaticities are exactly projected into the polygon, so the output
    is guaranteed in-gamut; no normalization is applied afterwards.
    """
    options = options or AppOptions()
    if img.channels != 3:
        raise ValueError(f"gamut mapping expects RGB, got {img.channels} channels")
    halfspaces = polygon_to_halfspaces(polygon)
    g, support, params = _prepare_graph(img, options)
    rgb_colors = g.pixels[support.vertices]
    source_lap = _laplacian_for(support, rgb_colors, params.sigma_r)
    chroma_graph = rgb_to_xy_chroma(g)
    family = _make_family(options.family, 2, 2)
    weights = CostWeights(
        mu0=_pair_weights(options.mu0, 1.0, 1),
        mu1=_pair_weights(options.mu1, 0.25, 1),
        mu2=0.1 if options.mu2 is None else options.mu2,
        mu3=0.0 if options.mu3 is None else options.mu3,
    )
    spec = ProblemSpec(
        support=support,
        source_colors=chroma_graph.pixels[support.vertices],
        family=family,
        weights=weights,
        targets=(source_lap,),
        posts=(None,),
        sigma_r=params.sigma_r,
        theta0=np.zeros(family.n_params),
        anchors=options.anchors,
        halfspaces=halfspaces,
    )
    # Starting from the identity map lets the penalty rounds shrink the
    # gamut smoothly instead of recovering geometry from a random draw.
    theta_init = options.theta_init
    if theta_init is None:
        try:
            theta_init = family.identity_theta()
        except NotImplementedError:
            pass
    theta, trace = best_of_restarts(
        spec, options.seed, options.restarts, options.solver, theta_init
    )
    chroma_full = rgb_to_xy_chroma(img)
    mapped_pixels = family.apply(theta, chroma_full.pixels)
    mapped = Image(mapped_pixels.reshape(img.height, img.width, 2))
    projected = project_into_polygon(mapped_pixels, polygon)
    output = Image(projected.reshape(img.height, img.width, 2))

    rwms_image, rwms_mean = rwms(chroma_full, output)
    clipped = Image(
        project_into_polygon(chroma_full.pixels, polygon).reshape(
            img.height, img.width, 2
        )
    )
    _, clip_rwms = rwms(chroma_full, clipped)
    extra = _graph_metrics(spec, theta, source_lap, options)
    report = MetricsReport(
        rwms_mean=rwms_mean,
        rwms_image=rwms_image,
        commutator_norm_normalized=extra.get("commutator_norm_normalized"),
        jd_residual=extra.get("jd_residual"),
        out_of_gamut_fraction=out_of_gamut_fraction(output, halfspaces),
        baseline={
            "clip_rwms_mean": clip_rwms,
            "oog_fraction_input": out_of_gamut_fraction(chroma_full, halfspaces),
        },
    )
    return AppResult(output, mapped, theta, family, trace, report, spec, g)


def default_fuse_groups(channels: int) -> tuple[tuple[int, ...], ...]:
    """First three channels as one group (if present), the rest singletons."""
    if channels < 2:
        raise ValueError("fusion needs at least 2 channels")
    if channels == 2:
        return ((0,), (1,))
    head: tuple[tuple[int, ...], ...] = ((0, 1, 2),)
    return head + tuple((c,) for c in range(3, channels))


def default_fuse_anchors(d_in: int) -> tuple[np.ndarray, np.ndarray]:
    """Black -> black, white -> white, mid-gray -> mid-gray."""
    xc = np.stack([np.zeros(d_in), np.ones(d_in), np.full(d_in, 0.5)])
    yc = np.stack([np.zeros(3), np.ones(3), np.full(3, 0.5)])
    return xc, yc


def fuse(
    img: Image,
    groups: tuple[tuple[int, ...], ...] | None = None,
    options: AppOptions | None = None,
) -> AppResult:
    """Fuse a multichannel image into RGB, preserving each group's structure.

    Each channel group contributes a target Laplacian; one map from all
    input channels to RGB is fitted against all of them.  Anchor colors
    (default: black/white/mid-gray fixed points) keep the output's
    polarity from flipping.
    """
    options = options or AppOptions()
    if img.channels < 2:
        raise ValueError(f"fusion expects >= 2 channels, got {img.channels}")
    groups = groups or default_fuse_groups(img.channels)
    for grp in groups:
        for c in grp:
            if not 0 <= c < img.channels:
                raise ValueError(f"channel {c} out of range for {img.channels}-channel image")
    g, support, params = _prepare_graph(img, options)
    colors = g.pixels[support.vertices]
    targets = []
    for grp in groups:
        targets.append(_laplacian_for(support, colors[:, list(grp)], params.sigma_r))
    family = _make_family(options.family, img.channels, 3)
    n_pairs = len(groups)
    anchors = options.anchors or default_fuse_anchors(img.channels)
    weights = CostWeights(
        mu0=_pair_weights(options.mu0, 1.0, n_pairs),
        mu1=_pair_weights(options.mu1, 1.0, n_pairs),
        mu2=1.0 if options.mu2 is None else options.mu2,
        mu3=100.0 if options.mu3 is None else options.mu3,
    )
    spec = ProblemSpec(
        support=support,
        source_colors=colors,
        family=family,
        weights=weights,
        targets=tuple(targets),
        posts=(None,) * n_pairs,
        sigma_r=params.sigma_r,
        theta0=np.zeros(family.n_params),
        anchors=anchors,
    )
    theta, trace = best_of_restarts(
        spec, options.seed, options.restarts, options.solver, options.theta_init
    )
    mapped = cm.apply(cm.ColormapParams(family, theta), img)
    output = normalize_channels(mapped)

    rwms_image, rwms_mean = rwms(img, output)
    baseline = {}
    if img.channels >= 3:
        rgb_only = Image(img.data[:, :, :3])
        _, rgb_rwms = rwms(img, rgb_only)
        baseline["rgb_passthrough_rwms"] = rgb_rwms
    extra = _graph_metrics(spec, theta, targets[0], options)
    report = MetricsReport(
        rwms_mean=rwms_mean,
        rwms_image=rwms_image,
        commutator_norm_normalized=extra.get("commutator_norm_normalized"),
        jd_residual=extra.get("jd_residual"),
        baseline=baseline,
    )
    return AppResult(output, mapped, theta, family, trace, report, spec, g)


def evaluate_pair(src: Image, dst: Image) -> MetricsReport:
    """Metrics-only comparison of a source image and a mapped result."""
    rwms_image, rwms_mean = rwms(src, dst)
    return MetricsReport(rwms_mean=rwms_mean, rwms_image=rwms_image)


def solve_application(app: str, img: Image, options: AppOptions | None = None, **kwargs) -> AppResult:
    """Dispatch by application name: decolorize | daltonize | gamut | fuse."""
    if app == "decolorize":
        return decolorize(img, options)
    if app in ("daltonize", "cvd"):
        return daltonize(img, options=options, **kwargs)
    if app in ("gamut", "gamutmap"):
        return gamut_map(img, options=options, **kwargs)
    if app == "fuse":
        return fuse(img, options=options, **kwargs)
    raise ValueError(f"unknown application {app!r}")
