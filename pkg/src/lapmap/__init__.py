"""Structure-preserving color transformations via Laplacian commutators.

The package fits parametric colormaps by making the Laplacian of the
transformed image commute (as nearly as possible) with the Laplacian of
the source image, so that the two graphs share eigenstructure and the
transformation preserves image structure rather than raw colors.
"""

from .apps import (
    AppOptions,
    AppResult,
    daltonize,
    decolorize,
    fuse,
    gamut_map,
    solve_application,
)
from .colormap import (
    ColormapParams,
    ComposedMap,
    GammaMap,
    LinearMap,
    LocalMixtureMap,
    init_params,
    project_params,
    soft_region_weights,
)
from .cost import (
    CostWeights,
    ProblemSpec,
    commutator,
    cost_terms,
    cost_total,
    grad_theta_w,
    grad_total,
    grad_wij,
    off_diagonal_energy,
)
from .graph import (
    EdgeSupport,
    GraphParams,
    SparseSymMatrix,
    build_adjacency,
    build_laplacian,
    build_support,
    dump_coo,
    image_laplacian,
    select_vertices,
)
from .images import (
    Image,
    cvd_simulate,
    cvd_transform,
    load_image,
    load_lmch,
    normalize_channels,
    resize_longside,
    rgb_to_luma,
    rgb_to_xy_chroma,
    save_image,
    save_lmch,
)
from .metrics import (
    MetricsReport,
    commutator_norm,
    joint_diag_residual,
    out_of_gamut_fraction,
    rwms,
    spectral_clusters,
)
from .optimize import (
    NonFiniteCostError,
    SolveOptions,
    SolveTrace,
    best_of_restarts,
    check_gradient,
    minimize,
)

__version__ = "0.1.0"
