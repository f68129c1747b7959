"""Shipping acceptance suite: one test per release criterion.

Every check prints a live verdict line with the measured value and its
tolerance, so a run shows exactly which guarantees hold and by how much.
A test only fails after announcing all of its checks.  The expensive
application runs are shared between criteria through module fixtures;
the repeated runs in the determinism criterion are deliberate.
"""

import time

import numpy as np
import pytest

from conftest import random_image
from lapmap.apps import AppOptions, daltonize, decolorize, fuse, gamut_map
from lapmap.colormap import (
    ComposedMap,
    GammaMap,
    LinearMap,
    LocalMixtureMap,
    soft_region_weights,
)
from lapmap.cost import CostWeights, ProblemSpec, commutator, cost_total
from lapmap.gamut import polygon_to_halfspaces
from lapmap.graph import GraphParams, image_laplacian
from lapmap.images import cvd_simulate, cvd_transform, rgb_to_luma
from lapmap.metrics import (
    commutator_norm,
    joint_diag_residual,
    out_of_gamut_fraction,
    rwms,
    spectral_clusters,
)
from lapmap.optimize import check_gradient
from lapmap.synthetic import (
    colorful_field,
    cvd_confusable_regions,
    fusion_scene,
    metamer_regions,
    saturated_blocks,
    shrunken_chroma_triangle,
)


# ---------------------------------------------------------------------------
# live verdict lines


class _Verdict:
    """Collects named checks for one criterion and prints each verdict.

    Printing goes through pytest's capture manager so the lines reach the
    terminal even while output capturing is active.
    """

    def __init__(self, config, title):
        self._config = config
        self.title = title
        self.failures = []
        self._emit(title)

    def _emit(self, line):
        capman = self._config.pluginmanager.getplugin("capturemanager")
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print("\n" + line, end="", flush=True)
        else:
            print("\n" + line, end="", flush=True)

    def check(self, label, ok, detail):
        self._emit(f"  [{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        if not ok:
            self.failures.append(f"{label}: {detail}")

    def finish(self):
        assert not self.failures, "; ".join(self.failures)


@pytest.fixture
def verdict(request):
    def make(title):
        return _Verdict(request.config, title)

    return make


# ---------------------------------------------------------------------------
# shared application runs (one per scene, reused across criteria)


@pytest.fixture(scope="module")
def metamer_run():
    img, labels = metamer_regions(32)
    t0 = time.monotonic()
    res = decolorize(img, AppOptions())
    return img, labels, res, time.monotonic() - t0


@pytest.fixture(scope="module")
def gamut_run():
    scene = saturated_blocks(48)
    polygon = shrunken_chroma_triangle(0.55)
    t0 = time.monotonic()
    res = gamut_map(scene, polygon, AppOptions(restarts=1))
    return scene, polygon, res, time.monotonic() - t0


@pytest.fixture(scope="module")
def cvd_run():
    img, labels = cvd_confusable_regions("deutan", size=32)
    res = daltonize(img, kind="deutan")
    return img, labels, res


@pytest.fixture(scope="module")
def fusion_run():
    scene, mask = fusion_scene(size=32)
    res = fuse(scene)
    return scene, mask, res


@pytest.fixture(scope="module")
def perf_run():
    img = colorful_field(64)
    t0 = time.monotonic()
    res = decolorize(img, AppOptions())
    return res, time.monotonic() - t0


def _region_contrast(img, labels):
    """Euclidean distance between the two regions' mean colors."""
    px = img.pixels
    return float(
        np.linalg.norm(px[labels == 0].mean(axis=0) - px[labels == 1].mean(axis=0))
    )


def _luma_laplacian(res):
    """Laplacian of the luma projection on the same graph as the run."""
    lap, support = image_laplacian(rgb_to_luma(res.graph_image), GraphParams())
    assert support.dim == res.spec.support.dim
    return lap


# ---------------------------------------------------------------------------
# criterion 1: analytic gradients match central differences


def _instance_family(kind, img):
    if kind == "gamma":
        return GammaMap(3, 1)
    if kind == "linear":
        return LinearMap(3, 2)
    if kind == "mixture":
        return LocalMixtureMap(GammaMap(3, 1), soft_region_weights(img, 2))
    return ComposedMap(GammaMap(3, 3), post=cvd_transform("deutan").matrix)


_WEIGHT_CONFIGS = [
    ("structure", CostWeights(mu0=(1.0,), mu1=(0.0,), mu2=0.0, mu3=0.0)),
    ("edges", CostWeights(mu0=(0.0,), mu1=(1.0,), mu2=0.0, mu3=0.0)),
    ("regularizer", CostWeights(mu0=(0.0,), mu1=(0.0,), mu2=1.0, mu3=0.0)),
    ("anchors", CostWeights(mu0=(0.0,), mu1=(0.0,), mu2=0.0, mu3=1.0)),
    ("full", CostWeights(mu0=(1.0,), mu1=(1.0,), mu2=0.5, mu3=0.5)),
]


def test_gradient_correctness(verdict):
    v = verdict("criterion 1: analytic gradients vs central differences")
    kinds = ("gamma", "linear", "mixture", "composed")
    t0 = time.monotonic()
    worst = 0.0
    n_instances = 0
    for seed in range(5):
        for k, kind in enumerate(kinds):
            img = random_image(12, 12, 3, seed=10 * seed + k)
            lap, support = image_laplacian(img, GraphParams())
            fam = _instance_family(kind, img)
            rng = np.random.default_rng(1000 + 10 * seed + k)
            theta = fam.init(rng) + rng.uniform(-0.1, 0.1, fam.n_params)
            anchors = (
                np.stack([np.zeros(fam.d_in), np.ones(fam.d_in)]),
                np.stack([np.zeros(fam.d_out), np.ones(fam.d_out)]),
            )
            for _, weights in _WEIGHT_CONFIGS:
                spec = ProblemSpec(
                    support=support,
                    source_colors=img.pixels[support.vertices],
                    family=fam,
                    weights=weights,
                    targets=(lap,),
                    posts=(None,),
                    sigma_r=1.0,
                    theta0=np.zeros(fam.n_params),
                    anchors=anchors,
                )
                worst = max(worst, check_gradient(spec, theta, h=1e-5))
            n_instances += 1
    elapsed = time.monotonic() - t0
    v.check(
        "gradient error",
        worst < 1e-4,
        f"max rel err {worst:.2e} < 1e-4 "
        f"({n_instances} instances x {len(_WEIGHT_CONFIGS)} weight configs, h=1e-5)",
    )
    v.check("runtime", elapsed < 60.0, f"{elapsed:.1f}s < 60s")
    v.finish()


# ---------------------------------------------------------------------------
# criterion 2: metamer regions survive decolorization


def test_metamer_recovery(metamer_run, verdict):
    img, labels, res, elapsed = metamer_run
    v = verdict("criterion 2: metamer recovery under decolorization")

    luma_contrast = _region_contrast(rgb_to_luma(img), labels)
    v.check(
        "luma baseline merges regions",
        luma_contrast < 0.02,
        f"between-region contrast {luma_contrast:.5f} < 0.02",
    )

    out_contrast = _region_contrast(res.output, labels)
    v.check(
        "optimized map separates regions",
        out_contrast > 0.15,
        f"between-region mean-gray difference {out_contrast:.3f} > 0.15",
    )

    src = res.spec.targets[0]
    luma_comm = commutator_norm(src, _luma_laplacian(res), normalize=True)
    opt_comm = res.metrics.commutator_norm_normalized
    v.check(
        "commutator at most half of luma's",
        opt_comm <= 0.5 * luma_comm,
        f"normalized commutator {opt_comm:.2e} <= 0.5 * {luma_comm:.2e}",
    )

    luma_rwms = res.metrics.baseline["luma_rwms_mean"]
    v.check(
        "rwms beats luma baseline",
        res.metrics.rwms_mean < luma_rwms,
        f"rwms {res.metrics.rwms_mean:.2f} < luma {luma_rwms:.2f}",
    )
    v.check("runtime", elapsed < 120.0, f"{elapsed:.1f}s < 120s")
    v.finish()


# ---------------------------------------------------------------------------
# criterion 3: trivial exactness and Laplacian invariants


def test_exactness_and_invariants(verdict):
    v = verdict("criterion 3: trivial exactness and Laplacian invariants")

    img = random_image(8, 8, 3, seed=5, lo=0.1, hi=0.9)
    lap, support = image_laplacian(img, GraphParams())
    fam = GammaMap(3, 3)
    theta_id = fam.identity_theta()
    spec = ProblemSpec(
        support=support,
        source_colors=img.pixels[support.vertices],
        family=fam,
        weights=CostWeights(mu0=(1.0,), mu1=(1.0,), mu2=1.0, mu3=0.0),
        targets=(lap,),
        posts=(None,),
        sigma_r=1.0,
        theta0=theta_id,
    )
    c_id = cost_total(theta_id, spec)
    v.check(
        "identity map on own image",
        c_id == 0.0,
        f"cost_total {c_id!r} == 0.0 exactly",
    )

    rwms_img, rwms_mean = rwms(img, img)
    self_zero = rwms_mean == 0.0 and bool(np.all(rwms_img.data == 0.0))
    v.check("rwms of image with itself", self_zero, f"mean {rwms_mean!r} == 0.0 exactly")

    self_comm = commutator(lap, lap)
    v.check(
        "self commutator vanishes",
        bool(np.all(self_comm == 0.0)),
        f"max |entry| {float(np.abs(self_comm).max())!r} == 0.0 exactly",
    )

    worst_row = 0.0
    worst_eig = 0.0
    for h, w, seed in [(7, 9, 1), (20, 20, 2), (14, 5, 3)]:
        inst = random_image(h, w, 3, seed=seed)
        ilap, _ = image_laplacian(inst, GraphParams())
        dense = ilap.to_dense()
        worst_row = max(worst_row, float(np.abs(dense.sum(axis=1)).max()))
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(dense).min()))
    v.check(
        "row sums vanish",
        worst_row < 1e-12,
        f"max |row sum| {worst_row:.2e} < 1e-12 (3 instances up to 20x20)",
    )
    v.check(
        "positive semidefinite",
        worst_eig >= -1e-10,
        f"min eigenvalue {worst_eig:.2e} >= -1e-10",
    )
    v.finish()


# ---------------------------------------------------------------------------
# criterion 4: monotone descent and bitwise determinism


def _max_round_increase(trace):
    costs = np.asarray(trace.costs)
    rounds = np.asarray(trace.rounds)
    same = rounds[1:] == rounds[:-1]
    if not same.any():
        return 0.0
    return float((costs[1:] - costs[:-1])[same].max())


def test_descent_and_determinism(
    metamer_run, gamut_run, cvd_run, fusion_run, perf_run, verdict
):
    v = verdict("criterion 4: monotone descent and determinism")
    runs = {
        "decolorize": metamer_run[2],
        "gamut": gamut_run[2],
        "daltonize": cvd_run[2],
        "fuse": fusion_run[2],
        "decolorize-64": perf_run[0],
    }
    worst = max(_max_round_increase(res.trace) for res in runs.values())
    v.check(
        "costs non-increasing within penalty rounds",
        worst <= 1e-12,
        f"max within-round increase {worst:.2e} across {len(runs)} runs",
    )

    img = metamer_run[0]
    rerun = decolorize(img, AppOptions())
    same = rerun.theta.tobytes() == runs["decolorize"].theta.tobytes() and np.array_equal(
        np.asarray(rerun.trace.costs), np.asarray(runs["decolorize"].trace.costs)
    )
    v.check(
        "identical seeds reproduce decolorize",
        same,
        "theta bytes and cost trace identical across reruns",
    )

    scene, polygon = gamut_run[0], gamut_run[1]
    rerun_g = gamut_map(scene, polygon, AppOptions(restarts=1))
    same_g = rerun_g.theta.tobytes() == runs["gamut"].theta.tobytes() and np.array_equal(
        np.asarray(rerun_g.trace.costs), np.asarray(runs["gamut"].trace.costs)
    )
    v.check(
        "identical seeds reproduce gamut mapping",
        same_g,
        "theta bytes and cost trace identical across reruns",
    )
    v.finish()


# ---------------------------------------------------------------------------
# criterion 5: shared eigenstructure and cluster preservation


def test_joint_structure(metamer_run, verdict):
    _, _, res, _ = metamer_run
    v = verdict("criterion 5: eigenstructure and clusters on the metamer scene")

    src = res.spec.targets[0]
    luma_jd = joint_diag_residual(src, _luma_laplacian(res), 10)
    opt_jd = res.metrics.jd_residual
    v.check(
        "joint diagonalization at most half of luma's",
        opt_jd <= 0.5 * luma_jd,
        f"residual {opt_jd:.2e} <= 0.5 * {luma_jd:.2e} (k=10)",
    )

    mapped_lap = res.spec.mapped_laplacian(res.theta, pair=0)
    lx = spectral_clusters(src, 2)
    ly = spectral_clusters(mapped_lap, 2)
    agree = max(float((lx == ly).mean()), float((lx == 1 - ly).mean()))
    v.check(
        "spectral clusters preserved",
        agree >= 0.9,
        f"best-permutation agreement {agree:.3f} >= 0.9 (k=2)",
    )
    v.finish()


# ---------------------------------------------------------------------------
# criterion 6: hard in-gamut guarantee with bounded fidelity loss


def test_gamut_mapping(gamut_run, verdict):
    _, polygon, res, elapsed = gamut_run
    v = verdict("criterion 6: gamut mapping")

    oog_in = res.metrics.baseline["oog_fraction_input"]
    v.check(
        "scene stresses the gamut",
        oog_in >= 0.30,
        f"input out-of-gamut fraction {oog_in:.3f} >= 0.30",
    )

    oog_out = res.metrics.out_of_gamut_fraction
    recheck = out_of_gamut_fraction(res.output, polygon_to_halfspaces(polygon))
    v.check(
        "output exactly in gamut",
        oog_out == 0.0 and recheck == 0.0,
        f"out-of-gamut fraction {oog_out!r} (recomputed {recheck!r}) == 0.0",
    )

    clip_rwms = res.metrics.baseline["clip_rwms_mean"]
    v.check(
        "fidelity within 1.25x of naive clipping",
        res.metrics.rwms_mean <= 1.25 * clip_rwms,
        f"rwms {res.metrics.rwms_mean:.2f} <= 1.25 * {clip_rwms:.2f}",
    )
    v.check("runtime", elapsed < 120.0, f"{elapsed:.1f}s < 120s")
    v.finish()


# ---------------------------------------------------------------------------
# criterion 7: recoloring for a dichromat observer


def test_cvd_recoloring(cvd_run, verdict):
    img, labels, res = cvd_run
    v = verdict("criterion 7: recoloring for a deutan observer")
    transform = cvd_transform("deutan")

    sim_in = _region_contrast(cvd_simulate(img, transform), labels)
    v.check(
        "original is confusable",
        sim_in < 0.02,
        f"simulated-view contrast {sim_in:.5f} < 0.02",
    )

    sim_out = _region_contrast(cvd_simulate(res.output, transform), labels)
    v.check(
        "recolored output is distinguishable",
        sim_out > 0.1,
        f"simulated-view contrast {sim_out:.3f} > 0.1",
    )

    # Control: randomly attenuate each pixel's chroma about its gray axis.
    rng = np.random.default_rng(0)
    gray = np.repeat(rgb_to_luma(img).pixels, 3, axis=1)
    u = rng.uniform(0.0, 1.0, size=(len(gray), 1))
    control = type(img)(
        (gray + u * (img.pixels - gray)).reshape(img.height, img.width, 3)
    )
    _, control_rwms = rwms(img, control)
    v.check(
        "fidelity beats chroma-randomized control",
        res.metrics.rwms_mean < control_rwms,
        f"rwms {res.metrics.rwms_mean:.2f} < control {control_rwms:.2f}",
    )
    v.finish()


# ---------------------------------------------------------------------------
# criterion 8: multichannel fusion surfaces hidden structure


def test_fusion(fusion_run, verdict):
    _, mask, res = fusion_run
    v = verdict("criterion 8: fusing a 4-channel scene into RGB")

    contrast = _region_contrast(res.output, mask)
    v.check(
        "hidden channel structure surfaces",
        contrast > 0.1,
        f"between-region contrast {contrast:.3f} > 0.1",
    )

    xc, yc = res.spec.anchors
    resid = np.abs(res.family.apply(res.theta, xc) - yc)
    v.check(
        "black anchor within tolerance",
        float(resid[0].max()) <= 0.05,
        f"max |residual| {resid[0].max():.4f} <= 0.05 per channel",
    )
    v.check(
        "white anchor within tolerance",
        float(resid[1].max()) <= 0.05,
        f"max |residual| {resid[1].max():.4f} <= 0.05 per channel",
    )
    v.finish()


# ---------------------------------------------------------------------------
# criterion 9: performance envelope


def test_performance_envelope(perf_run, verdict):
    res, elapsed = perf_run
    v = verdict("criterion 9: 64x64 all-pixel decolorization envelope")
    v.check(
        "graph covers every pixel",
        res.spec.support.dim == 64 * 64,
        f"{res.spec.support.dim} vertices == 4096",
    )
    n_iters = len(res.trace.costs) - 1
    v.check(
        "iteration budget respected",
        n_iters <= 500,
        f"{n_iters} iterations <= 500",
    )
    v.check("runtime", elapsed < 60.0, f"{elapsed:.1f}s < 60s")
    v.finish()
