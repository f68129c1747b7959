import hypothesis
import numpy as np
import pytest

from lapmap import CostWeights, GammaMap, GraphParams, ProblemSpec, image_laplacian
from lapmap.images import Image

hypothesis.settings.register_profile(
    "suite", max_examples=25, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("suite")


def random_image(height, width, channels, seed=0, lo=0.05, hi=0.95):
    rng = np.random.default_rng(seed)
    return Image(rng.uniform(lo, hi, size=(height, width, channels)))


def small_spec(
    seed=0,
    size=8,
    family=None,
    weights=None,
    with_anchors=False,
    sigma_r=1.0,
):
    """A compact, fully wired ProblemSpec on a random image."""
    img = random_image(size, size, 3, seed=seed)
    lap, support = image_laplacian(img, GraphParams(sigma_r=sigma_r))
    fam = family or GammaMap(3, 1)
    anchors = None
    if with_anchors:
        anchors = (
            np.array([np.zeros(fam.d_in), np.ones(fam.d_in)]),
            np.array([np.zeros(fam.d_out), np.ones(fam.d_out)]),
        )
    w = weights or CostWeights(mu0=(1.0,), mu1=(1.0,), mu2=1.0)
    return ProblemSpec(
        support=support,
        source_colors=img.pixels[support.vertices],
        family=fam,
        weights=w,
        targets=(lap,),
        posts=(None,),
        sigma_r=sigma_r,
        theta0=np.zeros(fam.n_params),
        anchors=anchors,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
