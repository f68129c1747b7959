"""Sweep the finite-difference step for every colormap family.

Prints a table of max relative gradient errors per family and step size,
on a small random instance with all cost terms active.  Errors should
dip to ~1e-8 around h=1e-5 and grow again for tiny steps as roundoff
takes over; a column stuck at O(1) would mean a broken gradient.
"""

import argparse
import time

import numpy as np

from lapmap.colormap import (
    ComposedMap,
    GammaMap,
    LinearMap,
    LocalMixtureMap,
    soft_region_weights,
)
from lapmap.cost import CostWeights, ProblemSpec
from lapmap.graph import GraphParams, image_laplacian
from lapmap.images import Image, cvd_transform
from lapmap.optimize import check_gradient


def make_spec(kind: str, seed: int, size: int) -> tuple[ProblemSpec, np.ndarray]:
    rng = np.random.default_rng(seed)
    img = Image(rng.uniform(0.05, 0.95, size=(size, size, 3)))
    lap, support = image_laplacian(img, GraphParams())
    if kind == "gamma":
        fam = GammaMap(3, 1)
    elif kind == "linear":
        fam = LinearMap(3, 2)
    elif kind == "mixture":
        fam = LocalMixtureMap(GammaMap(3, 1), soft_region_weights(img, 2))
    elif kind == "composed":
        fam = ComposedMap(GammaMap(3, 3), post=cvd_transform("deutan").matrix)
    else:
        raise ValueError(f"unknown family {kind!r}")
    anchors = (
        np.stack([np.zeros(fam.d_in), np.ones(fam.d_in)]),
        np.stack([np.zeros(fam.d_out), np.ones(fam.d_out)]),
    )
    spec = ProblemSpec(
        support=support,
        source_colors=img.pixels[support.vertices],
        family=fam,
        weights=CostWeights(mu0=(1.0,), mu1=(1.0,), mu2=0.5, mu3=0.5),
        targets=(lap,),
        posts=(None,),
        sigma_r=1.0,
        theta0=np.zeros(fam.n_params),
        anchors=anchors,
    )
    theta = fam.init(rng) + rng.uniform(-0.1, 0.1, fam.n_params)
    return spec, theta


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=12, help="image side length")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    steps = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
    kinds = ["gamma", "linear", "mixture", "composed"]
    print(f"{'family':<10}" + "".join(f"h={h:<9.0e}" for h in steps))
    t0 = time.monotonic()
    for kind in kinds:
        spec, theta = make_spec(kind, args.seed, args.size)
        errs = [check_gradient(spec, theta, h=h) for h in steps]
        print(f"{kind:<10}" + "".join(f"{e:<11.2e}" for e in errs))
    print(f"done in {time.monotonic() - t0:.1f}s")


if __name__ == "__main__":
    main()
