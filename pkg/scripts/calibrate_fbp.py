"""Calibrate the FBP constant on an analytic Gaussian sinogram.

Fits c in least squares so that c * backproject(ramp_filter(R g)) matches g,
where g is an isotropic Gaussian and R g is its exact line-integral profile.
Run once; the printed value is stored as ``streakct.transform.C_FBP``.
"""

import argparse
import math

import numpy as np

from streakct.transform import ImageGrid, ImageSpec, Sinogram, SinogramGrid, backproject, ramp_filter


def calibrate(n=512, n_phi=720, r=1.0, sigma=0.2):
    spec = ImageSpec(n, r)
    grid = SinogramGrid.covering(r, n_phi, spec.pixel)
    row = sigma * math.sqrt(2 * math.pi) * np.exp(-grid.s ** 2 / (2 * sigma ** 2))
    sino = Sinogram(grid, np.tile(row, (n_phi, 1)))
    target = ImageGrid.from_function(spec, lambda x, y: np.exp(-(x * x + y * y) / (2 * sigma ** 2)))
    raw = backproject(ramp_filter(sino), spec).values.ravel()
    return float(raw @ target.values.ravel() / (raw @ raw))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--n-phi", type=int, default=720)
    ap.add_argument("--sigma", type=float, default=0.2)
    args = ap.parse_args()
    c = calibrate(args.n, args.n_phi, sigma=args.sigma)
    print(f"C_FBP = {c!r}  (1/(2 pi) = {1 / (2 * math.pi)!r})")


if __name__ == "__main__":
    main()
