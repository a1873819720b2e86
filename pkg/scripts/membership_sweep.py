#!/usr/bin/env python3
"""Sweep annulus-to-bulk ratio verdicts across the dispersion band.

For a 1-d window, runs the ratio test for a grid of plane-wave energies
(inside the band [0, 8]) and a few growing cosh profiles (below the band)
and prints verdicts next to the distance of each candidate energy from
the window spectrum.

Usage: python scripts/membership_sweep.py [R]
"""

import sys

import numpy as np

from dflab.graphs import ModelSpec, build_model
from dflab.metrics import jump_size, scaled_euclidean
from dflab.spectral import (hyperbolic_wave, plane_wave, ratio_shell_geometry,
                            shnol_ratio, spectrum)


def main() -> int:
    R = int(sys.argv[1]) if len(sys.argv) > 1 else 400
    G = build_model(ModelSpec(kind="lattice", d=1, R=R))
    rho = scaled_euclidean(G, 1 / np.sqrt(2))
    s = a = jump_size(G, rho)
    xs = G.coords[:, 0]
    eigs = spectrum(G)
    shells = [np.nonzero(np.abs(xs) <= 5 * n)[0] for n in range(1, R // 5 + 1)]
    geom = ratio_shell_geometry(G, rho, shells, a, s)

    print(f"{'candidate':>22} {'lambda':>10} {'verdict':>14} {'dist':>9} "
          f"{'fit limit':>10}")
    for k in range(1, 11):
        theta = k * np.pi / 11
        u, lam = plane_wave(G, theta)
        res = shnol_ratio(G, None, u, lam, rho, shells, a, s, eigs=eigs,
                          geometry=geom)
        print(f"{'plane theta=pi*%d/11' % k:>22} {lam:10.5f} "
              f"{res.verdict:>14} {res.spectrum_dist:9.2e} "
              f"{res.fit_limit:10.3f}")
    for mu in (0.2, 0.3, 0.4):
        u, lam = hyperbolic_wave(G, mu)
        res = shnol_ratio(G, None, u, lam, rho, shells, a, s, eigs=eigs,
                          geometry=geom)
        print(f"{'cosh mu=%.1f' % mu:>22} {lam:10.5f} {res.verdict:>14} "
              f"{res.spectrum_dist:9.2e} {res.fit_limit:10.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
