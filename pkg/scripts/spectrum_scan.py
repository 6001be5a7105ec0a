"""Spectrum of the linearised operator at the stable branch, and c0 under refinement."""

import argparse

import numpy as np

from doi_onsager.equilibria import equilibrium_field, stable_branch
from doi_onsager.spectral import assemble_G_h, lower_bound_c0, spectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[7.0, 8.0, 10.0])
    ap.add_argument("--L", type=int, nargs="+", default=[12, 16, 20, 24])
    args = ap.parse_args()

    e3 = np.array([0.0, 0.0, 1.0])
    print(f"{'alpha':>6} {'L':>3} {'kernel':>6} {'top nonzero':>12} {'c0':>10}")
    for alpha in args.alphas:
        b = stable_branch(alpha)
        for L in args.L:
            h = equilibrium_field(b, e3, L)
            rep = spectrum(assemble_G_h(h, L))
            nonzero = rep.eigenvalues[: len(rep.eigenvalues) - rep.kernel_dim]
            print(f"{alpha:6.2f} {L:3d} {rep.kernel_dim:6d} {nonzero[-1]:12.6f} {lower_bound_c0(h, L):10.6f}")


if __name__ == "__main__":
    main()
