"""Leslie coefficients, tumbling parameter and positivity margins across alpha."""

import argparse
from pathlib import Path

import numpy as np

from doi_onsager.equilibria import alpha_star, stable_branch
from doi_onsager.io import write_csv
from doi_onsager.leslie import leslie_coeffs

FIELDS = ["alpha", "eta", "S2", "S4", "lam", "alpha1", "alpha2", "alpha3", "alpha4", "alpha5", "alpha6", "gamma1"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha-max", type=float, default=25.0)
    ap.add_argument("--steps", type=int, default=60)
    ap.add_argument("--out", default="out/scripts")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    a0 = alpha_star()[0] + 1e-3
    rows = []
    for alpha in np.linspace(a0, args.alpha_max, args.steps):
        ls = leslie_coeffs(stable_branch(alpha).eta, alpha)
        rows.append([getattr(ls, k) for k in FIELDS] + [ls.parodi_residual])
    write_csv(out / "leslie_sweep.csv", FIELDS + ["parodi_residual"], rows)
    lam = np.array([r[4] for r in rows])
    print(f"lambda in [{lam.min():.6f}, {lam.max():.6f}] over alpha in [{a0:.4f}, {args.alpha_max}]")
    print(f"wrote {out / 'leslie_sweep.csv'}")


if __name__ == "__main__":
    main()
