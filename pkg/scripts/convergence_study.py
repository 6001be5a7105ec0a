"""Kinetic stress versus Ericksen-Leslie stress as the Deborah number shrinks."""

import argparse

from doi_onsager.kinetic import run_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=8.0)
    ap.add_argument("--L", type=int, default=16)
    ap.add_argument("--t-final", type=float, default=1.0)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    args = ap.parse_args()

    s = run_convergence(alpha=args.alpha, L=args.L, t_final=args.t_final, eps_list=args.eps)
    print(f"{'eps':>8} {'sup stress err':>15} {'director err':>13}")
    for r in s.runs:
        print(f"{r.eps:8.4f} {r.sup_err:15.6e} {r.director_err:13.6e}")
    print(f"slopes: stress {s.fitted_slope:.4f}, director {s.director_slope:.4f}")


if __name__ == "__main__":
    main()
