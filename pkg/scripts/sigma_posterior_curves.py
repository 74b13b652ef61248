"""sigma_a posterior for each degree on one dataset, with tail slopes.

The large-sigma_a slope only reaches its asymptote once sigma_a^-2 drops
well below the smallest eigenvalue of A, so slopes are reported for two
windows.
"""

import argparse

import numpy as np

from polybma.linear_model import build_design
from polybma.sigma_marginal import SigmaPrior, sigma_posterior_unnorm_log
from polybma.toy_functions import generate_dataset


def slope(ds, prior, lo, hi):
    s = np.geomspace(lo, hi, 81)
    return np.polyfit(np.log(s), sigma_posterior_unnorm_log(ds, prior, s), 1)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--function", default="g2", choices=["g1", "g2"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--nu0", type=float, default=1.5)
    ap.add_argument("--tau0", type=float, default=1.5)
    ap.add_argument("--csv", help="write the curves here")
    args = ap.parse_args()

    prior = SigmaPrior("invchi2", args.nu0, args.tau0)
    data = generate_dataset(args.function, seed=args.seed)
    s = np.geomspace(0.05, 1e4, 200)
    curves = {}
    print(" M  mode     min eig     slope[1e2,1e4]  slope[1e7,1e9]  asymptote")
    for M in range(7):
        ds = build_design(data, M)
        lp = sigma_posterior_unnorm_log(ds, prior, s)
        curves[M] = lp - lp.max()
        print(f"{M:2d}  {s[np.argmax(lp)]:7.3f}  {ds.eigvals.min():10.3e}  "
              f"{slope(ds, prior, 1e2, 1e4):14.3f}  {slope(ds, prior, 1e7, 1e9):14.3f}  "
              f"{-(M + 2 + args.nu0):9.1f}")
    if args.csv:
        cols = np.column_stack([s] + [curves[M] for M in range(7)])
        header = "sigma_a," + ",".join(f"log_post_M{M}" for M in range(7))
        np.savetxt(args.csv, cols, delimiter=",", header=header, comments="")


if __name__ == "__main__":
    main()
