"""Credibility interval diagnostic for one function and target point.

Prints the band table and writes the per-draw hit rates to an .npz file.

    python scripts/run_cid.py --function g2 --xt-over-pi 2.0 --seed 0
"""

import argparse
import math
import time

import numpy as np

from polybma.diagnostics import CidConfig, cid_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--function", default="g2", choices=["g1", "g2"])
    ap.add_argument("--xt-over-pi", type=float, default=1.2, help="target point in units of 1/pi")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--datasets", type=int, default=100)
    ap.add_argument("--draws", type=int, default=20)
    ap.add_argument("--mode", default="datum", choices=["datum", "self"])
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--save", help="write D arrays to this .npz")
    args = ap.parse_args()

    cfg = CidConfig(function_kind=args.function, x_t=args.xt_over_pi / math.pi,
                    n_datasets=args.datasets, n_validation=args.draws,
                    master_seed=args.seed, validation_mode=args.mode)
    t0 = time.perf_counter()
    r = cid_run(cfg, workers=args.workers)
    print(f"# {args.function} x_t={args.xt_over_pi}/pi mode={args.mode} seed={args.seed} "
          f"({time.perf_counter() - t0:.0f}s)")
    np.set_printoptions(precision=3, suppress=True, linewidth=140)
    print("alpha   ", r.alphas)
    for lab in r.labels:
        b = r.bands[lab]
        print(f"{lab:<6} lo", b.lo)
        print(f"{'':<6} md", b.median)
        print(f"{'':<6} hi", b.hi, f" mean|D-a|={r.mean_abs_deviation(lab):.3f}")
    if args.save:
        np.savez(args.save, alphas=r.alphas, validation=r.validation_data,
                 **{lab: r.D[lab] for lab in r.labels})


if __name__ == "__main__":
    main()
