"""Distribution of pr(M|D) over many pseudodata seeds."""

import argparse

import numpy as np

from polybma.evidence import model_weights
from polybma.toy_functions import generate_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--function", default="g2", choices=["g1", "g2"])
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--m-max", type=int, default=6)
    args = ap.parse_args()

    W = np.array([model_weights(generate_dataset(args.function, seed=s), args.m_max).weights
                  for s in range(args.first_seed, args.first_seed + args.seeds)])
    np.set_printoptions(precision=3, suppress=True, linewidth=140)
    print("M           ", np.arange(args.m_max + 1))
    print("mean weight ", W.mean(axis=0))
    print("median      ", np.median(W, axis=0))
    print("argmax count", np.bincount(W.argmax(axis=1), minlength=args.m_max + 1))
    if args.m_max >= 6:
        ratio = W[:, 6] / W[:, 5]
        print(f"pr(6|D)/pr(5|D) in [0.5, 2]: {np.mean((ratio >= 0.5) & (ratio <= 2)):.0%}")


if __name__ == "__main__":
    main()
