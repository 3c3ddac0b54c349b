"""Parametric bootstrap 95% intervals at a reference parameter set."""
import argparse
from pathlib import Path

from bvpa.data import atomic_write_text
from bvpa.model import XI1, XI2, XI3, XI4
from bvpa.study import bootstrap_ci

SETS = {"xi1": XI1, "xi2": XI2, "xi3": XI3, "xi4": XI4}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument("--set", choices=sorted(SETS), default="xi1")
    ap.add_argument("--n", type=int, default=450)
    ap.add_argument("--variant", default="mod1")
    ap.add_argument("--resamples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--parallelism", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/bootstrap.csv"))
    args = ap.parse_args()

    ci = bootstrap_ci(SETS[args.set], args.n, args.variant, args.resamples, args.seed,
                      parallelism=args.parallelism)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(args.out, ci.to_csv())
    for name, lo, hi in ci.csv_rows():
        print(f"{name:>7} [{lo:.4f}, {hi:.4f}]")
    print(f"failed refits: {ci.failures} of {ci.resamples}")


if __name__ == "__main__":
    main()
