"""A rare catastrophe dominates the tail order until the tail is cut off.

Compares a loss distribution with mostly small losses plus one extreme
sample against one concentrated at moderate losses, before and after
truncating both at their 95% quantile.
"""

import argparse

import numpy as np

from distgame.kde import EPANECHNIKOV, KdeModel, SampleSet
from distgame.preference import compare, moment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--catastrophe", type=float, default=10.0)
    args = ap.parse_args()

    rare = KdeModel(EPANECHNIKOV, SampleSet(list(1.0 + 0.02 * np.arange(40)) + [args.catastrophe]), args.h)
    steady = KdeModel(EPANECHNIKOV, SampleSet(list(4.8 + 0.02 * np.arange(20))), args.h)
    print(f"means: rare-catastrophe {moment(rare, 1):.3f}, concentrated {moment(steady, 1):.3f}")
    print(f"full distributions: {compare(rare, steady).outcome}")

    t1, t2 = rare.truncate(args.alpha), steady.truncate(args.alpha)
    print(f"cutoffs: {t1.cutoff:.3f} vs {t2.cutoff:.3f}")
    print(f"truncated at the {1 - args.alpha:.0%} quantile: {compare(t1, t2).outcome}")


if __name__ == "__main__":
    main()
