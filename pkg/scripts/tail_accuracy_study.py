#!/usr/bin/env python3
"""Spot-check the chi-square tail evaluator against mpmath.

Samples (statistic, df) pairs across the moderate and extreme-tail
regimes and prints the worst relative error per regime.  mpmath at 50
digits is the reference.

Usage:
    python3 scripts/tail_accuracy_study.py
"""

import numpy as np

from youthdss.stats import chi_square_sf


def main() -> None:
    import mpmath as mp

    mp.mp.dps = 50
    rng = np.random.default_rng(0)
    regimes = {
        "bulk (p in ~[0.01, 1])": [
            (float(rng.uniform(0, 3 * df)), df)
            for df in rng.integers(1, 100, size=200)
        ],
        # keep p above ~1e-250: beyond ~1e-308 doubles cannot hold it at all
        "deep tail (p down to ~1e-250)": [
            (float(rng.uniform(10 * df, min(100 * df + 1000, 1100))), df)
            for df in rng.integers(1, 30, size=200)
        ],
        "high df (central limit regime)": [
            (float(rng.uniform(0.5 * df, 1.5 * df)), df)
            for df in rng.integers(500, 5000, size=100)
        ],
    }
    for name, pairs in regimes.items():
        worst = 0.0
        worst_pair = None
        for x, df in pairs:
            ours = chi_square_sf(x, int(df))
            truth = mp.gammainc(mp.mpf(int(df)) / 2, mp.mpf(x) / 2, mp.inf, regularized=True)
            if truth == 0:
                continue
            rel = abs(mp.mpf(ours) - truth) / truth
            if rel > worst:
                worst, worst_pair = float(rel), (round(x, 2), int(df))
        print(f"{name:35s} worst rel err {worst:.3e} at {worst_pair}")


if __name__ == "__main__":
    main()
