"""Regenerate the 5% CUSUM-of-squares c0 line by simulation.

c0(n) is the 95% quantile of max_r |s_r - r/n| where s_r is the cumulated
share of n i.i.d. squared N(0,1) recursive residuals.  Prints JSON suitable
for the ``cusumsq_c0`` block of ``critical_values.json``.
"""
import json

import numpy as np

GRID = list(range(10, 31)) + list(range(35, 101, 5)) + list(range(110, 201, 10))
REPS = 200_000
CHUNK = 20_000


def c0(n, rng):
    stats = []
    centre = np.arange(1, n + 1) / n
    for _ in range(REPS // CHUNK):
        w2 = rng.standard_normal((CHUNK, n)) ** 2
        s = np.cumsum(w2, axis=1)
        s /= s[:, -1:]
        stats.append(np.max(np.abs(s - centre), axis=1))
    return float(np.quantile(np.concatenate(stats), 0.95))


def main():
    rng = np.random.default_rng(19690101)
    table = {str(n): round(c0(n, rng), 4) for n in GRID}
    print(json.dumps(table))


if __name__ == "__main__":
    main()
