"""Small deterministic datasets shared by the oracle-backed tests."""
from __future__ import annotations

import numpy as np


def pseudo(n: int, a: int = 7919, c: int = 17, m: int = 10007) -> list[float]:
    """Deterministic values in (-0.5, 0.5) from a modular sequence."""
    return [((a * t + c) % m) / m - 0.5 for t in range(1, n + 1)]


def walk(steps) -> list[float]:
    return list(np.cumsum(steps))


OLS5_X = [1.0, 2.0, 3.0, 4.0, 5.0]
OLS5_Y = [2.0, 1.0, 4.0, 3.0, 6.0]

ADL12_X = [1.0, 1.5, 1.2, 2.0, 2.4, 2.1, 3.0, 3.3, 3.1, 3.9, 4.2, 4.0]
ADL12_Y = [2.0, 2.3, 2.6, 2.5, 3.4, 3.6, 3.5, 4.4, 4.9, 4.6, 5.5, 5.9]

ADF15 = [10.0, 10.4, 10.1, 10.9, 11.3, 10.8, 11.6, 11.2, 12.0, 12.5, 12.1, 12.9, 12.4, 13.1, 13.7]

KPSS10 = [1.0, 2.0, 1.0, 3.0, 2.0, 4.0, 3.0, 5.0, 4.0, 6.0]

DESC5 = [1.0, 2.0, 4.0, 8.0, 16.0]

EG30_X = walk(pseudo(30, 7919, 3))
EG30_Y = [1.0 + 2.0 * x + 0.3 * e for x, e in zip(EG30_X, pseudo(30, 4001, 11))]

GH20_X = walk([0.5 + v for v in pseudo(20, 3571, 5)])
GH20_BREAK = 8
GH20_SHIFT = 3.0
GH20_Y_EXACT = [1.0 + 0.5 * x + (GH20_SHIFT if t >= GH20_BREAK else 0.0) for t, x in enumerate(GH20_X)]
GH20_Y = [y + 0.2 * e for y, e in zip(GH20_Y_EXACT, pseudo(20, 2003, 7))]

PZ15 = [0.3, -0.1, 0.4, 0.2, -0.5, -0.2, 0.1, 0.6, 0.3, -0.4, -0.1, 0.2, 0.5, -0.3, 0.0]

GHP_N = 120
GHP_X = walk(pseudo(GHP_N, 7919, 29))
GHP_Y = [1.0 + x + (2.0 if t >= 50 else 0.0) + 0.8 * e for t, (x, e) in enumerate(zip(GHP_X, pseudo(GHP_N, 6007, 13)))]

_j1 = walk(pseudo(40, 7919, 41))
_j2 = [a + b for a, b in zip(_j1, pseudo(40, 5003, 2))]
_j3 = walk(pseudo(40, 3001, 9))
JOH40 = [list(r) for r in zip(_j1, _j2, _j3)]

VAR13 = [list(r) for r in zip(ADL12_Y + [6.1], ADL12_X + [4.6])]

GR60_CAUSE = walk(pseudo(60, 7919, 61))
GR60_EFFECT = [0.0] + [0.8 * GR60_CAUSE[t - 1] + 0.1 * e for t, e in zip(range(1, 60), pseudo(59, 4093, 5))]

CUSUM40 = [0.2 * e + (5.0 if t >= 20 else 0.0) for t, e in enumerate(pseudo(40, 2999, 3))]
ALT40 = [1.0 if t % 2 == 0 else -1.0 for t in range(40)]
