"""
Randomized point sets
=====================

Four ways to put n points in the unit cube: plain Monte Carlo, one point
per subcube (stratification), and a Sobol' net randomized either by a
linear matrix scramble or by nested uniform scrambling.
"""

import numpy as np

from rqmckde import SamplerSpec, generate, sobol_net

n, s = 2**10, 2

# The unrandomized net: its first coordinate is the van der Corput sequence.
net = sobol_net(s, 10)
print("first 8 points of the net:\n", net.points[:8])

# The scrambled nets put exactly one point in each interval of width 1/n along
# every axis; stratification balances the q x q cells instead, and Monte Carlo
# balances nothing.
for kind in ("mc", "strat", "lms", "nus"):
    ps = generate(SamplerSpec(kind, s, seed=42), n)
    cells = np.floor(ps.points[:, 0] * ps.n).astype(int)
    full = np.array_equal(np.sort(cells), np.arange(ps.n))
    print(f"{kind:>5}: n={ps.n:5d}  one point per 1-D cell: {full}")

# Randomization keeps each point uniform, so averages stay unbiased; the
# spread of the estimate over independent scrambles is what shrinks.
f = lambda u: np.exp(u.sum(axis=1))
exact = (np.e - 1) ** s
for kind in ("mc", "lms", "nus"):
    est = [f(generate(SamplerSpec(kind, s, seed=r), n).points).mean() for r in range(30)]
    print(f"{kind:>5}: bias {np.mean(est) - exact:+.2e}  std {np.std(est, ddof=1):.2e}")
