"""
Asymptotic bounds against measured IV
=====================================

Compare the stratified-sampling IV bound with the measured IV, and list
the rates the theory module predicts for a few dimensions.
"""

import numpy as np

from rqmckde import ExperimentGrid, SamplerSpec, estimate_surface, sum_of_normals
from rqmckde.theory import kh_rates, mc_aiv, strat_iv_bound, strat_mise_bound

for s in (1, 2, 3):
    model = sum_of_normals(s)
    a, b = model.interval
    grid = ExperimentGrid((2**10, 2**12), 4.0, n_r=10, n_e=128, seed=2, n_h=3)
    surf = estimate_surface(model, SamplerSpec("strat", s), grid)
    ratio = [[iv / strat_iv_bound(int(n), h, s, a, b).value for iv, h in zip(row, surf.h_values)]
             for row, n in zip(surf.iv, surf.n_values)]
    print(f"s={s}: measured IV / bound ranges {np.min(ratio):.2e} .. {np.max(ratio):.2e}")

print("\n s  strat nu   KH nu")
for s in (1, 2, 3, 5, 12):
    print(f"{s:2d}  {strat_mise_bound(None, s, -2, 2, 0.19).rates['nu']:7.3f}  {kh_rates(s).rates['mise_nu']:6.3f}")

print("\nMC leading AIV at n=2^14, h=2^-4.5:", f"{mc_aiv(2**14, 2**-4.5).value:.4e}")
