"""
Empirical convergence rates
===========================

Estimate the integrated variance of the KDE on a small (n, h) grid for
Monte Carlo and for nested-scrambled Sobol' points, fit
IV ~ C n^-beta h^-delta, and derive the MISE-optimal bandwidth rate.
This is a reduced version of the desk preset, so it runs in well under
a minute.
"""

from rqmckde import ExperimentGrid, SamplerSpec, derive_optimal, estimate_surface, fit_iv_model, sum_of_normals
from rqmckde.models import exact_normal_Rf2

model = sum_of_normals(1)
B = exact_normal_Rf2(2.0) / 4

for kind, ell0 in (("mc", 4.0), ("nus", 6.5)):
    grid = ExperimentGrid(tuple(2**k for k in range(9, 14)), ell0, n_r=20, n_e=256, seed=1)
    surf = estimate_surface(model, SamplerSpec(kind, 1), grid)
    fit = fit_iv_model(surf, B)
    rep = derive_optimal(fit)
    print(f"{kind:>4}: beta={fit.beta:.3f} delta={fit.delta:.3f} R2={fit.R2:.4f}  "
          f"gamma*={rep.gamma_star:.3f} nu*={rep.nu_star:.3f}")

# Monte Carlo should land near beta = delta = 1 and nu* = 0.8; the
# scrambled net near beta = delta = 3 with a much faster MISE rate.
