"""Kernel density estimation with Monte Carlo, stratified and randomized quasi-Monte Carlo samples."""

import os

import numba

# skip numba's TBB probe, which warns on older TBB installs
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

from .bandwidth import PluginResult, mc_optimal_h, normal_reference_R, plugin_chain, stage_bandwidth
from .errors import DegenerateSample, DomainError, InvalidArgument, UnsupportedDimension
from .harness import (
    ExperimentGrid,
    IvFit,
    IvSurface,
    MiseReport,
    derive_optimal,
    estimate_surface,
    fit_iv_model,
    pilot_ell0,
    run_experiment,
    second_stage,
)
from .kde import kde_derivative, kde_evaluate, kde_evaluate_bandwidths
from .kernel import Kernel, gaussian_kernel, roughness
from .models import GbmSpec, Model, cantilever, exact_normal_Rf2, inv_normal_cdf, lognormal_sum, sum_of_normals
from .pointsets import (
    PointSet,
    SamplerKind,
    SamplerSpec,
    generate,
    randomize_lms,
    randomize_nus,
    sample_mc,
    sample_stratified,
    sobol_net,
)

__version__ = "0.1.0"
