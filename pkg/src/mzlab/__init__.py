"""Numerical laboratory for Marcinkiewicz integrals with rough kernels on weighted spaces."""

__version__ = "0.1.0"

from .grid import GridSpec, QuadratureSpec, SampledField, lp_norm, sample, weighted_lp_norm
from .sphere import AngularKernel, get_kernel, kernel_bank, lq_sphere_norm, mean_zero_project
from .kernels import build_k_jt, build_mollifier, spectral_convolve
from .operators import (grand_maximal, hl_maximal, marcinkiewicz, marcinkiewicz_dyadic, marcinkiewicz_mollified,
                        omega_maximal, rough_singular_integral)
from .weights import Weight, ainf_constant, ap_constant, composite_constants, power_weight
from .dyadic import DyadicGridSpec, SparseFamily, build_grids, build_sparse_family, cz_decompose, sparse_operator
from .experiments import ExperimentConfig, buckley_sweep, theorem11_sweep, theorem12_sweep
from .regression import full_regression

__all__ = [
    "GridSpec", "QuadratureSpec", "SampledField", "lp_norm", "sample", "weighted_lp_norm",
    "AngularKernel", "get_kernel", "kernel_bank", "lq_sphere_norm", "mean_zero_project",
    "build_k_jt", "build_mollifier", "spectral_convolve",
    "grand_maximal", "hl_maximal", "marcinkiewicz", "marcinkiewicz_dyadic", "marcinkiewicz_mollified",
    "omega_maximal", "rough_singular_integral",
    "Weight", "ainf_constant", "ap_constant", "composite_constants", "power_weight",
    "DyadicGridSpec", "SparseFamily", "build_grids", "build_sparse_family", "cz_decompose", "sparse_operator",
    "ExperimentConfig", "buckley_sweep", "theorem11_sweep", "theorem12_sweep",
    "full_regression",
]
