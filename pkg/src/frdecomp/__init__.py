"""Finite-range decomposition of Green's functions and multiscale Gaussian fields.

The package decomposes inverses of discrete Dirichlet-form generators
(lattice operators, weighted-graph Laplacians, their killed and resolvent
variants) into integrals of positive semi-definite kernels with exact finite
range, and samples the associated Gaussian free fields scale by scale.
"""

from ._accel import BACKEND_NAME, available_backends
from .mollifier import (BumpProfile, Mollifier, Normalization,
                        build_default_profile, build_mollifier,
                        default_mollifier, normalization_constant)
from .weights import (ChebyshevWeight, ContinuousWeightFamily,
                      DiscreteWeightFamily, RescaledWeight, WeightCheckReport,
                      approximation_rate, chebyshev_coefficients,
                      check_decomposition_identity, decay_constants,
                      eval_discrete_weight, eval_discrete_weight_direct,
                      rescale_for_operator, wave_identity_max_residual)
from .lattice import (LatticeKernel, LatticeSpec, SymbolTable, WrapAroundError,
                      build_symbol_table, continuum_kernel, decay_fit,
                      dense_operator, discrete_continuum_gap, lattice_kernel,
                      mass_family_sweep, reconstruct_torus_green)
from .graphs import (GraphOperator, ScaleBlock, WeightedGraph, chebyshev_apply,
                     cycle_graph, killed_green_consistency, laplacian_apply,
                     reconstruct_green, scale_block, two_vertex_graph)
from .sampler import (FieldSamples, SamplerConfig, ScalePlan, covariance_report,
                      sample_graph, sample_torus)

__all__ = [
    "BACKEND_NAME", "available_backends",
    "BumpProfile", "Mollifier", "Normalization", "build_default_profile",
    "build_mollifier", "default_mollifier", "normalization_constant",
    "ChebyshevWeight", "ContinuousWeightFamily", "DiscreteWeightFamily",
    "RescaledWeight", "WeightCheckReport", "approximation_rate",
    "chebyshev_coefficients", "check_decomposition_identity", "decay_constants",
    "eval_discrete_weight", "eval_discrete_weight_direct",
    "rescale_for_operator", "wave_identity_max_residual",
    "LatticeKernel", "LatticeSpec", "SymbolTable", "WrapAroundError",
    "build_symbol_table", "continuum_kernel", "decay_fit", "dense_operator",
    "discrete_continuum_gap", "lattice_kernel", "mass_family_sweep",
    "reconstruct_torus_green",
    "GraphOperator", "ScaleBlock", "WeightedGraph", "chebyshev_apply",
    "cycle_graph", "killed_green_consistency", "laplacian_apply",
    "reconstruct_green", "scale_block", "two_vertex_graph",
    "FieldSamples", "SamplerConfig", "ScalePlan", "covariance_report",
    "sample_graph", "sample_torus",
]

__version__ = "0.1.0"
