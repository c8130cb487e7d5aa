"""Particle-based variational inference with Stein updates.

Flat-space SVGD, a metric-aware (information-geometric) variant, and
sphere/product-of-spheres updates driven by exponential maps, plus
kernelized Stein discrepancy diagnostics and a benchmark CLI.
"""

__version__ = "0.1.0"

from .discrepancy import (DiscrepancyEstimate, ksd_euclidean,
                          ksd_pair_gaussian, rksd_pair_vmf, rksd_sphere)
from .engine import (AdagradMomentum, EmbeddingProviders, ParticleCloud,
                     VanillaStep, apply_update, compute_field,
                     rsvgd_embedded_field, rsvgd_euclidean_field,
                     rsvgd_product_field, rsvgd_sphere_field, run, svgd_field)
from .estimators import SteinLogisticRegression, SteinSampler
from .kernels import (Gaussian, KernelJet, SummedGaussian, VmfProduct,
                      eval_jet, log_jet_vmf_block, median_bandwidth,
                      summed_bandwidths)
from .manifolds import (ChartQuantities, Euclidean, ProductSphere, Sphere,
                        chart_forward, chart_inverse, exp_map_product,
                        exp_map_sphere, hemisphere_chart,
                        project_tangent_sphere, uniform_sphere)
from .targets import (BlrModel, GaussianTarget, MetricQuantities,
                      UniformSphere, VmfMixture, blr_predict,
                      predictive_probs)

__all__ = [
    "AdagradMomentum", "BlrModel", "ChartQuantities", "DiscrepancyEstimate",
    "EmbeddingProviders", "Euclidean", "Gaussian", "GaussianTarget",
    "KernelJet", "MetricQuantities", "ParticleCloud", "ProductSphere",
    "Sphere", "SteinLogisticRegression", "SteinSampler", "SummedGaussian",
    "UniformSphere", "VanillaStep", "VmfMixture", "VmfProduct",
    "apply_update", "blr_predict", "chart_forward", "chart_inverse",
    "compute_field", "eval_jet", "exp_map_product", "exp_map_sphere",
    "hemisphere_chart", "ksd_euclidean", "ksd_pair_gaussian",
    "log_jet_vmf_block", "median_bandwidth", "predictive_probs",
    "project_tangent_sphere", "rksd_pair_vmf", "rksd_sphere",
    "rsvgd_embedded_field", "rsvgd_euclidean_field", "rsvgd_product_field",
    "rsvgd_sphere_field", "run", "summed_bandwidths", "svgd_field",
    "uniform_sphere",
]
