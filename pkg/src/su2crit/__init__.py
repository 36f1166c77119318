"""Numerical laboratory for critical values of random SU(2) polynomials.

Analytic radial densities for the modulus of critical values, their
large-degree limit, and a deterministic Monte Carlo harness that checks
the closed forms against simulation and independent quadrature oracles.
"""

__version__ = "0.1.0"

from .kacrice import (DensityModel, covariance_kernel, covariance_matrix,
                      density_asymptotic, density_curve, density_exact,
                      density_modulus_asymptotic, density_modulus_exact,
                      density_unsimplified, det_delta, k_z, mass_within,
                      q_form)
from .montecarlo import (ComparisonReport, ExperimentConfig,
                         RadialHistogram, SimulationError, compare,
                         covariance_empirical_check, run_trials,
                         saddle_survey, zero_distribution_check)
from .quadrature import QuadratureError, QuadratureProblem, integrate, quad
from .su2poly import (CriticalSet, RootOptions, SeedPath, Su2Poly,
                      classify_saddle, critical_points,
                      critical_points_batch, polynomial_roots, sample_su2,
                      sample_su2_batch)

__all__ = [
    "__version__",
    "ComparisonReport", "CriticalSet", "DensityModel", "ExperimentConfig",
    "QuadratureError", "QuadratureProblem", "RadialHistogram",
    "RootOptions", "SeedPath", "SimulationError", "Su2Poly",
    "classify_saddle", "compare", "covariance_empirical_check",
    "covariance_kernel", "covariance_matrix", "critical_points",
    "critical_points_batch", "density_asymptotic", "density_curve",
    "density_exact", "density_modulus_asymptotic", "density_modulus_exact",
    "density_unsimplified", "det_delta", "integrate", "k_z", "mass_within",
    "polynomial_roots", "q_form", "quad", "run_trials", "saddle_survey",
    "sample_su2", "sample_su2_batch", "zero_distribution_check",
]
