"""Numerical lab for kappa-entropies of submanifolds in space forms."""

from .ambient import AmbientSpace, distance, lorentz_inner, project_to_hyperboloid
from .errors import ComputationError, DomainError
from .kernels import (
    KernelSpec,
    SmallTimeCoefficients,
    ball_volume,
    euclidean_kernel,
    hyperbolic_kernel,
    hyperbolic_tail_mass,
    kernel,
    kernel_radial_derivative,
    radial_mass,
    small_time_coefficients,
    sphere_volume,
)
from .shapes import shape_catalog
from .submanifold import (
    CurvaturePointData,
    ImmersedSubmanifold,
    curvature_at,
    first_fundamental_form,
    geodesic_ball_area,
    integrate,
)

__version__ = "0.1.0"
