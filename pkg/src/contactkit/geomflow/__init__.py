"""Newton projection, contact-curve continuation and ODE integration."""
from .newton import (NewtonConfig, NewtonResult, augmented_jacobian, augmented_residual,
                     desingularized_equilibria, det_gradient, find_contact_point, full_equilibrium, gauss_newton,
                     project_to_S)
from .continuation import (Branch, BranchEvent, BranchPoint, ContinuationConfig, continue_contact_curve,
                           curve_tangent)
from .flow import IntegratorConfig, Trajectory, TrajectoryEvent, fiber_family, integrate_full

__all__ = [
    "Branch", "BranchEvent", "BranchPoint", "ContinuationConfig", "IntegratorConfig", "NewtonConfig",
    "NewtonResult", "Trajectory", "TrajectoryEvent", "augmented_jacobian", "augmented_residual",
    "continue_contact_curve", "curve_tangent", "desingularized_equilibria", "det_gradient",
    "fiber_family", "find_contact_point", "full_equilibrium", "gauss_newton", "integrate_full", "project_to_S",
]
