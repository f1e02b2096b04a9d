"""Mean-field dynamics, fixed points, and delayed-feedback control of a two-mode laser."""
from .model import (
    LAB, MeanFieldState, RotatingFrame, SystemParams, Trajectory, derive_params,
    integrate_ode, observables, one_mode_threshold, rhs_lab, rhs_rotating,
)
from .stability import analyzed_fixed_points, classify, eigenvalues, jacobian
from .steady_state import (
    FixedPoint, FPKind, Stability, all_fixed_points, build_fixed_point,
    characteristic_frequencies, residual, trivial_fixed_point,
)

__all__ = [
    "LAB", "MeanFieldState", "RotatingFrame", "SystemParams", "Trajectory", "derive_params",
    "integrate_ode", "observables", "one_mode_threshold", "rhs_lab", "rhs_rotating",
    "analyzed_fixed_points", "classify", "eigenvalues", "jacobian", "FixedPoint", "FPKind",
    "Stability", "all_fixed_points", "build_fixed_point", "characteristic_frequencies",
    "residual", "trivial_fixed_point",
]
