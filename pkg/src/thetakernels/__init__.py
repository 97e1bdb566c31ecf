"""Theta functions, hyperelliptic period matrices, kernel functions and
an exact jet calculus for opers and matrix opers."""

from .curves import (HyperellipticCurve, LocalExpansion, SurfacePoint,
                     abel_map, build_curve, curve_from_spec, differentials,
                     lattice_coordinates, local_expansion, period_matrices,
                     reduce_mod_lattice)
from .errors import ThetaKernelsError
from .kernels import (JacobianPoint, KernelValue, KleinCoordinates,
                      bergman_a_period, bergman_kernel, finiteness_probe,
                      find_theta_zero, gauss_limit_check, is_on_theta,
                      klein_coordinates, klein_kernel, prime_form,
                      select_odd_characteristic, szego_kernel,
                      wirtinger_connection)
from .theta import (Characteristic, RiemannMatrix, ScaledComplex,
                    ThetaRequest, lattice_points, log_theta_hessian,
                    second_order_theta_basis, theta, theta_value)

__all__ = [
    "Characteristic",
    "HyperellipticCurve",
    "JacobianPoint",
    "KernelValue",
    "KleinCoordinates",
    "LocalExpansion",
    "RiemannMatrix",
    "ScaledComplex",
    "SurfacePoint",
    "ThetaKernelsError",
    "ThetaRequest",
    "abel_map",
    "bergman_a_period",
    "bergman_kernel",
    "build_curve",
    "curve_from_spec",
    "differentials",
    "finiteness_probe",
    "find_theta_zero",
    "gauss_limit_check",
    "is_on_theta",
    "klein_coordinates",
    "klein_kernel",
    "lattice_coordinates",
    "lattice_points",
    "local_expansion",
    "log_theta_hessian",
    "period_matrices",
    "prime_form",
    "reduce_mod_lattice",
    "second_order_theta_basis",
    "select_odd_characteristic",
    "szego_kernel",
    "theta",
    "theta_value",
    "wirtinger_connection",
]

__version__ = "0.1.0"
