"""Boundary-perturbation eigenvalues of the 2D Helmholtz operator on nearly
circular domains, with a collocation eigensolver for cross-checking."""

from helmpert.errors import InputError, NumericError, UnsupportedScopeError
from helmpert.geometry import (
    BoundarySpec,
    Ellipse,
    FourierBoundary,
    RawFourier,
    Supercircle,
    eval_radius,
    fourier_coeffs,
    mean_radius,
    parse_boundary,
)
from helmpert.specfun import ZeroKind, bessel_j_and_prime, bessel_zero
from helmpert.perturb import (
    BC,
    ModeLabel,
    Parity,
    SpectrumEntry,
    WavefunctionCoeffs,
    e0,
    e1,
    e2_l0,
    eval_psi,
    normalize,
    psi1_coeffs,
    psi2_coeffs,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BC",
    "BoundarySpec",
    "Ellipse",
    "FourierBoundary",
    "InputError",
    "ModeLabel",
    "NumericError",
    "Parity",
    "RawFourier",
    "SpectrumEntry",
    "Supercircle",
    "UnsupportedScopeError",
    "WavefunctionCoeffs",
    "ZeroKind",
    "bessel_j_and_prime",
    "bessel_zero",
    "e0",
    "e1",
    "e2_l0",
    "eval_psi",
    "eval_radius",
    "fourier_coeffs",
    "mean_radius",
    "normalize",
    "parse_boundary",
    "psi1_coeffs",
    "psi2_coeffs",
    "spectrum",
]
