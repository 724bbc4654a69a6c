from .grid import GridSpec, ModelParams, as_state, from_real, to_real, zeros
from .spectral import (
    SineSpectrum,
    SpectralOperator,
    apply_cayley_resolvent,
    apply_laplacian,
    apply_propagator,
    cayley_resolvent,
    dense_eigenvalues,
    function_of_laplacian,
    laplacian_eigenvalues,
    laplacian_matrix,
    propagator,
    sine_basis,
    sine_spectrum,
)
from .functionals import (
    algebra_constant,
    discrete_gradient_energy,
    energy,
    inner_dx,
    interpolant_h1_norm,
    interpolate,
    kinetic_energy,
    mass,
    nonlinearity,
    nonlinearity_derivative,
    norm_dx,
    potential_energy,
    random_state,
    rescale,
)

__all__ = [
    "GridSpec",
    "ModelParams",
    "SineSpectrum",
    "SpectralOperator",
    "algebra_constant",
    "apply_cayley_resolvent",
    "apply_laplacian",
    "apply_propagator",
    "as_state",
    "cayley_resolvent",
    "dense_eigenvalues",
    "discrete_gradient_energy",
    "energy",
    "from_real",
    "function_of_laplacian",
    "inner_dx",
    "interpolant_h1_norm",
    "interpolate",
    "kinetic_energy",
    "laplacian_eigenvalues",
    "laplacian_matrix",
    "mass",
    "nonlinearity",
    "nonlinearity_derivative",
    "norm_dx",
    "potential_energy",
    "propagator",
    "random_state",
    "rescale",
    "sine_basis",
    "sine_spectrum",
    "to_real",
    "zeros",
]
