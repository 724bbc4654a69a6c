from .fields import (
    CommutatorField,
    ConjugatedField,
    DenseLinearField,
    FieldOperator,
    PolynomialField,
    SpectralField,
    SumField,
    ZeroField,
)
from .hamiltonians import (
    a0_energy,
    a0_field,
    commutator,
    conjugate_field,
    hamiltonian_from_field,
    nlse_field,
    p0_energy,
    p0_field,
    p1_energy,
    p1_field,
    sampled_operator_norm,
    time_one_generator,
)
from .jets import Jet, lie_series
from .modified_energy import (
    CflSpec,
    ExtractedRemainderField,
    RemainderFit,
    check_cfl,
    cfl_max_step,
    extract_remainder_field,
    fit_remainder,
    modified_energy,
    modified_energy_field,
    remainder_field,
    z_field,
)
from .series import AdSeriesField, QuadraticSeriesField, ad_series, bernoulli

__all__ = [
    "AdSeriesField",
    "CflSpec",
    "CommutatorField",
    "ExtractedRemainderField",
    "ConjugatedField",
    "DenseLinearField",
    "FieldOperator",
    "Jet",
    "PolynomialField",
    "QuadraticSeriesField",
    "RemainderFit",
    "SpectralField",
    "SumField",
    "ZeroField",
    "a0_energy",
    "a0_field",
    "ad_series",
    "bernoulli",
    "cfl_max_step",
    "check_cfl",
    "commutator",
    "conjugate_field",
    "extract_remainder_field",
    "fit_remainder",
    "hamiltonian_from_field",
    "lie_series",
    "modified_energy",
    "modified_energy_field",
    "nlse_field",
    "p0_energy",
    "p0_field",
    "p1_energy",
    "p1_field",
    "remainder_field",
    "sampled_operator_norm",
    "time_one_generator",
    "z_field",
]
