from .checks import (
    CflProbe,
    SpectrumRow,
    SplitCheck,
    SweepRow,
    algebra_constant_sweep,
    cfl_boundary_probe,
    norm_equivalence_sweep,
    spectrum_check,
    split_equivalence,
    symplecticity_check,
)
from .drift import DriftRun, EnergyReport, admissible_orders, drift_halves, drift_study, energy_columns
from .fitting import SlopeEstimate, fit_slope
from .initial_data import INITIAL_KINDS, make_initial_state
from .manifest import RNG_ALGORITHM, build_manifest, make_rng
from .orders import convergence_order, defect_amplitude_degree, defect_order, leading_term_slope, one_step_defect
from .stability import StabilityRecord, StabilityVerdict, horizon_steps, longtime_stability

__all__ = [
    "CflProbe",
    "DriftRun",
    "EnergyReport",
    "INITIAL_KINDS",
    "RNG_ALGORITHM",
    "SlopeEstimate",
    "SpectrumRow",
    "SplitCheck",
    "StabilityRecord",
    "StabilityVerdict",
    "SweepRow",
    "admissible_orders",
    "algebra_constant_sweep",
    "build_manifest",
    "cfl_boundary_probe",
    "convergence_order",
    "defect_amplitude_degree",
    "defect_order",
    "drift_halves",
    "drift_study",
    "energy_columns",
    "fit_slope",
    "horizon_steps",
    "leading_term_slope",
    "longtime_stability",
    "make_initial_state",
    "make_rng",
    "norm_equivalence_sweep",
    "one_step_defect",
    "spectrum_check",
    "split_equivalence",
    "symplecticity_check",
]
