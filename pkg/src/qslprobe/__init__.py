"""Energy lower bounds for black-box quantum processors.

Gate times recovered from job execution times, inverted through the
Mandelstam-Tamm and Margolus-Levitin quantum speed limits, bound the
energy and energy spread of the hidden drive from below.
"""

from .constants import HBAR
from .dynamics import (
    HamiltonianTrajectory,
    Propagation,
    expm_hermitian,
    logm_principal_nonneg,
    propagate,
)
from .estimator import (
    AmplificationPlan,
    EnergyEstimate,
    ExperimentStore,
    GateTarget,
    GateTimeEstimate,
    RegressionFit,
    estimate_energy,
    estimate_gate_set,
    estimate_tau_n,
    fit_gate_time,
    parse_gate_set,
    run_amplification,
)
from .jobs import BackendInterface, Job, JobResult, ReplayBackend, RecordingBackend
from .magnus import (
    commutator_double_integral,
    dyson_unitary_second_order,
    energy_difference_formula,
    energy_difference_signed,
    magnus_h_eff_second_order,
    verify_second_order_scaling,
)
from .qsl import (
    EnergyStats,
    QslBounds,
    bures_angle,
    corrected_mt_bound,
    invert_qsl,
    ml_bound,
    mt_bound,
    orthogonalization_time,
    qsl_bounds,
    time_averaged_stats,
)
from .report import report

__version__ = "0.1.0"

__all__ = [
    "HBAR", "AmplificationPlan", "BackendInterface", "EnergyEstimate", "EnergyStats",
    "ExperimentStore", "GateTarget", "GateTimeEstimate", "HamiltonianTrajectory", "Job",
    "JobResult", "Propagation", "QslBounds", "RecordingBackend", "RegressionFit",
    "ReplayBackend", "bures_angle", "commutator_double_integral", "corrected_mt_bound",
    "dyson_unitary_second_order", "energy_difference_formula", "energy_difference_signed",
    "estimate_energy", "estimate_gate_set", "estimate_tau_n", "expm_hermitian",
    "fit_gate_time", "invert_qsl", "logm_principal_nonneg", "magnus_h_eff_second_order",
    "ml_bound", "mt_bound", "orthogonalization_time", "parse_gate_set", "propagate",
    "qsl_bounds", "report", "run_amplification", "time_averaged_stats",
    "verify_second_order_scaling",
]
