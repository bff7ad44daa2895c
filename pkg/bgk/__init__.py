"""BGK kinetic solver for scalar balance laws with transport noise."""

import os
from importlib import metadata

from .characteristics import FlowResult, flow, inverse_flow, jacobian_envelope, velocity_grid_for
from .errors import (
    BgkError,
    CflViolation,
    CheckFailure,
    ConfigError,
    NegativeDefect,
    SolverError,
    StepOverflow,
    SupportOverflow,
)
from .kinetic import (
    DefectField,
    DensityField,
    KineticField,
    SpaceGrid,
    VelocityGrid,
    chi,
    chi_cell_average,
    chi_positive_distance,
    defect_measure,
    project_density,
    reconstruct_density,
)
from .models import (
    FluxModel,
    ForcingModel,
    ModelSpec,
    NoiseModel,
    bl_forcing,
    buckley_leverett_flux,
    burgers_flux,
    constant_noise,
    inverse_time_decay,
    linear_decay_forcing,
    linear_flux,
    linear_noise,
    resolve_flux,
    resolve_forcing,
    resolve_model,
    resolve_noise,
    tabulated_flux,
    zero_forcing,
    zero_noise,
)
from .picard import picard_iterate, picard_map
from .solver import SolverConfig, Trajectory, run, step_forcing, step_relax, step_transport
from .stochastic import (
    EnsembleStats,
    ShiftPath,
    WienerPath,
    cross_variation,
    ensemble,
    sample_shift,
    solve_pathwise_direct,
    solve_pathwise_shift,
)
from .verification import (
    BoundReport,
    ConvergenceReport,
    EntropyReport,
    OrderReport,
    ResidualReport,
    burgers_riemann,
    calibrate_entropy_tolerance,
    check_comparison,
    check_contraction_pair,
    check_decay,
    check_defect_budget,
    check_defect_field,
    check_linf_bound,
    check_shift_equivalence,
    check_sign_preservation,
    check_translation,
    convergence_study,
    entropy_residual,
    expansion_shock_trace,
    godunov_reference,
    kinetic_residual,
    weak_form_residual,
)


def _read_version() -> str:
    try:
        return metadata.version("stochastic-bgk")
    except metadata.PackageNotFoundError:
        with open(os.path.join(os.path.dirname(os.path.dirname(__file__)), "VERSION")) as handle:
            return handle.readline().strip()


__version__ = _read_version()

__all__ = [
    "BgkError",
    "BoundReport",
    "ConvergenceReport",
    "CflViolation",
    "CheckFailure",
    "ConfigError",
    "DefectField",
    "DensityField",
    "EnsembleStats",
    "EntropyReport",
    "FlowResult",
    "FluxModel",
    "ForcingModel",
    "KineticField",
    "ModelSpec",
    "NegativeDefect",
    "NoiseModel",
    "OrderReport",
    "ResidualReport",
    "ShiftPath",
    "SolverConfig",
    "SolverError",
    "SpaceGrid",
    "StepOverflow",
    "SupportOverflow",
    "Trajectory",
    "VelocityGrid",
    "WienerPath",
    "bl_forcing",
    "buckley_leverett_flux",
    "burgers_flux",
    "burgers_riemann",
    "calibrate_entropy_tolerance",
    "check_comparison",
    "check_contraction_pair",
    "check_decay",
    "check_defect_budget",
    "check_defect_field",
    "check_linf_bound",
    "check_shift_equivalence",
    "check_sign_preservation",
    "check_translation",
    "chi",
    "chi_cell_average",
    "chi_positive_distance",
    "constant_noise",
    "convergence_study",
    "cross_variation",
    "defect_measure",
    "ensemble",
    "entropy_residual",
    "expansion_shock_trace",
    "flow",
    "godunov_reference",
    "inverse_flow",
    "inverse_time_decay",
    "jacobian_envelope",
    "kinetic_residual",
    "linear_decay_forcing",
    "linear_flux",
    "linear_noise",
    "picard_iterate",
    "picard_map",
    "project_density",
    "reconstruct_density",
    "resolve_flux",
    "resolve_forcing",
    "resolve_model",
    "resolve_noise",
    "run",
    "sample_shift",
    "solve_pathwise_direct",
    "solve_pathwise_shift",
    "step_forcing",
    "step_relax",
    "step_transport",
    "tabulated_flux",
    "velocity_grid_for",
    "weak_form_residual",
    "zero_forcing",
    "zero_noise",
]
