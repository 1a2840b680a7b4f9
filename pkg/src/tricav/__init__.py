"""Dissipative preparation of a three-dimensional entangled state of two
atoms in coupled bimode cavities: full and effective models, a fixed-step
Lindblad integrator with jump-conditioned feedback, and the scenario runner
behind the ``tricav`` command."""

from .space import AtomLevel, BasisState, ModeId, StateSpace, build_state_space
from .operators import SparseOperator, expectation
from .model import (
    CHANNEL_LABELS,
    CollapseChannel,
    ModelParams,
    TargetStates,
    build_H0,
    build_H_full,
    build_Hg,
    build_collapse_channels,
    build_drive,
    delocalized_modes,
    delta_star,
    ground_state_vector,
    target_states,
)
from .effective import (
    EffectiveModel,
    NearSingularError,
    build_H_NH,
    closed_form_gamma,
    closed_form_kappa,
    dominant_channels,
    dump_coefficients,
    reduce_effective,
    regime_check,
)
from .dynamics import (
    DegenerateSteadyStateError,
    FeedbackScheme,
    IntegrationError,
    IntegratorConfig,
    ObservableSet,
    SteadyStateResult,
    Trajectory,
    build_feedback_unitary,
    evolve,
    evolve_with_feedback,
    fidelity,
    lindblad_rhs,
    steady_state_direct,
    suggest_step,
)
from .scenarios import (
    RunRecord,
    ScenarioSpec,
    SweepGrid,
    run_scenario,
    scenario_defaults,
    sweep,
    sweep_grid,
    write_csv,
)
from .kernels import backend as kernel_backend

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # state space
    "AtomLevel",
    "BasisState",
    "ModeId",
    "StateSpace",
    "build_state_space",
    # operators
    "SparseOperator",
    "expectation",
    # physical model
    "CHANNEL_LABELS",
    "CollapseChannel",
    "ModelParams",
    "TargetStates",
    "build_H0",
    "build_Hg",
    "build_drive",
    "build_H_full",
    "build_collapse_channels",
    "delocalized_modes",
    "delta_star",
    "ground_state_vector",
    "target_states",
    # effective model
    "EffectiveModel",
    "NearSingularError",
    "build_H_NH",
    "closed_form_gamma",
    "closed_form_kappa",
    "dominant_channels",
    "dump_coefficients",
    "reduce_effective",
    "regime_check",
    # dynamics
    "DegenerateSteadyStateError",
    "FeedbackScheme",
    "IntegrationError",
    "IntegratorConfig",
    "ObservableSet",
    "SteadyStateResult",
    "Trajectory",
    "build_feedback_unitary",
    "evolve",
    "evolve_with_feedback",
    "fidelity",
    "lindblad_rhs",
    "steady_state_direct",
    "suggest_step",
    # scenarios
    "RunRecord",
    "ScenarioSpec",
    "SweepGrid",
    "run_scenario",
    "scenario_defaults",
    "sweep",
    "sweep_grid",
    "write_csv",
    "kernel_backend",
]
