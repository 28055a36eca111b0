"""Symplectic Runge-Kutta integrators of Gauss type that also preserve energy.

The family ``A(alpha) = A + alpha P W P^{-1}`` perturbs the Gauss collocation
tableau while keeping it symplectic; choosing alpha per step so that the
energy is unchanged gives an integrator that preserves the Hamiltonian and
every quadratic invariant.
"""
from .errors import (
    DomainError,
    EnergyRootNotFound,
    EquipError,
    IntegrationError,
    InvalidArgumentError,
    NotFoundError,
    StageSolverFailure,
    StudyDegenerateError,
    UnsupportedStageCountError,
)
from .experiments import run_alpha_scaling, run_convergence, run_drift
from .hamiltonian import (
    HamiltonianSystem,
    QuadraticInvariant,
    energy,
    get_problem,
    kepler_initial_state,
    list_problems,
    quadratic_invariant,
    register_problem,
    vector_field,
)
from .integrator import (
    Mode,
    SolverConfig,
    StageVector,
    StepFlag,
    StepOutcome,
    Trajectory,
    integrate,
    solve_stages,
    step_equip,
    step_fixed_alpha,
)
from .legendre import LegendreBasis, QuadratureRule, eval_basis, gauss_legendre_rule, legendre_basis
from .tableau import (
    ButcherTableau,
    TableauFamily,
    build_family,
    gauss_tableau,
    symplecticity_residual,
    tableau_at,
)

__version__ = "0.1.0"
