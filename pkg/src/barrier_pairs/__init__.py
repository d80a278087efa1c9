"""Barrier-pair synthesis, min-quadratic combination and hysteretic safety supervision."""

from .barrier import (
    MinQuadraticBarrier,
    QuadraticBarrierPair,
    combined_control,
    eval_barrier,
    eval_control,
    min_eval,
)
from .estimator import BarrierPairSynthesizer
from .exceptions import (
    BarrierPairError,
    EmptyBank,
    Infeasible,
    InfeasibleEquilibrium,
    InvalidRegion,
    NoEquilibrium,
    NonFinite,
    SolverStalled,
    StartOutsideSafeSet,
    VerificationFailed,
)
from .ldi import PolytopicLDI, linearize, linearize_pendulum, linearize_springmass, zeta_bound
from .plants import DoubleSpringMass, InvertedPendulum, Plant, equilibrium_input, make_plant
from .sim import (
    PENDULUM_SCENARIOS,
    Scenario,
    Trajectory,
    ViolationReport,
    edge_trajectories,
    integrate_step,
    run_scenario,
    tracking_control_pendulum,
)
from .supervisor import Mode, SupervisorState, safe_set_membership, supervisor_step
from .synthesis import (
    Certificate,
    SynthesisConfig,
    extract_gain,
    solve_certificate,
    synthesize_bank,
    synthesize_barrier_pair,
    verify_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierPairError",
    "BarrierPairSynthesizer",
    "Certificate",
    "DoubleSpringMass",
    "EmptyBank",
    "Infeasible",
    "InfeasibleEquilibrium",
    "InvalidRegion",
    "InvertedPendulum",
    "MinQuadraticBarrier",
    "Mode",
    "NoEquilibrium",
    "NonFinite",
    "PENDULUM_SCENARIOS",
    "Plant",
    "PolytopicLDI",
    "QuadraticBarrierPair",
    "Scenario",
    "SolverStalled",
    "StartOutsideSafeSet",
    "SupervisorState",
    "SynthesisConfig",
    "Trajectory",
    "VerificationFailed",
    "ViolationReport",
    "combined_control",
    "edge_trajectories",
    "equilibrium_input",
    "eval_barrier",
    "eval_control",
    "extract_gain",
    "integrate_step",
    "linearize",
    "linearize_pendulum",
    "linearize_springmass",
    "make_plant",
    "min_eval",
    "run_scenario",
    "safe_set_membership",
    "solve_certificate",
    "supervisor_step",
    "synthesize_bank",
    "synthesize_barrier_pair",
    "tracking_control_pendulum",
    "verify_certificate",
    "zeta_bound",
]
