"""Constrained Newton-Euler dynamics and model reduction for a seven-link biped."""

__version__ = "0.1.0"

from .errors import (
    ConstraintDegeneracyError,
    ImpactDegeneracyError,
    KinematicSingularityError,
    ModelConfigError,
    NumericsError,
)
from .model import (
    JointConstraint,
    LinkParams,
    RobotModel,
    default_constraints,
    load_model,
    load_model_file,
    save_model,
)
from .kinematics import FullState, chain_positions, skew
from .assembly import AssemblyMatrices, assemble, constraint_rhs
from .reduction import ReducedModel, forward_dynamics, reduce, constraint_forces
from .oracle import KktSolution, solve_kkt, total_energy
from .contact import (
    Phase,
    contact_jacobian,
    contact_point,
    detect_touchdown,
    dsp_contact_force,
    impact_map,
)
from .sim import SimConfig, Trajectory, parse_sim_config, simulate, step

__all__ = [
    "__version__",
    "ModelConfigError",
    "NumericsError",
    "KinematicSingularityError",
    "ConstraintDegeneracyError",
    "ImpactDegeneracyError",
    "LinkParams",
    "JointConstraint",
    "RobotModel",
    "default_constraints",
    "load_model",
    "load_model_file",
    "save_model",
    "FullState",
    "chain_positions",
    "skew",
    "AssemblyMatrices",
    "assemble",
    "constraint_rhs",
    "ReducedModel",
    "reduce",
    "forward_dynamics",
    "constraint_forces",
    "KktSolution",
    "solve_kkt",
    "total_energy",
    "Phase",
    "contact_point",
    "contact_jacobian",
    "impact_map",
    "dsp_contact_force",
    "detect_touchdown",
    "SimConfig",
    "Trajectory",
    "parse_sim_config",
    "simulate",
    "step",
]
