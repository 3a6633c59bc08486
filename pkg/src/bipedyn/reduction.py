"""Null-space lift and extraction of the minimal-coordinate model.

Pipeline: split the transposed attachment Jacobian P3' = [P8 P9] by the
angular/linear acceleration blocks, eliminate the linear accelerations
through P9, lift with P10/P11, express the angular accelerations in the
active-DOF basis P12/P13, and read off

    J phidd + H + G = D tau

The lift annihilates the joint-force columns (P10' P3 = 0) and the basis
annihilates the alignment-torque columns (P12' P10' P4 = 0), so both
constraint force sets drop out exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import AssemblyMatrices, apply_mass, assemble, solve_mass
from .errors import ConstraintDegeneracyError, KinematicSingularityError, NumericsError
from .kinematics import FullState, cross3
from .model import RobotModel

__all__ = [
    "ReducedModel",
    "lift_nullspace",
    "velocity_basis",
    "stacked_rates",
    "actuation_map",
    "reduce",
    "reduce_from_assembly",
    "forward_dynamics",
    "accel_from_reduced",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ReducedModel:
    j: np.ndarray  # (n, n) inertia
    h: np.ndarray  # (n,)   Coriolis/centripetal + gyroscopic
    g: np.ndarray  # (n,)   gravity
    d: np.ndarray  # (n, n) input map
    p10: np.ndarray  # (42, 21)
    p11: np.ndarray  # (42,)
    p12: np.ndarray  # (21, n)
    p13: np.ndarray  # (21,)
    n: int
    d_condition: float


def lift_nullspace(asm: AssemblyMatrices) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split P3' = [P8 P9] and lift: z1 = P10 wdot + P11 for any wdot.

    P9 multiplies the linear accelerations; for the seven-link chain it is a
    constant signed bidiagonal block and always invertible, but the check is
    kept because the construction is dimension-generic.
    """
    p3t = asm.p3.T
    p8 = p3t[:, :21]
    p9 = p3t[:, 21:]
    try:
        lu, piv = scipy.linalg.lu_factor(p9)
    except scipy.linalg.LinAlgError:
        smin = np.linalg.svd(p9, compute_uv=False)[-1]
        raise KinematicSingularityError(
            f"kinematic singularity at state (smallest singular value {smin:.3e})"
        ) from None
    p9_inv = scipy.linalg.lu_solve((lu, piv), np.eye(p9.shape[0]))
    cond = np.linalg.norm(p9, 1) * np.linalg.norm(p9_inv, 1)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        smin = np.linalg.svd(p9, compute_uv=False)[-1]
        raise KinematicSingularityError(
            f"kinematic singularity at state (smallest singular value {smin:.3e})"
        )
    p10 = np.vstack([np.eye(21), -p9_inv @ p8])
    p11 = np.concatenate([np.zeros(21), p9_inv @ asm.p7])
    return p8, p9, p10, p11


def velocity_basis(
    model: RobotModel, state: FullState, phi_dot: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Active-DOF basis of the stacked angular rates: W = P12 phid exactly,
    and along the flow Wdot = P12 phidd + P13 with P13 = d(P12)/dt phid.

    The basis propagates down the chain: the base link carries its free
    directions, pin joints add their axis rate expressed through the joint
    rotation, ball joints add three body-frame relative-rate columns. P13
    follows from differentiating the same recursion with Adot = A skew(w).
    """
    n = model.n_dof
    a = state.a
    layout = model.dof_layout

    blocks = np.zeros((7, 3, n))
    p13 = np.zeros((7, 3))
    w = np.zeros((7, 3))

    base = layout[0]
    for k, axis in enumerate(base.axes):
        blocks[0][axis, base.col + k] = 1.0
    w[0] = blocks[0] @ phi_dot

    for entry in layout[1:]:
        c = entry.link
        rel = a[c].T @ a[c - 1]
        if entry.kind == "pin":
            con = model.constraint_at(c + 1)
            rate = phi_dot[entry.col]
            blocks[c] = rel @ blocks[c - 1]
            blocks[c][:, entry.col] += rel @ con.q
            w[c] = rel @ (w[c - 1] + con.q * rate)
            p13[c] = rel @ (p13[c - 1] + rate * cross3(w[c - 1], con.q))
        else:  # ball
            blocks[c] = rel @ blocks[c - 1]
            cols = slice(entry.col, entry.col + 3)
            blocks[c][:, cols] += np.eye(3)
            eta = phi_dot[cols]
            w[c] = rel @ w[c - 1] + eta
            p13[c] = rel @ p13[c - 1] + cross3(w[c], eta)

    p12 = blocks.reshape(21, n)
    return p12, p13.reshape(21)


def stacked_rates(model: RobotModel, state: FullState, phi_dot: np.ndarray) -> np.ndarray:
    """(7, 3) link angular rates consistent with phi_dot (W = P12 phid)."""
    p12, _ = velocity_basis(model, state, np.zeros(model.n_dof))
    return (p12 @ phi_dot).reshape(7, 3)


def actuation_map(model: RobotModel) -> np.ndarray:
    """(21, n) map from per-DOF actuator torques to the stacked T vector.

    One actuator per active DOF: the base and ball joints receive full
    3-vector torques, pin joints a torque about their free axis. This is
    what makes the reduced input map square and generically invertible.
    """
    cached = model.__dict__.get("_actuation_map")
    if cached is not None:
        return cached
    n = model.n_dof
    s = np.zeros((21, n))
    for entry in model.dof_layout:
        if entry.kind == "base":
            for k, axis in enumerate(entry.axes):
                s[axis, entry.col + k] = 1.0
        elif entry.kind == "pin":
            con = model.constraint_at(entry.link + 1)
            s[3 * entry.link : 3 * entry.link + 3, entry.col] = con.q
        else:
            s[3 * entry.link : 3 * entry.link + 3, entry.col : entry.col + 3] = np.eye(3)
    model.__dict__["_actuation_map"] = s
    return s


def reduce_from_assembly(
    model: RobotModel, asm: AssemblyMatrices, p12: np.ndarray, p13: np.ndarray
) -> ReducedModel:
    """Extraction core for callers that already hold the assembly and basis."""
    _, _, p10, p11 = lift_nullspace(asm)
    b = p10 @ p12  # (42, n)
    j = b.T @ apply_mass(model, b)
    j = 0.5 * (j + j.T)

    bias = apply_mass(model, p11 + p10 @ p13)  # P1 (P11 + P10 P13)
    p2_gyro = asm.p2 - asm.p2_gravity
    h = b.T @ bias - b.T @ p2_gyro
    g = -(b.T @ asm.p2_gravity)
    d = b.T @ (asm.p5 @ actuation_map(model))
    d_condition = float(np.linalg.cond(d))
    return ReducedModel(
        j=j, h=h, g=g, d=d, p10=p10, p11=p11, p12=p12, p13=p13,
        n=model.n_dof, d_condition=d_condition,
    )


def reduce(model: RobotModel, state: FullState, phi_dot: np.ndarray) -> ReducedModel:
    """Extract the minimal-coordinate model J, H, G, D at (state, phid).

    Angular rates are recomputed from phi_dot through the joint recursion so
    the velocity-dependent terms are always evaluated on the constraint
    manifold, whatever W the caller stored in the state.
    """
    p12, p13 = velocity_basis(model, state, phi_dot)
    w = (p12 @ phi_dot).reshape(7, 3)
    consistent = FullState(a=state.a, w=w)
    asm = assemble(model, consistent)
    return reduce_from_assembly(model, asm, p12, p13)


def constraint_forces(
    model: RobotModel,
    state: FullState,
    phi_dot: np.ndarray,
    t: np.ndarray,
    f_ext: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Joint forces and alignment torques as state functions (Schur solve).

    [gamma; lam] = G^-1 ([P7; P6] - C' P1^-1 (P2 + P5 T)) with C = [P3 P4]
    and G = C' P1^-1 C. This is the algebraically consistent form of the
    force-recovery expression; it never goes through the saddle system, so
    it cross-checks the KKT oracle. f_ext, when given, is an extra wrench
    already expressed in the 42-dimensional equation space (e.g. a ground
    reaction at the swing foot during double support).
    """
    p12, _ = velocity_basis(model, state, phi_dot)
    consistent = FullState(a=state.a, w=(p12 @ phi_dot).reshape(7, 3))
    asm = assemble(model, consistent)

    c = np.hstack([asm.p3, asm.p4])  # (42, 29)
    minv_c = solve_mass(model, c)
    gram = c.T @ minv_c
    forcing = asm.p2 + asm.p5 @ t
    if f_ext is not None:
        forcing = forcing + f_ext
    rhs = np.concatenate([asm.p7, asm.p6]) - minv_c.T @ forcing
    try:
        sol = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        raise ConstraintDegeneracyError("constraint degeneracy") from None
    return sol[:21], sol[21:]


def accel_from_reduced(red: ReducedModel, tau: np.ndarray) -> np.ndarray:
    """phidd = J^-1 (D tau - H - G) from an already-extracted model."""
    try:
        cho = scipy.linalg.cho_factor(red.j)
    except scipy.linalg.LinAlgError:
        raise NumericsError("reduced inertia matrix not positive definite") from None
    return scipy.linalg.cho_solve(cho, red.d @ tau - red.h - red.g)


def forward_dynamics(
    model: RobotModel,
    state: FullState,
    phi_dot: np.ndarray,
    tau: np.ndarray,
    return_full: bool = False,
):
    """Active-DOF accelerations under actuator torques tau (n-vector).

    With return_full=True also reports the full z1 = [Wdot; Xddot] obtained
    by lifting the reduced solution, for diagnostics.
    """
    red = reduce(model, state, phi_dot)
    phi_ddot = accel_from_reduced(red, tau)
    if not return_full:
        return phi_ddot
    wdot = red.p12 @ phi_ddot + red.p13
    z1 = red.p10 @ wdot + red.p11
    return phi_ddot, z1
