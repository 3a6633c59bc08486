"""Full 42-dimensional linear dynamics of the seven-link chain.

At a given state the per-link rotation and translation equations stack into

    P1 z1 = P2 + P3 gamma + P4 lam + P5 T

with z1 = [Wdot_1..Wdot_7; Xddot_1..Xddot_7], gamma in R^21 the joint forces,
lam in R^8 the pin-joint alignment torques and T in R^21 the muscular
torques. Differentiating the joint constraints gives the dual relations
P4' z1 = P6 and P3' z1 = P7 ("'" = transpose): the force maps are exactly the
transposed constraint Jacobians, which is what makes the null-space
reduction exact and the constraint forces workless. Sign conventions follow
the chain-signs table (stance chain +, swing chain -) so that this duality
holds identically; see tests for the independent cross-check.

Row order: 21 rotational rows (links 1..7 x 3) then 21 translational rows.
Column orders: gamma = [G1..G7], lam = [L2; L3; L6; L7] (2 each),
T = [T1..T7].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import FullState, gyroscopic_torque, skew
from .model import RobotModel

__all__ = ["AssemblyMatrices", "assemble", "constraint_rhs", "apply_mass", "solve_mass"]

N_ROT = 21
N_FULL = 42
N_LAM = 8


@dataclass(frozen=True)
class AssemblyMatrices:
    """The P1..P7 blocks of the full linear system at one state."""

    p1: np.ndarray  # (42, 42) block-diagonal inertia/mass
    p2: np.ndarray  # (42,)   gyroscopic + gravity bias
    p3: np.ndarray  # (42, 21) joint-force map
    p4: np.ndarray  # (42, 8)  alignment-torque map
    p5: np.ndarray  # (42, 21) muscular-torque map
    p6: np.ndarray  # (8,)
    p7: np.ndarray  # (21,)
    p2_gravity: np.ndarray  # (42,) gravity part of p2 (rot rows zero)


def _rot(i: int) -> slice:
    return slice(3 * i, 3 * i + 3)


def _trans(i: int) -> slice:
    return slice(N_ROT + 3 * i, N_ROT + 3 * i + 3)


def assemble(model: RobotModel, state: FullState) -> AssemblyMatrices:
    """Build P1..P7 at the given state."""
    sig = model.sigma
    a = state.a
    w = state.w
    eye3 = np.eye(3)

    p1 = np.zeros((N_FULL, N_FULL))
    p2 = np.zeros(N_FULL)
    p2_grav = np.zeros(N_FULL)
    p3 = np.zeros((N_FULL, N_ROT))
    p4 = np.zeros((N_FULL, N_LAM))
    p5 = np.zeros((N_FULL, N_ROT))

    for i, link in enumerate(model.links):
        p1[_rot(i), _rot(i)] = link.inertia
        p1[_trans(i), _trans(i)] = link.mass * eye3
        p2[_rot(i)] = gyroscopic_torque(link.inertia, w[i])
        p2_grav[_trans(i)] = link.mass * model.gravity

        # Joint forces: column j carries the force transmitted at joint j+1.
        # The torque arms are the K/L offsets; the translational entries are
        # the signed identity chain.
        kk_at = skew(link.k) @ a[i].T
        p3[_rot(i), 3 * i : 3 * i + 3] = -sig[i] * kk_at
        p3[_trans(i), 3 * i : 3 * i + 3] = sig[i] * eye3
        if i < 6:
            ll_at = skew(link.l) @ a[i].T
            p3[_rot(i), 3 * (i + 1) : 3 * (i + 1) + 3] = sig[i + 1] * ll_at
            p3[_trans(i), 3 * (i + 1) : 3 * (i + 1) + 3] = -sig[i + 1] * eye3

        # Muscular torques: proximal torque arrives expressed in the parent
        # frame, the distal torque reacts on the parent with opposite sign.
        rel = a[i].T @ a[i - 1] if i > 0 else a[0].T
        p5[_rot(i), 3 * i : 3 * i + 3] = sig[i] * rel
        if i < 6:
            p5[_rot(i), 3 * (i + 1) : 3 * (i + 1) + 3] = -sig[i] * eye3

    for b, con in enumerate(model.constraints):
        p, c = con.parent, con.child
        cols = slice(2 * b, 2 * b + 2)
        p4[_rot(p), cols] = -sig[p] * con.r
        p4[_rot(c), cols] = sig[c] * (a[c].T @ a[p]) @ con.r

    p6, p7 = constraint_rhs(model, state)
    return AssemblyMatrices(
        p1=p1, p2=p2 + p2_grav, p3=p3, p4=p4, p5=p5, p6=p6, p7=p7, p2_gravity=p2_grav
    )


def constraint_rhs(model: RobotModel, state: FullState) -> tuple[np.ndarray, np.ndarray]:
    """Velocity-quadratic right-hand sides of the differentiated constraints.

    p6 (8,) pairs with the pin-alignment rows P4' z1 = p6; p7 (21,) with the
    twice-differentiated attachment rows P3' z1 = p7.
    """
    sig = model.sigma
    a = state.a
    w = state.w

    p6 = np.zeros(N_LAM)
    for b, con in enumerate(model.constraints):
        p, c = con.parent, con.child
        p6[2 * b : 2 * b + 2] = sig[c] * (
            con.r.T @ np.cross(w[p], a[p].T @ (a[c] @ w[c]))
        )

    p7 = np.zeros(N_ROT)
    ww2 = [skew(w[i]) @ skew(w[i]) for i in range(7)]
    for i, link in enumerate(model.links):
        block = a[i] @ (ww2[i] @ link.k)
        if i > 0:
            block = block - a[i - 1] @ (ww2[i - 1] @ model.links[i - 1].l)
        p7[3 * i : 3 * i + 3] = sig[i] * block
    return p6, p7


def apply_mass(model: RobotModel, x: np.ndarray) -> np.ndarray:
    """P1 @ x without forming the dense product (block-diagonal structure)."""
    out = np.empty_like(x)
    for i, link in enumerate(model.links):
        out[_rot(i)] = link.inertia @ x[_rot(i)]
        out[_trans(i)] = link.mass * x[_trans(i)]
    return out


def solve_mass(model: RobotModel, x: np.ndarray) -> np.ndarray:
    """P1^-1 @ x via per-link 3x3 solves; x may be a vector or matrix."""
    out = np.empty_like(x, dtype=float)
    for i, link in enumerate(model.links):
        out[_rot(i)] = np.linalg.solve(link.inertia, x[_rot(i)])
        out[_trans(i)] = x[_trans(i)] / link.mass
    return out
