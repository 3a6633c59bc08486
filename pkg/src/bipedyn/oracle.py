"""Brute-force ground truth for the reduction pipeline.

Solves the full 71-unknown saddle-point system in (z1, gamma, lam) directly,
provides independently assembled constraint Jacobians (differentiated from
the joint-attachment and pin-alignment equations, not transposed from the
force maps), finite-difference utilities and an energy audit. Nothing here
reuses the substitution chain of the reduction module, so agreement between
the two is evidence rather than tautology.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .assembly import AssemblyMatrices
from .kinematics import FullState, chain_positions, com_velocities, kinetic_energy, skew
from .model import RobotModel
from .errors import NumericsError

__all__ = [
    "KktSolution",
    "solve_kkt",
    "fd_derivative",
    "holonomic_jacobian",
    "nonholonomic_jacobian",
    "total_energy",
]


@dataclass(frozen=True)
class KktSolution:
    z1: np.ndarray  # (42,)
    gamma: np.ndarray  # (21,)
    lam: np.ndarray  # (8,)
    residuals: dict


def solve_kkt(asm: AssemblyMatrices, t: np.ndarray) -> KktSolution:
    """Solve the joint saddle-point system

        [P1   -P3  -P4] [z1   ]   [P2 + P5 T]
        [P3'   0    0 ] [gamma] = [P7       ]
        [P4'   0    0 ] [lam  ]   [P6       ]

    by dense LU with one step of iterative refinement.
    """
    n1, n3, n4 = 42, 21, 8
    n = n1 + n3 + n4
    kkt = np.zeros((n, n))
    kkt[:n1, :n1] = asm.p1
    kkt[:n1, n1 : n1 + n3] = -asm.p3
    kkt[:n1, n1 + n3 :] = -asm.p4
    kkt[n1 : n1 + n3, :n1] = asm.p3.T
    kkt[n1 + n3 :, :n1] = asm.p4.T

    rhs = np.concatenate([asm.p2 + asm.p5 @ t, asm.p7, asm.p6])
    try:
        lu, piv = scipy.linalg.lu_factor(kkt)
    except scipy.linalg.LinAlgError as exc:
        raise NumericsError(f"singular saddle-point system: {exc}") from None
    sol = scipy.linalg.lu_solve((lu, piv), rhs)
    # Saddle-point systems lose a few digits; one refinement step recovers them.
    resid = rhs - kkt @ sol
    sol = sol + scipy.linalg.lu_solve((lu, piv), resid)
    if not np.all(np.isfinite(sol)):
        smin = np.linalg.svd(kkt, compute_uv=False)[-1]
        raise NumericsError(f"singular saddle-point system (smallest singular value {smin:.3e})")

    z1 = sol[:n1]
    gamma = sol[n1 : n1 + n3]
    lam = sol[n1 + n3 :]
    scale = max(float(np.linalg.norm(rhs)), 1.0)
    residuals = {
        "dynamics": float(np.linalg.norm(asm.p1 @ z1 - asm.p2 - asm.p3 @ gamma - asm.p4 @ lam - asm.p5 @ t)) / scale,
        "holonomic": float(np.linalg.norm(asm.p3.T @ z1 - asm.p7)) / scale,
        "nonholonomic": float(np.linalg.norm(asm.p4.T @ z1 - asm.p6)) / scale,
    }
    return KktSolution(z1=z1, gamma=gamma, lam=lam, residuals=residuals)


def fd_derivative(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference Jacobian, one column per input component."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(f(x))
    jac = np.empty((f0.size, x.size))
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = h
        jac[:, k] = (np.atleast_1d(f(x + dx)) - np.atleast_1d(f(x - dx))) / (2.0 * h)
    return jac


def holonomic_jacobian(model: RobotModel, state: FullState) -> np.ndarray:
    """Coefficient matrix of the twice-differentiated attachment constraints.

    Row block i is sigma_i * d^2/dt^2 (x_i - A_i K_i + A_{i-1} L_{i-1} - x_{i-1})
    collected on [Wdot; Xddot]. By construction this must equal P3 transposed.
    """
    sig = model.sigma
    a = state.a
    jac = np.zeros((21, 42))
    for i, link in enumerate(model.links):
        rows = slice(3 * i, 3 * i + 3)
        jac[rows, 3 * i : 3 * i + 3] = sig[i] * (a[i] @ skew(link.k))
        jac[rows, 21 + 3 * i : 21 + 3 * i + 3] = sig[i] * np.eye(3)
        if i > 0:
            prev = model.links[i - 1]
            jac[rows, 3 * (i - 1) : 3 * i] = -sig[i] * (a[i - 1] @ skew(prev.l))
            jac[rows, 21 + 3 * (i - 1) : 21 + 3 * i] = -sig[i] * np.eye(3)
    return jac


def nonholonomic_jacobian(model: RobotModel, state: FullState) -> np.ndarray:
    """Coefficient matrix of the differentiated pin-alignment constraints.

    Row pair b is sigma_c * d/dt [R' (A_p' A_c w_c - w_p)] collected on Wdot.
    By construction this must equal P4 transposed.
    """
    sig = model.sigma
    a = state.a
    jac = np.zeros((8, 42))
    for b, con in enumerate(model.constraints):
        p, c = con.parent, con.child
        rows = slice(2 * b, 2 * b + 2)
        jac[rows, 3 * c : 3 * c + 3] = sig[c] * (con.r.T @ (a[p].T @ a[c]))
        jac[rows, 3 * p : 3 * p + 3] = -sig[c] * con.r.T
    return jac


def total_energy(model: RobotModel, state: FullState) -> float:
    """Kinetic plus gravitational potential energy of the chain."""
    x = chain_positions(model, state)
    potential = -float(np.sum(model.masses[:, None] * model.gravity[None, :] * x) )
    return kinetic_energy(model, state) + potential


def com_velocity_stack(model: RobotModel, state: FullState) -> np.ndarray:
    """(42,) stacked [w_1..w_7; xdot_1..xdot_7], chain-consistent."""
    return np.concatenate([state.w.ravel(), com_velocities(model, state).ravel()])
