"""Randomized invariant suite: the model's self-checks at a given seed.

Every check draws constraint-consistent random states from a seeded
generator, measures a residual that the theory says must vanish, and
compares against a fixed tolerance. The same suite backs the `check` CLI
command, the /check service endpoint and the acceptance tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble
from .kinematics import FullState
from .model import RobotModel, LinkParams
from .oracle import holonomic_jacobian, nonholonomic_jacobian, solve_kkt
from .reduction import (
    accel_from_reduced,
    actuation_map,
    constraint_forces,
    reduce,
)
from .sim import ReducedState, build_full_state, _rot_entries, _pin_entries

__all__ = ["CheckResult", "run_checks", "random_rotation", "random_state"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    samples: int
    max_residual: float
    tolerance: float
    passed: bool


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    from .kinematics import rotation_about

    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return rotation_about(axis, rng.uniform(-np.pi, np.pi))


def random_state(
    model: RobotModel,
    rng: np.random.Generator,
    angle_scale: float = 1.0,
    rate_scale: float = 1.0,
) -> tuple[FullState, np.ndarray]:
    """Constraint-consistent random state: random posture blocks plus random
    active-DOF rates; the link rates are reconstructed through the basis."""
    rots = []
    for entry in _rot_entries(model):
        if angle_scale >= 1.0:
            rots.append(random_rotation(rng))
        else:
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            from .kinematics import rotation_about

            rots.append(rotation_about(axis, angle_scale * rng.uniform(-np.pi, np.pi)))
    pins = angle_scale * rng.uniform(-np.pi / 2, np.pi / 2, size=len(_pin_entries(model)))
    phi_dot = rate_scale * rng.standard_normal(model.n_dof)
    st = ReducedState(
        rots=tuple(rots), pins=pins, phi_dot=phi_dot,
        x_audit=np.zeros((7, 3)), xd_audit=np.zeros((7, 3)),
    )
    return build_full_state(model, st), phi_dot


def _scaled(num: float, *mats: np.ndarray) -> float:
    denom = 1.0
    for m in mats:
        denom *= max(np.linalg.norm(m), 1e-300)
    return num / denom


def run_checks(model: RobotModel, seed: int = 0, samples: int = 1000) -> list[CheckResult]:
    """Run the full invariant suite; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    s_map = actuation_map(model)
    n = model.n_dof

    duality_samples = max(1, min(samples, max(samples // 10, 100)))
    res_dual_h = 0.0
    res_dual_nh = 0.0
    res_ann_lift = 0.0
    res_ann_basis = 0.0
    res_kkt = 0.0
    res_accel = 0.0
    res_forces = 0.0
    res_jsym = 0.0
    res_jpd = 0.0

    for k in range(samples):
        state, phi_dot = random_state(model, rng)
        tau = rng.standard_normal(n)
        t_full = s_map @ tau

        asm = assemble(model, state)
        if k < duality_samples:
            res_dual_h = max(res_dual_h, float(np.max(np.abs(asm.p3.T - holonomic_jacobian(model, state)))))
            res_dual_nh = max(res_dual_nh, float(np.max(np.abs(asm.p4.T - nonholonomic_jacobian(model, state)))))

        red = reduce(model, state, phi_dot)
        res_ann_lift = max(res_ann_lift, _scaled(np.linalg.norm(red.p10.T @ asm.p3), red.p10, asm.p3))
        res_ann_basis = max(
            res_ann_basis,
            _scaled(np.linalg.norm(red.p12.T @ (red.p10.T @ asm.p4)), red.p12, red.p10, asm.p4),
        )

        sol = solve_kkt(asm, t_full)
        res_kkt = max(res_kkt, max(sol.residuals.values()))

        phidd_red = accel_from_reduced(red, tau)
        wdot = sol.z1[:21]
        phidd_kkt, *_ = np.linalg.lstsq(red.p12, wdot - red.p13, rcond=None)
        denom = max(np.linalg.norm(phidd_kkt), 1.0)
        res_accel = max(res_accel, float(np.linalg.norm(phidd_red - phidd_kkt)) / denom)

        gamma, lam = constraint_forces(model, state, phi_dot, t_full)
        denom_f = max(np.linalg.norm(np.concatenate([sol.gamma, sol.lam])), 1.0)
        diff = np.linalg.norm(np.concatenate([gamma - sol.gamma, lam - sol.lam]))
        res_forces = max(res_forces, float(diff) / denom_f)

        jn = np.linalg.norm(red.j)
        res_jsym = max(res_jsym, float(np.linalg.norm(red.j - red.j.T)) / jn)
        min_eig = float(np.min(np.linalg.eigvalsh(red.j)))
        res_jpd = max(res_jpd, max(0.0, -min_eig / jn))

    # inertia scaling: doubling all masses and inertias doubles J exactly
    state, phi_dot = random_state(model, rng)
    doubled = RobotModel(
        links=tuple(
            LinkParams(mass=2 * lk.mass, inertia=2 * lk.inertia, k=lk.k, l=lk.l)
            for lk in model.links
        ),
        constraints=model.constraints,
        gravity=model.gravity,
        foot_offset=model.foot_offset,
        base_free_axes=model.base_free_axes,
    )
    j1 = reduce(model, state, phi_dot).j
    j2 = reduce(doubled, state, phi_dot).j
    res_scale = float(np.linalg.norm(j2 - 2.0 * j1) / np.linalg.norm(j1))

    def result(name, count, residual, tol):
        return CheckResult(name, count, residual, tol, residual <= tol)

    return [
        result("duality_holonomic", duality_samples, res_dual_h, 1e-12),
        result("duality_nonholonomic", duality_samples, res_dual_nh, 1e-12),
        result("annihilation_lift_p10t_p3", samples, res_ann_lift, 1e-10),
        result("annihilation_basis_p12t_p10t_p4", samples, res_ann_basis, 1e-10),
        result("kkt_residuals", samples, res_kkt, 1e-9),
        result("oracle_accel_equivalence", samples, res_accel, 1e-8),
        result("oracle_force_equivalence", samples, res_forces, 1e-9),
        result("inertia_symmetry", samples, res_jsym, 1e-10),
        result("inertia_positive_definite", samples, res_jpd, 0.0),
        result("inertia_mass_scaling", 1, res_scale, 1e-12),
    ]
