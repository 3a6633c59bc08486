"""Swing-foot contact: constrained model, impact map, double-support force.

The contact point E is the distal end of link 7. During double support the
ground reaction is the force that zeroes the contact-point acceleration; at
touchdown the velocity jump is the perfectly plastic impulsive solution of
the reduced model (no rebound).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ImpactDegeneracyError, NumericsError
from .kinematics import FullState, chain_positions, skew
from .model import RobotModel
from .reduction import ReducedModel, velocity_basis

__all__ = [
    "Phase",
    "ContactState",
    "contact_point",
    "contact_map",
    "contact_jacobian",
    "contact_jacobian_rate",
    "impact_map",
    "dsp_contact_force",
    "detect_touchdown",
]


class Phase(enum.Enum):
    SINGLE_SUPPORT = "ssp"
    IMPACT = "impact"
    DOUBLE_SUPPORT = "dsp"


@dataclass(frozen=True)
class ContactState:
    e: np.ndarray  # (3,) contact point, inertial frame
    e_jac: np.ndarray  # (3, n)
    phase: Phase


def contact_point(model: RobotModel, state: FullState) -> np.ndarray:
    """Swing-foot contact point: distal point of link 7."""
    x = chain_positions(model, state)
    return x[6] + state.a[6] @ model.foot_offset


def contact_map(model: RobotModel, state: FullState) -> np.ndarray:
    """(3, 21) map from stacked link rates to the contact-point velocity.

    Telescoping the chain gives Edot = sum_i A_i (w_i x r_i) with r_i the
    joint-to-joint vector of link i (r_7 reaching the contact point).
    """
    c = np.empty((3, 21))
    for i, link in enumerate(model.links):
        r = link.k - (link.l if i < 6 else -model.foot_offset)
        c[:, 3 * i : 3 * i + 3] = -state.a[i] @ skew(r)
    return c


def contact_jacobian(model: RobotModel, state: FullState) -> np.ndarray:
    """(3, n) analytic Jacobian: Edot = e_jac @ phid."""
    p12, _ = velocity_basis(model, state, np.zeros(model.n_dof))
    return contact_map(model, state) @ p12


def contact_jacobian_rate(
    model: RobotModel, state: FullState, phi_dot: np.ndarray
) -> np.ndarray:
    """(3,) velocity product d(e_jac)/dt @ phid, so Eddot = e_jac phidd + this."""
    p12, p13 = velocity_basis(model, state, phi_dot)
    w = (p12 @ phi_dot).reshape(7, 3)
    out = np.zeros(3)
    for i, link in enumerate(model.links):
        r = link.k - (link.l if i < 6 else -model.foot_offset)
        out += state.a[i] @ np.cross(w[i], np.cross(w[i], r))
        out -= state.a[i] @ np.cross(r, p13[3 * i : 3 * i + 3])
    return out


def _contact_gram(red: ReducedModel, e_jac: np.ndarray):
    cho = scipy.linalg.cho_factor(red.j)
    jinv_ejact = scipy.linalg.cho_solve(cho, e_jac.T)  # (n, 3)
    gram = e_jac @ jinv_ejact
    return cho, jinv_ejact, gram


def impact_map(
    red: ReducedModel, e_jac: np.ndarray, phi_dot_minus: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Plastic touchdown: returns (phid_plus, impulse).

    impulse = -(e_jac J^-1 e_jac')^-1 e_jac phid-; the post-impact rates
    satisfy e_jac phid+ = 0 and conserve generalized momentum orthogonal to
    the contact rows.
    """
    _, jinv_ejact, gram = _contact_gram(red, e_jac)
    try:
        impulse = -np.linalg.solve(gram, e_jac @ phi_dot_minus)
    except np.linalg.LinAlgError:
        raise ImpactDegeneracyError("impact degeneracy") from None
    if not np.all(np.isfinite(impulse)):
        raise ImpactDegeneracyError("impact degeneracy")
    phi_dot_plus = phi_dot_minus + jinv_ejact @ impulse
    return phi_dot_plus, impulse


def dsp_contact_force(
    red: ReducedModel,
    e_jac: np.ndarray,
    e_jac_rate: np.ndarray,
    tau: np.ndarray,
) -> np.ndarray:
    """Ground reaction at the second support point enforcing Eddot = 0.

    gc = (e_jac J^-1 e_jac')^-1 [e_jac J^-1 (H + G - D tau) - e_jac_rate]
    where e_jac_rate = d(e_jac)/dt phid.
    """
    cho, _, gram = _contact_gram(red, e_jac)
    free = scipy.linalg.cho_solve(cho, red.h + red.g - red.d @ tau)
    try:
        return np.linalg.solve(gram, e_jac @ free - e_jac_rate)
    except np.linalg.LinAlgError:
        raise NumericsError("singular contact Gram matrix") from None


def detect_touchdown(e_z_prev: float, e_z_curr: float) -> float | None:
    """Downward zero crossing between consecutive samples.

    Returns the linear-interpolation fraction in [0, 1], or None. A grazing
    touch (both exactly zero) counts as an event at fraction 0.
    """
    if e_z_prev < 0.0:
        return None  # already below: no *crossing* in this interval
    if e_z_curr > 0.0:
        return None
    if e_z_prev == 0.0 and e_z_curr == 0.0:
        return 0.0
    denom = e_z_prev - e_z_curr
    if denom <= 0.0:
        return 0.0 if e_z_curr == 0.0 else None
    return float(e_z_prev / denom)
