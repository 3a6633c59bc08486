"""Rotation algebra and chain kinematics.

Everything here is a pure function of immutable inputs. Orientations are
kept as rotation matrices throughout; Euler angles only appear at the
edges (configs, trajectory exports).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "skew",
    "cross3",
    "unskew",
    "euler_zyx_to_rotation",
    "rotation_to_euler_zyx",
    "rotation_about",
    "rotation_log",
    "polar_orthonormalize",
    "orthogonality_residual",
    "rotation_rate",
    "gyroscopic_torque",
    "FullState",
    "chain_positions",
    "com_velocities",
    "kinetic_energy",
]


def skew(w: np.ndarray) -> np.ndarray:
    """Antisymmetric matrix S with S @ v == cross(w, v)."""
    wx, wy, wz = w
    return np.array([
        [0.0, -wz, wy],
        [wz, 0.0, -wx],
        [-wy, wx, 0.0],
    ])


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product of two 3-vectors (np.cross has heavy call overhead)."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def unskew(s: np.ndarray) -> np.ndarray:
    """Inverse of :func:`skew` (takes the antisymmetric part first)."""
    return 0.5 * np.array([s[2, 1] - s[1, 2], s[0, 2] - s[2, 0], s[1, 0] - s[0, 1]])


def euler_zyx_to_rotation(angles: np.ndarray) -> np.ndarray:
    """Intrinsic Z-Y-X (yaw, pitch, roll) angles to a rotation matrix."""
    cz, sz = np.cos(angles[0]), np.sin(angles[0])
    cy, sy = np.cos(angles[1]), np.sin(angles[1])
    cx, sx = np.cos(angles[2]), np.sin(angles[2])
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    return rz @ ry @ rx


def rotation_to_euler_zyx(r: np.ndarray) -> np.ndarray:
    """Extract intrinsic Z-Y-X angles; pitch is clamped at the gimbal poles."""
    pitch = np.arcsin(np.clip(-r[2, 0], -1.0, 1.0))
    yaw = np.arctan2(r[1, 0], r[0, 0])
    roll = np.arctan2(r[2, 1], r[2, 2])
    return np.array([yaw, pitch, roll])


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    c, s = np.cos(angle), np.sin(angle)
    ax = skew(axis)
    return np.eye(3) + s * ax + (1.0 - c) * (ax @ ax)


def rotation_log(r: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (principal branch)."""
    cos_a = np.clip((np.trace(r) - 1.0) * 0.5, -1.0, 1.0)
    angle = np.arccos(cos_a)
    if angle < 1e-10:
        return unskew(r)
    if np.pi - angle < 1e-6:
        # Near pi the off-diagonal formula degenerates; use the outer-product form.
        b = 0.5 * (r + np.eye(3))
        axis = np.sqrt(np.clip(np.diag(b), 0.0, None))
        # Fix component signs from the largest row.
        k = int(np.argmax(axis))
        axis = b[k] / max(axis[k], 1e-12)
        axis /= np.linalg.norm(axis)
        return angle * axis
    return angle / (2.0 * np.sin(angle)) * np.array(
        [r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]]
    )


def polar_orthonormalize(r: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius norm (polar projection)."""
    u, _, vt = np.linalg.svd(r)
    d = np.sign(np.linalg.det(u @ vt))
    u[:, -1] *= d
    return u @ vt


def orthogonality_residual(r: np.ndarray) -> float:
    return float(np.linalg.norm(r.T @ r - np.eye(3)))


def rotation_rate(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Time derivative of a rotation matrix for body-frame angular velocity w."""
    return a @ skew(w)


def gyroscopic_torque(inertia: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Body-frame torque -w x (I w) that balances the Euler equation."""
    return -cross3(w, inertia @ w)


@dataclass(frozen=True)
class FullState:
    """Per-link rotation matrices (body -> inertial) and body angular rates.

    a: (7, 3, 3), w: (7, 3). Validity = each a[i] orthogonal with det +1.
    """

    a: np.ndarray
    w: np.ndarray

    def validate(self, tol: float = 1e-10) -> None:
        if self.a.shape != (7, 3, 3) or self.w.shape != (7, 3):
            raise ValueError(f"bad state shapes {self.a.shape}, {self.w.shape}")
        for i in range(7):
            res = orthogonality_residual(self.a[i])
            det = np.linalg.det(self.a[i])
            if res > tol or abs(det - 1.0) > tol:
                raise ValueError(
                    f"link {i + 1} rotation not orthonormal (residual {res:.2e}, det {det:.6f})"
                )
        if not np.all(np.isfinite(self.w)):
            raise ValueError("non-finite angular velocity")

    @staticmethod
    def identity() -> "FullState":
        return FullState(a=np.tile(np.eye(3), (7, 1, 1)), w=np.zeros((7, 3)))


def chain_positions(model, state: FullState) -> np.ndarray:
    """Centers of mass of all links, inertial frame, stance contact at origin.

    Forward recursion x_i = A_i K_i - A_{i-1} L_{i-1} + x_{i-1}, seeded with
    x_1 = A_1 K_1.
    """
    x = np.empty((7, 3))
    x[0] = state.a[0] @ model.links[0].k
    for i in range(1, 7):
        x[i] = state.a[i] @ model.links[i].k - state.a[i - 1] @ model.links[i - 1].l + x[i - 1]
    return x


def com_velocities(model, state: FullState) -> np.ndarray:
    """Center-of-mass velocities consistent with the attachment constraints."""
    v = np.empty((7, 3))
    v[0] = state.a[0] @ cross3(state.w[0], model.links[0].k)
    for i in range(1, 7):
        v[i] = (
            state.a[i] @ cross3(state.w[i], model.links[i].k)
            - state.a[i - 1] @ cross3(state.w[i - 1], model.links[i - 1].l)
            + v[i - 1]
        )
    return v


def kinetic_energy(model, state: FullState) -> float:
    """1/2 sum(w' I w) + 1/2 sum(m |xdot|^2), with chain-consistent xdot."""
    v = com_velocities(model, state)
    e = 0.0
    for i, link in enumerate(model.links):
        e += 0.5 * float(state.w[i] @ link.inertia @ state.w[i])
        e += 0.5 * link.mass * float(v[i] @ v[i])
    return e
