"""Walking-cycle simulation of the reduced dynamics.

The integrated state is the minimal-coordinate pair (posture, phid): posture
as rotation blocks (base orientation, ball-joint rotations) plus pin angles,
phid as the active-DOF quasi-velocities of the velocity basis. Full link
orientations are reconstructed through the joint recursion at every
evaluation, so the attachment constraints hold structurally; center-of-mass
positions are additionally co-integrated from the lifted accelerations
purely as a drift audit (they never feed back).

Phases run single support -> impact -> double support -> single support,
with touchdown located by bisection and the support exchange done by
mirroring the chain.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import contact as ct
from .errors import ModelConfigError, NumericsError
from .kinematics import (
    FullState,
    chain_positions,
    com_velocities,
    euler_zyx_to_rotation,
    kinetic_energy,
    orthogonality_residual,
    polar_orthonormalize,
    rotation_about,
    rotation_log,
    rotation_to_euler_zyx,
    skew,
)
from .model import JointConstraint, LinkParams, RobotModel
from .oracle import total_energy
from .reduction import (
    ReducedModel,
    accel_from_reduced,
    actuation_map,
    constraint_forces,
    reduce,
    velocity_basis,
)

__all__ = [
    "SimConfig",
    "parse_sim_config",
    "ReducedState",
    "initial_state",
    "build_full_state",
    "state_chart",
    "chart_to_state",
    "step",
    "computed_torque",
    "posture_error",
    "TrackingReference",
    "simulate",
    "mirror_support",
    "Trajectory",
]

_ORTHO_TRIGGER = 1e-9
_BISECT_MAX = 80


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration: float = 1.0
    integrator: str = "rk4"  # or "semi_implicit_euler"
    controller: str = "none"  # none | gravity | tracking
    kp: np.ndarray | float = 100.0
    kd: np.ndarray | float = 20.0
    event_tol: float = 1e-9
    drift_tol: float = 1e-6
    dsp_max_duration: float = 0.3
    record_stride: int = 1
    record_forces: bool = True
    phi0: np.ndarray | None = None
    phidot0: np.ndarray | None = None
    ref_target: np.ndarray | None = None
    ref_duration: float = 1.0

    def validate(self) -> None:
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ModelConfigError(f"sim.dt must be positive, got {self.dt}")
        if self.duration <= 0.0:
            raise ModelConfigError("sim.duration must be positive")
        if self.integrator not in ("rk4", "semi_implicit_euler"):
            raise ModelConfigError(f"sim.integrator: unknown integrator {self.integrator!r}")
        if self.controller not in ("none", "gravity", "tracking"):
            raise ModelConfigError(f"sim.controller: unknown controller {self.controller!r}")
        if np.any(np.asarray(self.kp) < 0.0) or np.any(np.asarray(self.kd) < 0.0):
            raise ModelConfigError("sim gains must be non-negative")
        if self.record_stride < 1:
            raise ModelConfigError("sim.record_stride must be >= 1")
        if self.controller == "tracking" and self.ref_target is None:
            raise ModelConfigError("reference.target required for the tracking controller")


def parse_sim_config(text: str) -> SimConfig:
    import configparser

    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ModelConfigError(f"sim config parse failure: {exc}") from None

    known = {"sim", "initial", "reference"}
    for sec in cp.sections():
        if sec not in known:
            raise ModelConfigError(f"unknown section [{sec}]")

    kw = {}
    if "sim" in cp:
        sec = cp["sim"]
        scalars = {
            "dt": float, "duration": float, "event_tol": float, "drift_tol": float,
            "dsp_max_duration": float, "record_stride": int,
        }
        for key in sec:
            if key in scalars:
                kw[key] = scalars[key](sec[key])
            elif key in ("integrator", "controller"):
                kw[key] = sec[key].strip()
            elif key in ("kp", "kd"):
                vals = np.array([float(x) for x in sec[key].split()])
                kw[key] = float(vals[0]) if vals.size == 1 else vals
            elif key == "record_forces":
                kw[key] = sec[key].strip().lower() in ("1", "true", "yes")
            else:
                raise ModelConfigError(f"sim.{key}: unknown key")
    if "initial" in cp:
        sec = cp["initial"]
        for key in sec:
            if key == "phi":
                kw["phi0"] = np.array([float(x) for x in sec[key].split()])
            elif key == "phidot":
                kw["phidot0"] = np.array([float(x) for x in sec[key].split()])
            else:
                raise ModelConfigError(f"initial.{key}: unknown key")
    if "reference" in cp:
        sec = cp["reference"]
        for key in sec:
            if key == "target":
                kw["ref_target"] = np.array([float(x) for x in sec[key].split()])
            elif key == "duration":
                kw["ref_duration"] = float(sec[key])
            else:
                raise ModelConfigError(f"reference.{key}: unknown key")

    cfg = SimConfig(**kw)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# reduced state


@dataclass(frozen=True)
class ReducedState:
    """Minimal-coordinate state plus the drift-audit integrals.

    rots holds one rotation matrix per base/ball layout entry (in layout
    order), pins one angle per pin entry. x_audit/xd_audit are the
    co-integrated center-of-mass positions and velocities.
    """

    rots: tuple[np.ndarray, ...]
    pins: np.ndarray
    phi_dot: np.ndarray
    x_audit: np.ndarray  # (7, 3)
    xd_audit: np.ndarray  # (7, 3)


def _rot_entries(model: RobotModel):
    return [e for e in model.dof_layout if e.kind in ("base", "ball")]


def _pin_entries(model: RobotModel):
    return [e for e in model.dof_layout if e.kind == "pin"]


def _orientation_chain(model: RobotModel, st: ReducedState) -> np.ndarray:
    a = np.empty((7, 3, 3))
    rot_iter = iter(st.rots)
    pin_iter = iter(st.pins)
    a[0] = next(rot_iter)
    for entry in model.dof_layout[1:]:
        c = entry.link
        if entry.kind == "pin":
            con = model.constraint_at(c + 1)
            a[c] = a[c - 1] @ rotation_about(con.q, float(next(pin_iter)))
        else:
            a[c] = a[c - 1] @ next(rot_iter)
    return a


def build_full_state(model: RobotModel, st: ReducedState) -> FullState:
    """Reconstruct all link orientations and consistent angular rates."""
    a = _orientation_chain(model, st)
    shell = FullState(a=a, w=np.zeros((7, 3)))
    p12, _ = velocity_basis(model, shell, st.phi_dot)
    return FullState(a=a, w=(p12 @ st.phi_dot).reshape(7, 3))


def chart_to_state(
    model: RobotModel, chart: np.ndarray, phi_dot: np.ndarray | None = None
) -> ReducedState:
    """Build a state from chart coordinates (angles, length n).

    Base and ball blocks are intrinsic Z-Y-X angles (a pinned base uses one
    angle per free axis, composed in descending axis order); pin blocks are
    the joint angle about Q. phi_dot entries are quasi-velocities: body
    angular-rate components for base/ball blocks, angle rates for pins.
    """
    n = model.n_dof
    chart = np.asarray(chart, dtype=float)
    if chart.shape != (n,):
        raise ModelConfigError(f"posture chart must have {n} values, got {chart.shape}")
    rots = []
    pins = []
    for entry in model.dof_layout:
        vals = chart[entry.col : entry.col + entry.width]
        if entry.kind == "pin":
            pins.append(vals[0])
        elif entry.width == 3:
            rots.append(euler_zyx_to_rotation(vals))
        else:
            r = np.eye(3)
            for axis, ang in sorted(zip(entry.axes, vals), reverse=True):
                e = np.zeros(3)
                e[axis] = 1.0
                r = r @ rotation_about(e, ang)
            rots.append(r)
    phi_dot = np.zeros(n) if phi_dot is None else np.asarray(phi_dot, dtype=float)
    if phi_dot.shape != (n,):
        raise ModelConfigError(f"phidot must have {n} values, got {phi_dot.shape}")
    st = ReducedState(
        rots=tuple(rots), pins=np.array(pins), phi_dot=phi_dot,
        x_audit=np.zeros((7, 3)), xd_audit=np.zeros((7, 3)),
    )
    full = build_full_state(model, st)
    return replace(
        st, x_audit=chain_positions(model, full), xd_audit=com_velocities(model, full)
    )


def initial_state(model: RobotModel, cfg: SimConfig) -> ReducedState:
    n = model.n_dof
    chart = cfg.phi0 if cfg.phi0 is not None else np.zeros(n)
    return chart_to_state(model, chart, cfg.phidot0)


def state_chart(model: RobotModel, st: ReducedState) -> np.ndarray:
    """Chart coordinates (length n) of the current posture."""
    out = np.empty(model.n_dof)
    rot_iter = iter(st.rots)
    pin_iter = iter(st.pins)
    for entry in model.dof_layout:
        if entry.kind == "pin":
            out[entry.col] = next(pin_iter)
        else:
            r = next(rot_iter)
            if entry.width == 3:
                out[entry.col : entry.col + 3] = rotation_to_euler_zyx(r)
            else:
                log = rotation_log(r)
                for k, axis in enumerate(entry.axes):
                    out[entry.col + k] = log[axis]
    return out


def _base_rate(model: RobotModel, phi_dot: np.ndarray) -> np.ndarray:
    entry = model.dof_layout[0]
    w = np.zeros(3)
    for k, axis in enumerate(entry.axes):
        w[axis] = phi_dot[entry.col + k]
    return w


# ---------------------------------------------------------------------------
# flat packing for the integrators


def _pack(st: ReducedState) -> np.ndarray:
    parts = [r.ravel() for r in st.rots]
    parts.append(st.pins)
    parts.append(st.phi_dot)
    parts.append(st.x_audit.ravel())
    parts.append(st.xd_audit.ravel())
    return np.concatenate(parts)


def _unpack(model: RobotModel, y: np.ndarray) -> ReducedState:
    n_rot = len(_rot_entries(model))
    n_pin = len(_pin_entries(model))
    n = model.n_dof
    rots = tuple(y[9 * i : 9 * i + 9].reshape(3, 3) for i in range(n_rot))
    off = 9 * n_rot
    pins = y[off : off + n_pin]
    off += n_pin
    phi_dot = y[off : off + n]
    off += n
    x_audit = y[off : off + 21].reshape(7, 3)
    xd_audit = y[off + 21 : off + 42].reshape(7, 3)
    return ReducedState(rots=rots, pins=pins, phi_dot=phi_dot, x_audit=x_audit, xd_audit=xd_audit)


@dataclass
class _EvalInfo:
    red: ReducedModel
    tau: np.ndarray
    gamma_c: np.ndarray
    full: FullState


def _dynamics(model, st: ReducedState, t: float, torque_fn, dsp_active: bool):
    """Time derivative of the packed state plus evaluation byproducts."""
    full = build_full_state(model, st)
    red = reduce(model, full, st.phi_dot)
    tau = torque_fn(t, model, st, full, red)
    gamma_c = np.zeros(3)
    if dsp_active:
        e_jac = ct.contact_map(model, full) @ red.p12
        rate = _contact_rate(model, full, red.p13)
        gamma_c = ct.dsp_contact_force(red, e_jac, rate, tau)
        rhs = red.d @ tau - red.h - red.g + e_jac.T @ gamma_c
        phi_ddot = scipy.linalg.cho_solve(scipy.linalg.cho_factor(red.j), rhs)
    else:
        phi_ddot = accel_from_reduced(red, tau)

    wdot = red.p12 @ phi_ddot + red.p13
    z1 = red.p10 @ wdot + red.p11
    xdd = z1[21:].reshape(7, 3)

    rot_dots = []
    rot_iter = iter(st.rots)
    base = next(rot_iter)
    rot_dots.append(base @ skew(_base_rate(model, st.phi_dot)))
    for entry in model.dof_layout[1:]:
        if entry.kind == "ball":
            b = next(rot_iter)
            eta = st.phi_dot[entry.col : entry.col + 3]
            rot_dots.append(b @ skew(eta))
    pin_rates = np.array([st.phi_dot[e.col] for e in _pin_entries(model)])

    deriv = ReducedState(
        rots=tuple(rot_dots), pins=pin_rates, phi_dot=phi_ddot,
        x_audit=st.xd_audit, xd_audit=xdd,
    )
    return deriv, _EvalInfo(red=red, tau=tau, gamma_c=gamma_c, full=full)


def _contact_rate(model: RobotModel, full: FullState, p13: np.ndarray) -> np.ndarray:
    out = np.zeros(3)
    for i, link in enumerate(model.links):
        r = link.k - (link.l if i < 6 else -model.foot_offset)
        w = full.w[i]
        out += full.a[i] @ np.cross(w, np.cross(w, r))
        out -= full.a[i] @ np.cross(r, p13[3 * i : 3 * i + 3])
    return out


def _renormalize(model: RobotModel, st: ReducedState) -> tuple[ReducedState, float]:
    """Polar-project rotation blocks that have drifted off the group."""
    moved = 0.0
    rots = []
    for r in st.rots:
        if orthogonality_residual(r) > _ORTHO_TRIGGER:
            fixed = polar_orthonormalize(r)
            moved = max(moved, float(np.linalg.norm(fixed - r)))
            rots.append(fixed)
        else:
            rots.append(r)
    if moved == 0.0:
        return st, 0.0
    return replace(st, rots=tuple(rots)), moved


def _rk4_step(model, st, t, dt, torque_fn, dsp_active):
    y0 = _pack(st)
    k1, info = _dynamics(model, st, t, torque_fn, dsp_active)
    k2, _ = _dynamics(model, _unpack(model, y0 + 0.5 * dt * _pack(k1)), t + 0.5 * dt, torque_fn, dsp_active)
    k3, _ = _dynamics(model, _unpack(model, y0 + 0.5 * dt * _pack(k2)), t + 0.5 * dt, torque_fn, dsp_active)
    k4, _ = _dynamics(model, _unpack(model, y0 + dt * _pack(k3)), t + dt, torque_fn, dsp_active)
    y1 = y0 + (dt / 6.0) * (_pack(k1) + 2.0 * _pack(k2) + 2.0 * _pack(k3) + _pack(k4))
    out, _ = _renormalize(model, _unpack(model, y1))
    return out, info


def _semi_implicit_step(model, st, t, dt, torque_fn, dsp_active):
    deriv, info = _dynamics(model, st, t, torque_fn, dsp_active)
    phi_dot_new = st.phi_dot + dt * deriv.phi_dot
    rots = []
    rot_iter = iter(st.rots)
    base = next(rot_iter)
    w1 = _base_rate(model, phi_dot_new)
    ang = np.linalg.norm(w1)
    rots.append(base @ (rotation_about(w1 / ang, ang * dt) if ang > 0 else np.eye(3)))
    for entry in model.dof_layout[1:]:
        if entry.kind == "ball":
            b = next(rot_iter)
            eta = phi_dot_new[entry.col : entry.col + 3]
            ang = np.linalg.norm(eta)
            rots.append(b @ (rotation_about(eta / ang, ang * dt) if ang > 0 else np.eye(3)))
    pins = st.pins + dt * np.array([phi_dot_new[e.col] for e in _pin_entries(model)])
    xd = st.xd_audit + dt * deriv.xd_audit
    x = st.x_audit + dt * xd
    out = ReducedState(rots=tuple(rots), pins=pins, phi_dot=phi_dot_new, x_audit=x, xd_audit=xd)
    return out, info


def step(
    model: RobotModel,
    state: ReducedState,
    tau: np.ndarray,
    dt: float,
    integrator: str = "rk4",
) -> ReducedState:
    """Advance one step under constant actuator torques (free dynamics)."""
    torque_fn = lambda *_: tau  # noqa: E731
    if integrator == "rk4":
        out, _ = _rk4_step(model, state, 0.0, dt, torque_fn, dsp_active=False)
    elif integrator == "semi_implicit_euler":
        out, _ = _semi_implicit_step(model, state, 0.0, dt, torque_fn, dsp_active=False)
    else:
        raise ModelConfigError(f"unknown integrator {integrator!r}")
    if not all(np.all(np.isfinite(r)) for r in out.rots) or not np.all(np.isfinite(out.phi_dot)):
        raise NumericsError("state became non-finite during step")
    return out


# ---------------------------------------------------------------------------
# controller


def computed_torque(
    red: ReducedModel,
    pos_err: np.ndarray,
    vel_err: np.ndarray,
    acc_ref: np.ndarray,
    kp: np.ndarray | float,
    kd: np.ndarray | float,
) -> np.ndarray:
    """Feedback-linearizing torque: tau = D^-1 [J (acc_ref + Kd ev + Kp ep) + H + G].

    With exact models the closed loop is e'' + Kd e' + Kp e = 0.
    """
    v = acc_ref + np.asarray(kd) * vel_err + np.asarray(kp) * pos_err
    return np.linalg.solve(red.d, red.j @ v + red.h + red.g)


def posture_error(model: RobotModel, st: ReducedState, ref: ReducedState) -> np.ndarray:
    """Blockwise position error ref-minus-current in the quasi-velocity frame.

    Pin blocks: plain angle difference. Rotation blocks: the body-frame
    rotation vector carrying the current orientation onto the reference.
    """
    err = np.zeros(model.n_dof)
    rot_i = 0
    pin_i = 0
    for entry in model.dof_layout:
        if entry.kind == "pin":
            err[entry.col] = ref.pins[pin_i] - st.pins[pin_i]
            pin_i += 1
        else:
            e = rotation_log(st.rots[rot_i].T @ ref.rots[rot_i])
            if entry.width == 3:
                err[entry.col : entry.col + 3] = e
            else:
                for k, axis in enumerate(entry.axes):
                    err[entry.col + k] = e[axis]
            rot_i += 1
    return err


@dataclass(frozen=True)
class TrackingReference:
    """Quintic geodesic between two postures.

    Rotation blocks move along the geodesic B(t) = B0 exp(s(t) xi) with
    constant axis xi, so the body-rate reference is exactly xi sdot.
    """

    start: ReducedState
    target: ReducedState
    duration: float

    def eval(self, model: RobotModel, t: float):
        s01 = min(max(t / self.duration, 0.0), 1.0)
        s = 10 * s01**3 - 15 * s01**4 + 6 * s01**5
        sd = (30 * s01**2 - 60 * s01**3 + 30 * s01**4) / self.duration
        sdd = (60 * s01 - 180 * s01**2 + 120 * s01**3) / self.duration**2
        if t < 0.0 or t > self.duration:
            sd = 0.0
            sdd = 0.0
        rots = []
        vel = np.zeros(model.n_dof)
        acc = np.zeros(model.n_dof)
        rot_i = 0
        pin_i = 0
        pins = np.empty_like(self.start.pins)
        for entry in model.dof_layout:
            if entry.kind == "pin":
                d = self.target.pins[pin_i] - self.start.pins[pin_i]
                pins[pin_i] = self.start.pins[pin_i] + s * d
                vel[entry.col] = sd * d
                acc[entry.col] = sdd * d
                pin_i += 1
            else:
                b0 = self.start.rots[rot_i]
                xi = rotation_log(b0.T @ self.target.rots[rot_i])
                ang = np.linalg.norm(xi)
                r = b0 @ (rotation_about(xi / ang, ang * s) if ang > 0 else np.eye(3))
                rots.append(r)
                if entry.width == 3:
                    vel[entry.col : entry.col + 3] = sd * xi
                    acc[entry.col : entry.col + 3] = sdd * xi
                else:
                    for k, axis in enumerate(entry.axes):
                        vel[entry.col + k] = sd * xi[axis]
                        acc[entry.col + k] = sdd * xi[axis]
                rot_i += 1
        ref_state = ReducedState(
            rots=tuple(rots), pins=pins, phi_dot=vel,
            x_audit=np.zeros((7, 3)), xd_audit=np.zeros((7, 3)),
        )
        return ref_state, vel, acc


def _make_torque_fn(model: RobotModel, cfg: SimConfig, ref: TrackingReference | None):
    n = model.n_dof
    if cfg.controller == "none":
        zero = np.zeros(n)
        return lambda *_: zero
    if cfg.controller == "gravity":
        def fn(t, model_, st, full, red):
            return np.linalg.solve(red.d, red.h + red.g)
        return fn

    def fn(t, model_, st, full, red):
        ref_state, vel_ref, acc_ref = ref.eval(model_, t)
        ep = posture_error(model_, st, ref_state)
        ev = vel_ref - st.phi_dot
        return computed_torque(red, ep, ev, acc_ref, cfg.kp, cfg.kd)

    return fn


# ---------------------------------------------------------------------------
# support exchange


def mirror_support(model: RobotModel, st: ReducedState) -> tuple[RobotModel, ReducedState]:
    """Swap stance and swing sides after the swing foot has become support.

    Links are renumbered 1<->7, 2<->6, 3<->5; each link's proximal/distal
    offsets swap roles; the new stance contact is the old swing contact
    point. The new chart velocities are re-solved from the (unchanged) link
    angular rates.
    """
    old_links = model.links
    new_links = []
    for i in range(7):
        o = old_links[6 - i]
        if i == 0:
            k_new = -model.foot_offset
        else:
            k_new = o.l
        l_new = o.k
        new_links.append(LinkParams(mass=o.mass, inertia=o.inertia, k=k_new, l=l_new))

    new_cons = []
    for c in model.constraints:
        src = model.constraint_at(9 - c.joint_index)
        new_cons.append(JointConstraint(c.joint_index, src.r, src.q))

    new_model = RobotModel(
        links=tuple(new_links),
        constraints=tuple(new_cons),
        gravity=model.gravity,
        foot_offset=-old_links[0].k,
        base_free_axes=model.base_free_axes,
    )

    old_full = build_full_state(model, st)
    a_new = old_full.a[::-1].copy()
    w_new = old_full.w[::-1].copy()

    rots = []
    pins = []
    rot_first = True
    for entry in new_model.dof_layout:
        if entry.kind == "base":
            rots.append(a_new[0])
            rot_first = False
        elif entry.kind == "pin":
            c = entry.link
            b = a_new[c - 1].T @ a_new[c]
            con = new_model.constraint_at(c + 1)
            sin_a = 0.5 * float(con.q @ np.array(
                [b[2, 1] - b[1, 2], b[0, 2] - b[2, 0], b[1, 0] - b[0, 1]]
            ))
            cos_a = 0.5 * (np.trace(b) - 1.0)
            pins.append(np.arctan2(sin_a, cos_a))
        else:
            rots.append(a_new[entry.link - 1].T @ a_new[entry.link])

    shell = ReducedState(
        rots=tuple(rots), pins=np.array(pins), phi_dot=np.zeros(new_model.n_dof),
        x_audit=np.zeros((7, 3)), xd_audit=np.zeros((7, 3)),
    )
    full_new = build_full_state(new_model, shell)
    p12, _ = velocity_basis(new_model, full_new, np.zeros(new_model.n_dof))
    phi_dot, *_ = np.linalg.lstsq(p12, w_new.reshape(21), rcond=None)
    st_new = replace(shell, phi_dot=phi_dot)
    full_new = build_full_state(new_model, st_new)
    st_new = replace(
        st_new,
        x_audit=chain_positions(new_model, full_new),
        xd_audit=com_velocities(new_model, full_new),
    )
    return new_model, st_new


# ---------------------------------------------------------------------------
# trajectory


@dataclass
class Trajectory:
    columns: list[str]
    rows: list[list]
    metadata: dict = field(default_factory=dict)

    @property
    def phases(self) -> list[str]:
        k = self.columns.index("phase")
        return [row[k] for row in self.rows]

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([row[k] for row in self.rows])

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(v if isinstance(v, str) else repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_json_doc(self) -> dict:
        return {
            "kind": "bipedyn-trajectory",
            "metadata": self.metadata,
            "columns": self.columns,
            "samples": [
                [v if isinstance(v, str) else float(v) for v in row] for row in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_doc(), indent=1)


def _trajectory_columns(n: int) -> list[str]:
    cols = ["t_s"]
    cols += [f"phi_{k}_rad" for k in range(1, n + 1)]
    cols += [f"phid_{k}_radps" for k in range(1, n + 1)]
    cols += [f"tau_{k}_Nm" for k in range(1, n + 1)]
    cols += [f"gamma_{k}_N" for k in range(1, 22)]
    cols += [f"lambda_{k}_Nm" for k in range(1, 9)]
    cols += ["gammac_x_N", "gammac_y_N", "gammac_z_N"]
    cols += ["energy_J", "kinetic_J", "drift_holonomic_m", "drift_orthonormality", "phase"]
    return cols


# ---------------------------------------------------------------------------
# simulation driver


def _audit_drift(model: RobotModel, st: ReducedState, full: FullState) -> float:
    ref = chain_positions(model, full)
    return float(np.max(np.linalg.norm(st.x_audit - ref, axis=1)))


def _ortho_drift(st: ReducedState) -> float:
    return max(orthogonality_residual(r) for r in st.rots)


def _record(model, cfg, traj, t, st, phase, tau, gamma_c):
    full = build_full_state(model, st)
    if cfg.record_forces:
        try:
            gamma, lam = constraint_forces(
                model, full, st.phi_dot, actuation_map(model) @ tau,
                f_ext=_contact_wrench(model, full, gamma_c) if np.any(gamma_c) else None,
            )
        except NumericsError:
            gamma, lam = np.full(21, np.nan), np.full(8, np.nan)
    else:
        gamma, lam = np.full(21, np.nan), np.full(8, np.nan)
    row = [t]
    row += list(state_chart(model, st))
    row += list(st.phi_dot)
    row += list(tau)
    row += list(gamma)
    row += list(lam)
    row += list(gamma_c)
    row += [
        total_energy(model, full),
        kinetic_energy(model, full),
        _audit_drift(model, st, full),
        _ortho_drift(st),
        phase,
    ]
    traj.rows.append(row)


def _contact_wrench(model: RobotModel, full: FullState, gamma_c: np.ndarray) -> np.ndarray:
    """Map the swing-contact force into the stacked 42-dim equation space.

    The force acts at the contact point of link 7: translational rows get the
    inertial-frame force, the link-7 torque rows get the body-frame moment
    about the center of mass.
    """
    f = np.zeros(42)
    f[18:21] = skew(model.foot_offset) @ (full.a[6].T @ gamma_c)
    f[39:42] = gamma_c
    return f


def _swing_height(model: RobotModel, st: ReducedState) -> float:
    return float(ct.contact_point(model, build_full_state(model, st))[2])


def simulate(model: RobotModel, cfg: SimConfig) -> Trajectory:
    """Run the walking-cycle phase machine and record every sample."""
    cfg.validate()
    st = initial_state(model, cfg)
    if cfg.phi0 is not None and cfg.ref_target is not None:
        ref = TrackingReference(
            start=chart_to_state(model, cfg.phi0),
            target=chart_to_state(model, cfg.ref_target),
            duration=cfg.ref_duration,
        )
    elif cfg.ref_target is not None:
        ref = TrackingReference(
            start=chart_to_state(model, np.zeros(model.n_dof)),
            target=chart_to_state(model, cfg.ref_target),
            duration=cfg.ref_duration,
        )
    else:
        ref = None
    torque_fn = _make_torque_fn(model, cfg, ref)
    stepper = _rk4_step if cfg.integrator == "rk4" else _semi_implicit_step

    traj = Trajectory(columns=_trajectory_columns(model.n_dof), rows=[])
    traj.metadata = {
        "dt": cfg.dt,
        "duration": cfg.duration,
        "integrator": cfg.integrator,
        "controller": cfg.controller,
        "n_dof": model.n_dof,
        "segments": [{"t_start": 0.0, "anchor": [0.0, 0.0, 0.0], "phase": "ssp"}],
        "events": [],
    }
    anchor = np.zeros(3)

    phase = ct.Phase.SINGLE_SUPPORT
    dsp_entered = 0.0
    t = 0.0
    n_steps = int(round(cfg.duration / cfg.dt))
    _, info0 = _dynamics(model, st, 0.0, torque_fn, dsp_active=False)
    _record(model, cfg, traj, t, st, phase.value, info0.tau, np.zeros(3))

    for k in range(n_steps):
        if not np.all(np.isfinite(st.phi_dot)):
            traj.metadata["aborted"] = f"non-finite state at t={t:.6f}"
            break
        try:
            if phase is ct.Phase.SINGLE_SUPPORT:
                ez_prev = _swing_height(model, st)
                st_new, info = stepper(model, st, t, cfg.dt, torque_fn, dsp_active=False)
                ez_new = _swing_height(model, st_new)
                frac = ct.detect_touchdown(ez_prev, ez_new)
                if frac is None:
                    st = st_new
                    t += cfg.dt
                    if (k + 1) % cfg.record_stride == 0 or k == n_steps - 1:
                        _record(model, cfg, traj, t, st, phase.value, info.tau, np.zeros(3))
                    continue
                # bisect touchdown to |e_z| <= event_tol
                lo, hi = 0.0, cfg.dt
                st_hit, t_hit = st_new, t + cfg.dt
                for _ in range(_BISECT_MAX):
                    mid = 0.5 * (lo + hi)
                    st_mid, _ = stepper(model, st, t, mid, torque_fn, dsp_active=False)
                    ez_mid = _swing_height(model, st_mid)
                    if abs(ez_mid) <= cfg.event_tol:
                        st_hit, t_hit = st_mid, t + mid
                        break
                    if ez_mid > 0.0:
                        lo = mid
                    else:
                        hi = mid
                else:
                    st_hit, _ = stepper(model, st, t, hi, torque_fn, dsp_active=False)
                    t_hit = t + hi
                    if abs(_swing_height(model, st_hit)) > 1e-6:
                        traj.metadata["aborted"] = f"event bisection failed at t={t:.6f}"
                        break
                # impact
                full = build_full_state(model, st_hit)
                red = reduce(model, full, st_hit.phi_dot)
                e_jac = ct.contact_map(model, full) @ red.p12
                phid_plus, impulse = ct.impact_map(red, e_jac, st_hit.phi_dot)
                st = replace(st_hit, phi_dot=phid_plus)
                full_plus = build_full_state(model, st)
                st = replace(st, xd_audit=com_velocities(model, full_plus))
                t = t_hit
                tau_now = torque_fn(t, model, st, full_plus, red)
                _record(model, cfg, traj, t, st, ct.Phase.IMPACT.value, tau_now, impulse)
                traj.metadata["events"].append({"t": t, "type": "impact"})
                phase = ct.Phase.DOUBLE_SUPPORT
                dsp_entered = t
                traj.metadata["segments"].append(
                    {"t_start": t, "anchor": list(anchor), "phase": "dsp"}
                )
            else:  # double support
                st_new, info = stepper(model, st, t, cfg.dt, torque_fn, dsp_active=True)
                st = st_new
                t += cfg.dt
                _, info_now = _dynamics(model, st, t, torque_fn, dsp_active=True)
                _record(model, cfg, traj, t, st, phase.value, info_now.tau, info_now.gamma_c)
                lift_off = info_now.gamma_c[2] <= 0.0
                if lift_off or (t - dsp_entered) >= cfg.dsp_max_duration:
                    full = build_full_state(model, st)
                    anchor = anchor + ct.contact_point(model, full)
                    model, st = mirror_support(model, st)
                    phase = ct.Phase.SINGLE_SUPPORT
                    traj.metadata["events"].append(
                        {"t": t, "type": "support_exchange",
                         "reason": "lift_off" if lift_off else "dsp_time_limit"}
                    )
                    traj.metadata["segments"].append(
                        {"t_start": t, "anchor": list(anchor), "phase": "ssp"}
                    )
                    if cfg.controller == "tracking":
                        # hold the posture reached at exchange; the original
                        # reference is expressed in the old labeling
                        ref = TrackingReference(start=st, target=st, duration=1.0)
                        torque_fn = _make_torque_fn(model, cfg, ref)
        except NumericsError as exc:
            traj.metadata["aborted"] = f"{exc} at t={t:.6f}"
            break

    drifts = traj.column("drift_holonomic_m") if traj.rows else np.zeros(1)
    traj.metadata["max_drift_holonomic_m"] = float(np.max(drifts))
    energies = traj.column("energy_J") if traj.rows else np.zeros(1)
    traj.metadata["energy_drift_J"] = float(np.max(energies) - np.min(energies))
    traj.metadata["n_samples"] = len(traj.rows)
    traj.metadata["n_impacts"] = sum(
        1 for e in traj.metadata["events"] if e["type"] == "impact"
    )
    if float(np.max(drifts)) > cfg.drift_tol and "aborted" not in traj.metadata:
        traj.metadata["drift_exceeded"] = True
    return traj
