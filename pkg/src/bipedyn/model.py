"""Robot description: link parameters, joint constraints, config I/O.

A model is immutable after load and is the single source of truth for all
physical parameters. The config format is INI-style text with sections
``link.1`` .. ``link.7``, ``gravity``, and optional ``constraints``,
``contact`` and ``base`` sections; all units SI, numbers space-separated.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ModelConfigError

__all__ = [
    "LinkParams",
    "JointConstraint",
    "ChainSigns",
    "DofEntry",
    "RobotModel",
    "default_constraints",
    "load_model",
    "load_model_file",
    "save_model",
    "CONSTRAINED_JOINTS",
]

# Pin joints sit at the two ankles and two knees. Joint j (1-based) connects
# links j-1 and j; the stance-foot/ground interface is joint 1 and is not a
# pin constraint.
CONSTRAINED_JOINTS = (2, 3, 6, 7)


def _fmt_vec(v: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in np.asarray(v).ravel())


@dataclass(frozen=True)
class LinkParams:
    """One rigid link: mass, body-frame inertia and joint offsets.

    ``k`` points from the proximal joint to the center of mass, ``l`` from the
    distal joint to the center of mass, both in the body frame, matching the
    position recursion x_i = A_i k_i - A_{i-1} l_{i-1} + x_{i-1}.
    """

    mass: float
    inertia: np.ndarray
    k: np.ndarray
    l: np.ndarray

    def validate(self, link_no: int) -> None:
        where = f"link.{link_no}"
        if not np.isfinite(self.mass) or self.mass <= 0.0:
            raise ModelConfigError(f"{where}.mass: must be positive, got {self.mass}")
        if self.inertia.shape != (3, 3):
            raise ModelConfigError(f"{where}.inertia: expected 9 numbers")
        sym = np.linalg.norm(self.inertia - self.inertia.T)
        if sym > 1e-12 * max(np.linalg.norm(self.inertia), 1e-300):
            raise ModelConfigError(f"{where}.inertia: not symmetric (residual {sym:.2e})")
        eigs = np.linalg.eigvalsh(0.5 * (self.inertia + self.inertia.T))
        if np.min(eigs) <= 0.0:
            raise ModelConfigError(f"non-SPD inertia, link {link_no}")
        for name, v in (("K", self.k), ("L", self.l)):
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ModelConfigError(f"{where}.{name}: expected 3 finite numbers")
        if np.linalg.norm(self.k) + np.linalg.norm(self.l) <= 0.0:
            raise ModelConfigError(f"{where}: K and L cannot both be zero")


@dataclass(frozen=True)
class JointConstraint:
    """Pin-joint constraint: connection matrix R (3x2) and free axis Q (3,)."""

    joint_index: int
    r: np.ndarray
    q: np.ndarray

    @property
    def parent(self) -> int:
        """0-based index of the link on the proximal side of the joint."""
        return self.joint_index - 2

    @property
    def child(self) -> int:
        """0-based index of the link on the distal side of the joint."""
        return self.joint_index - 1

    def validate(self) -> None:
        where = f"constraints.joint {self.joint_index}"
        if self.joint_index not in range(2, 8):
            raise ModelConfigError(f"{where}: joint index must be in 2..7")
        if self.r.shape != (3, 2) or self.q.shape != (3,):
            raise ModelConfigError(f"{where}: R must be 3x2 and Q must be length 3")
        frame = np.column_stack([self.r, self.q])
        res = np.linalg.norm(frame.T @ frame - np.eye(3))
        if res > 1e-12:
            raise ModelConfigError(
                f"{where}: [R|Q] not orthonormal (residual {res:.2e})"
            )


@dataclass(frozen=True)
class ChainSigns:
    """Per-link signs of the proximal/distal joint-force terms.

    ``prox[i]`` is the sign of the force at link i's proximal joint in its
    translational equation; ``dist[i]`` the sign at its distal joint
    (0 for the last link, which has no distal force). The stance chain
    (links 1-4) carries +prox, the swing chain (links 5-7) -prox.
    """

    prox: tuple[int, ...]
    dist: tuple[int, ...]

    @staticmethod
    def table_default() -> "ChainSigns":
        prox = (1, 1, 1, 1, -1, -1, -1)
        dist = tuple(-prox[i + 1] for i in range(6)) + (0,)
        return ChainSigns(prox=prox, dist=dist)

    def validate(self) -> None:
        ref = ChainSigns.table_default()
        if self.prox != ref.prox or self.dist != ref.dist:
            raise ModelConfigError(
                "chain_signs: sign pattern does not match the seven-link convention"
            )


@dataclass(frozen=True)
class DofEntry:
    """One block of the active-DOF coordinate vector."""

    kind: str  # "base", "pin" or "ball"
    link: int  # 0-based child link (base: link 0)
    col: int
    width: int
    axes: tuple[int, ...] = ()  # base only: which of x,y,z are free


@dataclass(frozen=True)
class RobotModel:
    links: tuple[LinkParams, ...]
    constraints: tuple[JointConstraint, ...]
    gravity: np.ndarray
    chain_signs: ChainSigns = field(default_factory=ChainSigns.table_default)
    foot_offset: np.ndarray | None = None  # default: -L7 (distal point of link 7)
    base_free_axes: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        if len(self.links) != 7:
            raise ModelConfigError(f"need exactly 7 links, got {len(self.links)}")
        for i, link in enumerate(self.links):
            link.validate(i + 1)
        joints = tuple(sorted(c.joint_index for c in self.constraints))
        if joints != CONSTRAINED_JOINTS:
            raise ModelConfigError(
                f"constraint joints must be exactly {set(CONSTRAINED_JOINTS)}, got {set(joints)}"
            )
        for c in self.constraints:
            c.validate()
        self.chain_signs.validate()
        if self.gravity.shape != (3,) or not np.all(np.isfinite(self.gravity)):
            raise ModelConfigError("gravity: expected 3 finite numbers")
        if self.foot_offset is None:
            object.__setattr__(self, "foot_offset", -self.links[6].l)
        if not self.base_free_axes or any(a not in (0, 1, 2) for a in self.base_free_axes):
            raise ModelConfigError("base.free_axes: need a nonempty subset of x y z")

    # -- derived, cached lazily -------------------------------------------------

    @cached_property
    def sigma(self) -> np.ndarray:
        return np.array(self.chain_signs.prox, dtype=float)

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([lk.mass for lk in self.links])

    @cached_property
    def _constraint_map(self) -> dict:
        return {c.joint_index: c for c in self.constraints}

    def constraint_at(self, joint_index: int) -> JointConstraint | None:
        return self._constraint_map.get(joint_index)

    @cached_property
    def dof_layout(self) -> tuple[DofEntry, ...]:
        entries = [DofEntry("base", 0, 0, len(self.base_free_axes), tuple(self.base_free_axes))]
        col = entries[0].width
        for child in range(1, 7):
            joint = child + 1  # 1-based joint between child-1 and child
            if self.constraint_at(joint) is not None:
                entries.append(DofEntry("pin", child, col, 1))
                col += 1
            else:
                entries.append(DofEntry("ball", child, col, 3))
                col += 3
        return tuple(entries)

    @cached_property
    def n_dof(self) -> int:
        return sum(e.width for e in self.dof_layout)


def default_constraints() -> list[JointConstraint]:
    """Pin constraints at joints 2, 3, 6, 7 with R = [e_x e_z], Q = e_y."""
    r = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    q = np.array([0.0, 1.0, 0.0])
    return [JointConstraint(j, r.copy(), q.copy()) for j in CONSTRAINED_JOINTS]


# -- config parsing -----------------------------------------------------------

_LINK_KEYS = {"mass", "inertia", "K", "L"}
_AXIS_NAMES = {"x": 0, "y": 1, "z": 2}


def _parse_numbers(section: str, key: str, raw: str, count: int) -> np.ndarray:
    parts = raw.split()
    try:
        vals = np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ModelConfigError(f"{section}.{key}: cannot parse number: {exc}") from None
    if vals.size != count:
        raise ModelConfigError(f"{section}.{key}: expected {count} numbers, got {vals.size}")
    return vals


def load_model(config_text: str) -> RobotModel:
    """Parse and validate a robot config document."""
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str  # keep key case (K vs L matter)
    try:
        cp.read_string(config_text)
    except configparser.Error as exc:
        raise ModelConfigError(f"config parse failure: {exc}") from None

    known = {f"link.{i}" for i in range(1, 8)} | {"gravity", "constraints", "contact", "base"}
    for sec in cp.sections():
        if sec not in known:
            raise ModelConfigError(f"unknown section [{sec}]")

    links = []
    for i in range(1, 8):
        sec = f"link.{i}"
        if sec not in cp:
            raise ModelConfigError(f"missing section [{sec}]")
        keys = set(cp[sec].keys())
        extra = keys - _LINK_KEYS
        if extra:
            raise ModelConfigError(f"{sec}: unknown keys {sorted(extra)}")
        missing = _LINK_KEYS - keys
        if missing:
            raise ModelConfigError(f"{sec}: missing keys {sorted(missing)}")
        mass = _parse_numbers(sec, "mass", cp[sec]["mass"], 1)[0]
        inertia = _parse_numbers(sec, "inertia", cp[sec]["inertia"], 9).reshape(3, 3)
        k = _parse_numbers(sec, "K", cp[sec]["K"], 3)
        l = _parse_numbers(sec, "L", cp[sec]["L"], 3)
        links.append(LinkParams(mass=float(mass), inertia=inertia, k=k, l=l))

    gravity = np.array([0.0, 0.0, -9.81])
    if "gravity" in cp:
        keys = set(cp["gravity"].keys())
        if keys - {"g"}:
            raise ModelConfigError(f"gravity: unknown keys {sorted(keys - {'g'})}")
        if "g" in cp["gravity"]:
            gravity = _parse_numbers("gravity", "g", cp["gravity"]["g"], 3)

    constraints = {c.joint_index: c for c in default_constraints()}
    if "constraints" in cp:
        for key, raw in cp["constraints"].items():
            try:
                kind, joint_s = key.split(".")
                joint = int(joint_s)
            except ValueError:
                raise ModelConfigError(f"constraints.{key}: expected R.<joint> or Q.<joint>") from None
            if joint not in CONSTRAINED_JOINTS:
                raise ModelConfigError(f"constraints.{key}: joint must be one of {CONSTRAINED_JOINTS}")
            base = constraints[joint]
            if kind == "R":
                r = _parse_numbers("constraints", key, raw, 6).reshape(3, 2)
                constraints[joint] = JointConstraint(joint, r, base.q)
            elif kind == "Q":
                q = _parse_numbers("constraints", key, raw, 3)
                constraints[joint] = JointConstraint(joint, base.r, q)
            else:
                raise ModelConfigError(f"constraints.{key}: expected R.<joint> or Q.<joint>")

    foot_offset = None
    if "contact" in cp:
        keys = set(cp["contact"].keys())
        if keys - {"foot_offset"}:
            raise ModelConfigError(f"contact: unknown keys {sorted(keys - {'foot_offset'})}")
        if "foot_offset" in cp["contact"]:
            foot_offset = _parse_numbers("contact", "foot_offset", cp["contact"]["foot_offset"], 3)

    base_free_axes = (0, 1, 2)
    if "base" in cp:
        keys = set(cp["base"].keys())
        if keys - {"free_axes"}:
            raise ModelConfigError(f"base: unknown keys {sorted(keys - {'free_axes'})}")
        if "free_axes" in cp["base"]:
            names = cp["base"]["free_axes"].split()
            try:
                base_free_axes = tuple(sorted(_AXIS_NAMES[n] for n in names))
            except KeyError as exc:
                raise ModelConfigError(f"base.free_axes: unknown axis {exc}") from None
            if len(set(base_free_axes)) != len(base_free_axes):
                raise ModelConfigError("base.free_axes: duplicate axis")

    return RobotModel(
        links=tuple(links),
        constraints=tuple(constraints[j] for j in CONSTRAINED_JOINTS),
        gravity=gravity,
        foot_offset=foot_offset,
        base_free_axes=base_free_axes,
    )


def load_model_file(path: str) -> RobotModel:
    with open(path, "r", encoding="utf-8") as fh:
        return load_model(fh.read())


def save_model(model: RobotModel) -> str:
    """Serialize a model; floats use shortest round-trip decimals."""
    out = io.StringIO()
    out.write("# seven-link biped model (SI units)\n\n")
    out.write("[gravity]\ng = " + _fmt_vec(model.gravity) + "\n\n")
    for i, link in enumerate(model.links, start=1):
        out.write(f"[link.{i}]\n")
        out.write(f"mass = {repr(float(link.mass))}\n")
        out.write("inertia = " + _fmt_vec(link.inertia) + "\n")
        out.write("K = " + _fmt_vec(link.k) + "\n")
        out.write("L = " + _fmt_vec(link.l) + "\n\n")
    out.write("[constraints]\n")
    for c in model.constraints:
        out.write(f"R.{c.joint_index} = " + _fmt_vec(c.r) + "\n")
        out.write(f"Q.{c.joint_index} = " + _fmt_vec(c.q) + "\n")
    out.write("\n[contact]\nfoot_offset = " + _fmt_vec(model.foot_offset) + "\n")
    if tuple(model.base_free_axes) != (0, 1, 2):
        names = {v: k for k, v in _AXIS_NAMES.items()}
        out.write(
            "\n[base]\nfree_axes = "
            + " ".join(names[a] for a in model.base_free_axes)
            + "\n"
        )
    return out.getvalue()
