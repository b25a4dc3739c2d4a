"""Parametric reference model of the human arm.

Body frame: x anterior, y lateral, z superior, origin anywhere (the GH
center is a parameter). At the rest pose the arm hangs along -z. Segment
frames returned by :func:`arm_fk` have their origin at the segment's
proximal joint center and coincide in orientation with the body frame at
rest.

Default lengths, ROM, load angle and frustum geometry are editable fixtures,
not anatomical ground truth.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ArmConfigError, InvalidArgument, ROMError
from .kinematics import (REVOLUTE, JointSpec, Pose, check_unit, rotation_about_axis,
                         unit)

CONCURRENCY_TOL = 1e-9


class ArmDOF(str, Enum):
    ABD = "ABD"
    FE = "FE"
    IE = "IE"
    HABD = "HABD"
    ElbowFE = "ElbowFE"
    PS = "PS"
    WFE = "WFE"
    UD = "UD"


GH_DOFS = (ArmDOF.ABD, ArmDOF.FE, ArmDOF.IE, ArmDOF.HABD)
DISTAL_DOFS = (ArmDOF.ElbowFE, ArmDOF.PS, ArmDOF.WFE, ArmDOF.UD)

ANTERIOR = np.array([1.0, 0.0, 0.0])
LATERAL = np.array([0.0, 1.0, 0.0])
SUPERIOR = np.array([0.0, 0.0, 1.0])
REST_DIRECTION = -SUPERIOR

# Rest-pose directions of the biologic axes; signs make the anatomically
# positive motion a positive rotation (flexion carries -z toward +x,
# abduction carries -z toward +y).
_AXIS_DIRECTIONS = {
    ArmDOF.HABD: SUPERIOR,
    ArmDOF.ABD: ANTERIOR,
    ArmDOF.FE: -LATERAL,
    ArmDOF.IE: REST_DIRECTION,
    ArmDOF.ElbowFE: -LATERAL,
    ArmDOF.WFE: -LATERAL,
    ArmDOF.UD: ANTERIOR,
}

DEFAULT_ARM_CONFIG: dict = {
    "gh_center": [0.0, 0.0, 0.0],
    "lengths": {"upper_arm": 0.30, "forearm": 0.25, "hand": 0.08},
    "rom": {
        "HABD": [-30.0, 120.0],
        "ABD": [-20.0, 170.0],
        "FE": [-50.0, 170.0],
        "IE": [-80.0, 90.0],
        "ElbowFE": [0.0, 145.0],
        "PS": [-85.0, 85.0],
        "WFE": [-70.0, 80.0],
        "UD": [-20.0, 30.0],
    },
    "frustum": {
        "semi_major": 0.0,
        "semi_minor": 0.0,
        "proximal_half_angle_deg": 0.0,
        "distal_half_angle_deg": 0.0,
        "center": [0.0, 0.0, 0.0],
        "nominal_axis": [0.0, -1.0, 0.0],
    },
    "load_angle_deg": 10.0,
    "ud_axis_offset": 0.015,
    "gh_sequence": ["HABD", "FE", "IE"],
    "gh_axes": {},
}


@dataclass(frozen=True, eq=False)
class FrustumParams:
    """Loose-hinge elbow geometry.

    The instantaneous elbow axis passes through a point of an ellipse (semi
    axes ``ellipse_semi_major`` / ``ellipse_semi_minor``, centered at
    ``center`` in the plane normal to ``nominal_axis``) and is tilted
    radially by a half-angle blended linearly from ``proximal_half_angle``
    at the start of ``flexion_range`` to ``distal_half_angle`` at its end.
    """

    ellipse_semi_major: float = 0.0
    ellipse_semi_minor: float = 0.0
    proximal_half_angle: float = 0.0
    distal_half_angle: float = 0.0
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    nominal_axis: np.ndarray = field(default_factory=lambda: -LATERAL.copy())
    flexion_range: tuple[float, float] = (0.0, math.radians(145.0))

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        object.__setattr__(self, "nominal_axis", check_unit(self.nominal_axis, "frustum nominal_axis"))
        problems = frustum_violations(self)
        if problems:
            raise InvalidArgument("; ".join(problems))

    @property
    def degenerate(self) -> bool:
        return (self.ellipse_semi_major == 0.0 and self.ellipse_semi_minor == 0.0
                and self.proximal_half_angle == 0.0 and self.distal_half_angle == 0.0)

    def plane_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal (major, minor) directions spanning the ellipse plane.

        The major direction is the projection of the body's superior axis
        (the humerus line) onto the plane, falling back to anterior.
        """
        n = self.nominal_axis
        ref = SUPERIOR if abs(n @ SUPERIOR) < 0.9 else ANTERIOR
        u = unit(ref - (ref @ n) * n)
        return u, np.cross(n, u)


def frustum_violations(f: FrustumParams) -> list[str]:
    out = []
    if f.ellipse_semi_major < 0 or f.ellipse_semi_minor < 0:
        out.append("frustum: ellipse semi-axes must be >= 0")
    for name in ("proximal_half_angle", "distal_half_angle"):
        a = getattr(f, name)
        if not 0.0 <= a <= math.pi / 4 + 1e-15:
            out.append(f"frustum: {name} must lie in [0, 45] deg")
    lo, hi = f.flexion_range
    if not lo < hi:
        out.append("frustum: flexion range must be nonempty")
    return out


@dataclass(frozen=True, eq=False)
class ArmModel:
    gh_center: np.ndarray
    upper_arm_length: float
    forearm_length: float
    hand_length: float
    biologic_axes: Mapping[ArmDOF, tuple[np.ndarray, np.ndarray]]
    rom: Mapping[ArmDOF, tuple[float, float]]
    elbow_frustum: FrustumParams
    load_angle: float
    ud_axis_offset: float
    gh_sequence: tuple[ArmDOF, ArmDOF, ArmDOF] = (ArmDOF.HABD, ArmDOF.FE, ArmDOF.IE)

    @property
    def pose_dofs(self) -> tuple[ArmDOF, ...]:
        """The 7 DOF of the pose parameterization, in chain order."""
        return tuple(self.gh_sequence) + DISTAL_DOFS

    @property
    def elbow_center(self) -> np.ndarray:
        return self.gh_center + self.upper_arm_length * REST_DIRECTION

    @property
    def wrist_center(self) -> np.ndarray:
        return self.elbow_center + self.forearm_length * REST_DIRECTION

    @property
    def hand_tip(self) -> np.ndarray:
        return self.wrist_center + self.hand_length * REST_DIRECTION

    def axis(self, dof: ArmDOF | str) -> tuple[np.ndarray, np.ndarray]:
        """(direction, anchor) of a biologic axis at rest, world frame."""
        return self.biologic_axes[ArmDOF(dof)]


def ps_axis_direction(load_angle: float) -> np.ndarray:
    """Rest direction of the PS axis: the segment direction tilted laterally."""
    return math.cos(load_angle) * REST_DIRECTION + math.sin(load_angle) * LATERAL


def _biologic_axes(gh, elbow, wrist, load_angle, ud_offset, frustum):
    axes = {dof: (_AXIS_DIRECTIONS[dof].copy(), np.array(gh, dtype=float)) for dof in GH_DOFS}
    axes[ArmDOF.ElbowFE] = (frustum.nominal_axis.copy(), elbow + frustum.center)
    axes[ArmDOF.PS] = (ps_axis_direction(load_angle), elbow.copy())
    axes[ArmDOF.WFE] = (_AXIS_DIRECTIONS[ArmDOF.WFE].copy(), wrist.copy())
    axes[ArmDOF.UD] = (_AXIS_DIRECTIONS[ArmDOF.UD].copy(), wrist - ud_offset * REST_DIRECTION)
    return axes


def _merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict) and k != "gh_axes":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def build_arm(params: Mapping | None = None) -> ArmModel:
    """Build a validated :class:`ArmModel` from a (partial) config mapping.

    Missing keys take their values from :data:`DEFAULT_ARM_CONFIG`. All
    violations are collected and raised together as :class:`ArmConfigError`.
    """
    cfg = _merge(DEFAULT_ARM_CONFIG, params or {})
    problems: list[str] = []

    for key in cfg:
        if key not in DEFAULT_ARM_CONFIG:
            problems.append(f"unknown key '{key}'")
    for section in ("lengths", "frustum"):
        for key in cfg[section]:
            if key not in DEFAULT_ARM_CONFIG[section]:
                problems.append(f"unknown key '{section}.{key}'")

    lengths = {}
    for name in ("upper_arm", "forearm", "hand"):
        v = cfg["lengths"].get(name)
        if not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
            problems.append(f"lengths.{name} must be a positive number, got {v!r}")
        else:
            lengths[name] = float(v)

    rom: dict[ArmDOF, tuple[float, float]] = {}
    for key, interval in cfg["rom"].items():
        try:
            dof = ArmDOF(key)
        except ValueError:
            problems.append(f"rom: unknown DOF '{key}'")
            continue
        try:
            lo, hi = (float(x) for x in interval)
        except (TypeError, ValueError):
            problems.append(f"rom.{key} must be a [lo, hi] pair of degrees")
            continue
        if not lo <= hi:
            problems.append(f"rom.{key} interval [{lo}, {hi}] is empty")
            continue
        rom[dof] = (math.radians(lo), math.radians(hi))

    try:
        sequence = tuple(ArmDOF(s) for s in cfg["gh_sequence"])
    except ValueError as exc:
        problems.append(f"gh_sequence: {exc}")
        sequence = (ArmDOF.HABD, ArmDOF.FE, ArmDOF.IE)
    if len(sequence) != 3 or len(set(sequence)) != 3 or not set(sequence) <= set(GH_DOFS):
        problems.append("gh_sequence must list three distinct GH DOF (from ABD, FE, IE, HABD)")
    elif not ({ArmDOF.FE, ArmDOF.IE} <= set(sequence)):
        problems.append("gh_sequence must contain FE and IE plus one of ABD/HABD")

    fr = cfg["frustum"]
    elbow_rom = rom.get(ArmDOF.ElbowFE, (0.0, math.radians(145.0)))
    frustum = None
    try:
        frustum = FrustumParams(
            ellipse_semi_major=float(fr.get("semi_major", 0.0)),
            ellipse_semi_minor=float(fr.get("semi_minor", 0.0)),
            proximal_half_angle=math.radians(float(fr.get("proximal_half_angle_deg", 0.0))),
            distal_half_angle=math.radians(float(fr.get("distal_half_angle_deg", 0.0))),
            center=fr.get("center", [0.0, 0.0, 0.0]),
            nominal_axis=unit(fr.get("nominal_axis", [0.0, -1.0, 0.0])),
            flexion_range=elbow_rom if elbow_rom[0] < elbow_rom[1] else (0.0, 1.0),
        )
    except (InvalidArgument, TypeError, ValueError) as exc:
        problems.append(f"frustum: {exc}")

    load_angle = cfg["load_angle_deg"]
    if not isinstance(load_angle, (int, float)) or not abs(load_angle) < 90:
        problems.append(f"load_angle_deg must be a number in (-90, 90), got {load_angle!r}")
    ud_offset = cfg["ud_axis_offset"]
    if not isinstance(ud_offset, (int, float)) or ud_offset < 0:
        problems.append(f"ud_axis_offset must be >= 0, got {ud_offset!r}")

    gh = np.asarray(cfg["gh_center"], dtype=float).reshape(3)
    if problems:
        raise ArmConfigError(problems)

    elbow = gh + lengths["upper_arm"] * REST_DIRECTION
    wrist = elbow + lengths["forearm"] * REST_DIRECTION
    axes = _biologic_axes(gh, elbow, wrist, math.radians(load_angle), float(ud_offset), frustum)

    for key, spec in cfg["gh_axes"].items():
        try:
            dof = ArmDOF(key)
            if dof not in GH_DOFS:
                raise ValueError
            direction = unit(spec["direction"])
            anchor = np.asarray(spec.get("anchor", gh), dtype=float).reshape(3)
        except (ValueError, KeyError, TypeError, InvalidArgument):
            problems.append(f"gh_axes.{key}: expected a GH DOF with a 'direction' and optional 'anchor'")
            continue
        axes[dof] = (direction, anchor)
    for dof in sequence:
        direction, anchor = axes[dof]
        offset = anchor - gh
        dist = np.linalg.norm(offset - (offset @ direction) * direction)
        if dist > CONCURRENCY_TOL:
            problems.append(f"gh_axes.{dof.value}: axis misses gh_center by {dist:.3g} m (must be concurrent)")
    if problems:
        raise ArmConfigError(problems)

    return ArmModel(
        gh_center=gh,
        upper_arm_length=lengths["upper_arm"],
        forearm_length=lengths["forearm"],
        hand_length=lengths["hand"],
        biologic_axes=axes,
        rom=rom,
        elbow_frustum=frustum,
        load_angle=math.radians(load_angle),
        ud_axis_offset=float(ud_offset),
        gh_sequence=sequence,
    )


def load_arm(path: str | Path | None = None) -> ArmModel:
    """Build an arm from a JSON config file (defaults when ``path`` is None)."""
    if path is None:
        return build_arm()
    with open(path, encoding="utf-8") as fh:
        return build_arm(json.load(fh))


def elbow_axis(frustum: FrustumParams, flexion: float) -> JointSpec:
    """Instantaneous elbow axis of the loose hinge at ``flexion``.

    The anchor is relative to the elbow center (rest orientation). Both ends
    of the flexion range give axes mirrored about the nominal axis when the
    two half-angles are equal.
    """
    lo, hi = frustum.flexion_range
    s = min(max((flexion - lo) / (hi - lo), 0.0), 1.0)
    phi = math.pi * s
    u, v = frustum.plane_basis()
    radial = math.cos(phi) * u + math.sin(phi) * v
    tilt = (1.0 - s) * frustum.proximal_half_angle + s * frustum.distal_half_angle
    direction = math.cos(tilt) * frustum.nominal_axis + math.sin(tilt) * radial
    anchor = (frustum.center
              + frustum.ellipse_semi_major * math.cos(phi) * u
              + frustum.ellipse_semi_minor * math.sin(phi) * v)
    return JointSpec(REVOLUTE, unit(direction), anchor, frustum.flexion_range, "ElbowFE", "elbow")


@dataclass(frozen=True, eq=False)
class ArmFrames:
    humerus: Pose
    forearm: Pose
    hand: Pose
    hand_tip: np.ndarray

    def segment(self, name: str) -> Pose:
        return {"upper_arm": self.humerus, "humerus": self.humerus,
                "forearm": self.forearm, "hand": self.hand}[name]


def pose_vector(arm: ArmModel, pose: Mapping | Sequence[float]) -> np.ndarray:
    """Normalize a pose (mapping DOF -> value, or 7 values) to a 7-vector."""
    if isinstance(pose, Mapping):
        values = {ArmDOF(k): float(v) for k, v in pose.items()}
        extra = set(values) - set(arm.pose_dofs)
        if extra:
            raise InvalidArgument(f"pose names DOF outside the arm parameterization: {sorted(d.value for d in extra)}")
        return np.array([values.get(d, 0.0) for d in arm.pose_dofs])
    q = np.asarray(pose, dtype=float).reshape(-1)
    if q.shape[0] != 7:
        raise InvalidArgument(f"arm pose needs 7 values, got {q.shape[0]}")
    return q


def arm_fk(arm: ArmModel, pose7, enforce_rom: bool = False) -> ArmFrames:
    """Segment frames of the arm at ``pose7`` (order: ``arm.pose_dofs``)."""
    q = pose_vector(arm, pose7)
    if enforce_rom:
        for dof, v in zip(arm.pose_dofs, q):
            lo, hi = arm.rom[dof]
            if not lo - 1e-12 <= v <= hi + 1e-12:
                raise ROMError(dof.value, v, lo, hi)

    D = Pose.identity()
    for dof, v in zip(arm.gh_sequence, q[:3]):
        direction, anchor = arm.axis(dof)
        D = D @ rotation_about_axis(direction, anchor, v)
    humerus = Pose(D.rotation, D.apply(arm.gh_center))

    elbow = elbow_axis(arm.elbow_frustum, q[3])
    D = D @ rotation_about_axis(elbow.axis, arm.elbow_center + elbow.anchor, q[3])
    ps_dir, ps_anchor = arm.axis(ArmDOF.PS)
    D = D @ rotation_about_axis(ps_dir, ps_anchor, q[4])
    forearm = Pose(D.rotation, D.apply(arm.elbow_center))

    for dof, v in zip((ArmDOF.WFE, ArmDOF.UD), q[5:]):
        direction, anchor = arm.axis(dof)
        D = D @ rotation_about_axis(direction, anchor, v)
    hand = Pose(D.rotation, D.apply(arm.wrist_center))
    return ArmFrames(humerus, forearm, hand, D.apply(arm.hand_tip))


# --- shoulder girdle concepts ------------------------------------------------

@dataclass(frozen=True, eq=False)
class FixedGirdle:
    kind = "Fixed"
    dof = 0


@dataclass(frozen=True, eq=False)
class SingleRevolute:
    """GH center swings on a circle about ``axis`` through ``anchor``.

    ``anchor`` is relative to the rest GH center.
    """

    axis: np.ndarray
    anchor: np.ndarray
    limits: tuple[float, float] = (-math.pi / 6, math.pi / 6)
    kind = "SingleRevolute"
    dof = 1

    def __post_init__(self):
        object.__setattr__(self, "axis", check_unit(self.axis, "SingleRevolute axis"))
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float).reshape(3))


@dataclass(frozen=True, eq=False)
class Polar:
    """Revolute about ``axis`` through ``anchor`` carrying a slide along ``direction``."""

    axis: np.ndarray
    anchor: np.ndarray
    direction: np.ndarray
    limits: tuple[tuple[float, float], tuple[float, float]] = ((-math.pi / 6, math.pi / 6), (-0.03, 0.03))
    kind = "Polar"
    dof = 2

    def __post_init__(self):
        object.__setattr__(self, "axis", check_unit(self.axis, "Polar axis"))
        object.__setattr__(self, "direction", check_unit(self.direction, "Polar direction"))
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float).reshape(3))


@dataclass(frozen=True, eq=False)
class Cartesian:
    directions: tuple[np.ndarray, np.ndarray, np.ndarray] = (ANTERIOR, LATERAL, SUPERIOR)
    limits: tuple[float, float] = (-0.05, 0.05)
    kind = "Cartesian"
    dof = 3

    def __post_init__(self):
        dirs = tuple(check_unit(d, "Cartesian direction") for d in self.directions)
        if len(dirs) != 3:
            raise InvalidArgument("Cartesian girdle needs three directions")
        gram = np.array(dirs) @ np.array(dirs).T
        if np.max(np.abs(gram - np.eye(3))) > 1e-9:
            raise InvalidArgument("Cartesian girdle directions must be mutually orthogonal")
        object.__setattr__(self, "directions", dirs)


@dataclass(frozen=True, eq=False)
class AxisLinkage:
    """Arm elevation drives a displacement of the GH center along ``axis``.

    ``knots`` is a monotone piecewise-linear map (elevation rad, displacement
    m) along ``axis``. A realized design slides its GH cluster along the
    first GH axis instead (vertical for an HABD-first sequence), so the
    two agree whenever ``axis`` is that direction.
    """

    knots: tuple[tuple[float, float], ...] = ((0.0, 0.0), (math.pi / 2, 0.05))
    axis: np.ndarray = field(default_factory=lambda: SUPERIOR.copy())
    kind = "AxisLinkage"
    dof = 1

    def __post_init__(self):
        knots = tuple((float(a), float(d)) for a, d in self.knots)
        if len(knots) < 2:
            raise InvalidArgument("AxisLinkage needs at least two knots")
        angles = np.array([k[0] for k in knots])
        disp = np.array([k[1] for k in knots])
        if np.any(np.diff(angles) <= 0):
            raise InvalidArgument("AxisLinkage knot angles must be strictly increasing")
        d = np.diff(disp)
        if np.any(d < 0) and np.any(d > 0):
            raise InvalidArgument("AxisLinkage coupling must be monotone")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "axis", check_unit(self.axis, "AxisLinkage axis"))

    def displacement(self, elevation: float) -> float:
        a = [k[0] for k in self.knots]
        d = [k[1] for k in self.knots]
        return float(np.interp(elevation, a, d))

    @property
    def displacement_range(self) -> tuple[float, float]:
        d = [k[1] for k in self.knots]
        return (min(d), max(d))


GirdleConcept = FixedGirdle | SingleRevolute | Polar | Cartesian | AxisLinkage


def gh_center_path(concept: GirdleConcept, driver: Sequence[float]) -> np.ndarray:
    """Displacement of the GH center produced by a girdle concept."""
    driver = np.asarray(driver, dtype=float).reshape(-1)
    if driver.shape[0] != concept.dof:
        raise InvalidArgument(f"{concept.kind} girdle takes {concept.dof} driver values, got {driver.shape[0]}")
    origin = np.zeros(3)
    if isinstance(concept, FixedGirdle):
        return origin
    if isinstance(concept, SingleRevolute):
        return rotation_about_axis(concept.axis, concept.anchor, driver[0]).apply(origin)
    if isinstance(concept, Polar):
        swing = rotation_about_axis(concept.axis, concept.anchor, driver[0])
        return swing.apply(origin + driver[1] * concept.direction)
    if isinstance(concept, Cartesian):
        return sum(v * d for v, d in zip(driver, concept.directions))
    if isinstance(concept, AxisLinkage):
        return concept.displacement(driver[0]) * concept.axis
    raise InvalidArgument(f"unknown girdle concept {concept!r}")
