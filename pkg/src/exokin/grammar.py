"""Design grammar: exoskeleton concepts as points of a finite product space.

A design picks one option per dimension (GH concept, girdle concept, elbow,
forearm PS, wrist, attachment). :func:`realize_chain` turns a design into a
:class:`~exokin.kinematics.SerialChain` laid out against an
:class:`~exokin.arm.ArmModel`: every frame has the body-frame orientation at
rest and its origin at the joint center of the fragment it belongs to.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from importlib import resources
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .arm import (ANTERIOR, LATERAL, REST_DIRECTION, ArmDOF, ArmModel, AxisLinkage, Cartesian,
                  FixedGirdle, FrustumParams, GirdleConcept, Polar, SingleRevolute,
                  pose_vector, ps_axis_direction)
from .canonical import canonical_dumps
from .errors import ConstructionError, InvalidArgument
from .kinematics import (PRISMATIC, REVOLUTE, JointSpec, Pose, SerialChain, forward_kinematics,
                         joint_screws, rodrigues)
from .spherical import (AxisTriplet, GHConcept, base_label, canonical_axes, condition_margin,
                        full_sphere_condition, measured_triplet)

SEGMENTS = ("upper_arm", "forearm", "hand")
RIGIDITY = ("rigid", "compliant")
DIMENSIONS = ("gh", "girdle", "elbow", "forearm_ps", "wrist", "attachment")
# Canonical 7-DOF arm pose; the HABD slot is also filled by ABD.
CANONICAL_DOFS = (ArmDOF.HABD, ArmDOF.FE, ArmDOF.IE, ArmDOF.ElbowFE, ArmDOF.PS, ArmDOF.WFE, ArmDOF.UD)

PASSIVE_SLIDE = 0.03
PASSIVE_TILT = math.pi / 6
MATCH_TOL = 1e-9


# --- variants ----------------------------------------------------------------

@dataclass(frozen=True)
class IdealHinge:
    kind = "IdealHinge"


@dataclass(frozen=True, eq=False)
class LooseHinge:
    """Elbow that follows a migrating axis (see :class:`FrustumParams`).

    Realized as a fixed FE hinge preceded by passive joints that let the
    hinge translate within the ellipse and tilt within the frustum.
    """

    frustum: FrustumParams
    kind = "LooseHinge"


@dataclass(frozen=True)
class AxialPS:
    load_angle: float
    kind = "AxialPS"


@dataclass(frozen=True)
class WFEOnly:
    kind = "WFEOnly"


@dataclass(frozen=True)
class WFEAndUD:
    ud_axis_offset: float
    kind = "WFEAndUD"


@dataclass(frozen=True)
class UDOnly:
    ud_axis_offset: float
    kind = "UDOnly"


ElbowVariant = IdealHinge | LooseHinge
WristVariant = WFEOnly | WFEAndUD | UDOnly


@dataclass(frozen=True)
class Cuff:
    segment: str
    rigidity: str = "rigid"
    passive_dof: int = 0

    def __post_init__(self):
        if self.segment not in SEGMENTS:
            raise InvalidArgument(f"cuff segment must be one of {SEGMENTS}, got {self.segment!r}")
        if self.rigidity not in RIGIDITY:
            raise InvalidArgument(f"cuff rigidity must be one of {RIGIDITY}, got {self.rigidity!r}")
        if not isinstance(self.passive_dof, (int, np.integer)) or not 0 <= self.passive_dof <= 6:
            raise InvalidArgument(f"cuff passive_dof must be an integer in [0, 6], got {self.passive_dof!r}")


@dataclass(frozen=True)
class AttachmentSpec:
    cuffs: tuple[Cuff, ...]

    def __post_init__(self):
        cuffs = tuple(self.cuffs)
        if not cuffs:
            raise InvalidArgument("attachment needs at least one cuff")
        if len({c.segment for c in cuffs}) != len(cuffs):
            raise InvalidArgument("at most one cuff per segment")
        object.__setattr__(self, "cuffs", tuple(sorted(cuffs, key=lambda c: SEGMENTS.index(c.segment))))

    @property
    def self_aligning(self) -> bool:
        return any(c.passive_dof > 0 for c in self.cuffs)

    @property
    def is_exoskeleton(self) -> bool:
        """More than one physical interface to the arm."""
        return len(self.cuffs) > 1

    def cuff(self, segment: str) -> Cuff | None:
        return next((c for c in self.cuffs if c.segment == segment), None)


DEFAULT_ATTACHMENT = AttachmentSpec((Cuff("upper_arm"), Cuff("forearm")))


@dataclass(frozen=True, eq=False)
class ExoDesign:
    gh: GHConcept | None
    girdle: GirdleConcept = field(default_factory=FixedGirdle)
    elbow: ElbowVariant | None = field(default_factory=IdealHinge)
    forearm_ps: AxialPS | None = None
    wrist: WristVariant | None = None
    attachment: AttachmentSpec = DEFAULT_ATTACHMENT

    def __post_init__(self):
        if self.gh is None and self.elbow is None and self.wrist is None:
            raise InvalidArgument("a design needs at least one of gh, elbow, wrist")
        if not isinstance(self.girdle, FixedGirdle) and self.gh is None:
            raise InvalidArgument(f"{self.girdle.kind} girdle needs a GH concept to displace")

    def to_dict(self) -> dict:
        return design_to_dict(self)

    def __eq__(self, other):
        return isinstance(other, ExoDesign) and canonical_dumps(self.to_dict()) == canonical_dumps(other.to_dict())

    def __hash__(self):
        return hash(canonical_dumps(self.to_dict()))


# --- serialization -----------------------------------------------------------

def _deg(x: float) -> float:
    return math.degrees(x)


def _rad(x) -> float:
    return math.radians(float(x))


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def _expect_keys(d: Mapping, allowed: Iterable[str], where: str) -> None:
    if not isinstance(d, Mapping):
        raise InvalidArgument(f"{where}: expected an object, got {type(d).__name__}")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise InvalidArgument(f"{where}: unknown key(s) {extra}")


def gh_to_dict(c: GHConcept | None) -> dict | None:
    if c is None:
        return None
    return {
        "sequence": list(c.sequence),
        "biologic": c.biologic,
        "triplet_deg": list(c.triplet.degrees()),
        "joint_limits_deg": [[_deg(lo), _deg(hi)] for lo, hi in c.joint_limits],
        "absent": list(c.absent),
    }


def gh_from_dict(d: Mapping | None) -> GHConcept | None:
    if d is None:
        return None
    _expect_keys(d, ("sequence", "biologic", "triplet_deg", "joint_limits_deg", "absent"), "gh")
    limits = d.get("joint_limits_deg", [[-180.0, 180.0]] * 3)
    return GHConcept(
        triplet=AxisTriplet.from_degrees(*d["triplet_deg"]),
        sequence=tuple(d.get("sequence", ("HABD", "FE", "IE"))),
        biologic=bool(d.get("biologic", True)),
        joint_limits=tuple((_rad(lo), _rad(hi)) for lo, hi in limits),
        absent=tuple(d.get("absent", ())),
    )


def girdle_to_dict(g: GirdleConcept) -> dict:
    if isinstance(g, FixedGirdle):
        return {"kind": "Fixed"}
    if isinstance(g, SingleRevolute):
        return {"kind": g.kind, "axis": _vec(g.axis), "anchor": _vec(g.anchor),
                "limits_deg": [_deg(g.limits[0]), _deg(g.limits[1])]}
    if isinstance(g, Polar):
        (alo, ahi), (slo, shi) = g.limits
        return {"kind": g.kind, "axis": _vec(g.axis), "anchor": _vec(g.anchor),
                "direction": _vec(g.direction), "angle_limits_deg": [_deg(alo), _deg(ahi)],
                "slide_limits": [slo, shi]}
    if isinstance(g, Cartesian):
        return {"kind": g.kind, "directions": [_vec(v) for v in g.directions],
                "limits": list(g.limits)}
    if isinstance(g, AxisLinkage):
        return {"kind": g.kind, "knots_deg": [[_deg(a), s] for a, s in g.knots], "axis": _vec(g.axis)}
    raise InvalidArgument(f"unknown girdle concept {g!r}")


def girdle_from_dict(d: Mapping) -> GirdleConcept:
    kind = d.get("kind") if isinstance(d, Mapping) else None
    if kind == "Fixed":
        _expect_keys(d, ("kind",), "girdle")
        return FixedGirdle()
    if kind == "SingleRevolute":
        _expect_keys(d, ("kind", "axis", "anchor", "limits_deg"), "girdle")
        lo, hi = d.get("limits_deg", (-30.0, 30.0))
        return SingleRevolute(d["axis"], d["anchor"], (_rad(lo), _rad(hi)))
    if kind == "Polar":
        _expect_keys(d, ("kind", "axis", "anchor", "direction", "angle_limits_deg", "slide_limits"), "girdle")
        alo, ahi = d.get("angle_limits_deg", (-30.0, 30.0))
        slo, shi = d.get("slide_limits", (-0.03, 0.03))
        return Polar(d["axis"], d["anchor"], d["direction"], ((_rad(alo), _rad(ahi)), (float(slo), float(shi))))
    if kind == "Cartesian":
        _expect_keys(d, ("kind", "directions", "limits"), "girdle")
        dirs = d.get("directions", [ANTERIOR, LATERAL, -REST_DIRECTION])
        lo, hi = d.get("limits", (-0.05, 0.05))
        return Cartesian(tuple(np.asarray(v, dtype=float) for v in dirs), (float(lo), float(hi)))
    if kind == "AxisLinkage":
        _expect_keys(d, ("kind", "knots_deg", "axis"), "girdle")
        knots = tuple((_rad(a), float(s)) for a, s in d.get("knots_deg", ((0.0, 0.0), (90.0, 0.05))))
        return AxisLinkage(knots, np.asarray(d.get("axis", -REST_DIRECTION), dtype=float))
    raise InvalidArgument(f"girdle: unknown kind {kind!r}")


def frustum_to_dict(f: FrustumParams) -> dict:
    return {
        "semi_major": f.ellipse_semi_major,
        "semi_minor": f.ellipse_semi_minor,
        "proximal_half_angle_deg": _deg(f.proximal_half_angle),
        "distal_half_angle_deg": _deg(f.distal_half_angle),
        "center": _vec(f.center),
        "nominal_axis": _vec(f.nominal_axis),
        "flexion_range_deg": [_deg(f.flexion_range[0]), _deg(f.flexion_range[1])],
    }


def frustum_from_dict(d: Mapping) -> FrustumParams:
    _expect_keys(d, ("semi_major", "semi_minor", "proximal_half_angle_deg", "distal_half_angle_deg",
                     "center", "nominal_axis", "flexion_range_deg"), "frustum")
    lo, hi = d.get("flexion_range_deg", (0.0, 145.0))
    return FrustumParams(
        ellipse_semi_major=float(d.get("semi_major", 0.0)),
        ellipse_semi_minor=float(d.get("semi_minor", 0.0)),
        proximal_half_angle=_rad(d.get("proximal_half_angle_deg", 0.0)),
        distal_half_angle=_rad(d.get("distal_half_angle_deg", 0.0)),
        center=d.get("center", (0.0, 0.0, 0.0)),
        nominal_axis=d.get("nominal_axis", -LATERAL),
        flexion_range=(_rad(lo), _rad(hi)),
    )


def elbow_to_dict(e: ElbowVariant | None) -> dict | None:
    if e is None:
        return None
    if isinstance(e, LooseHinge):
        return {"kind": e.kind, "frustum": frustum_to_dict(e.frustum)}
    return {"kind": e.kind}


def elbow_from_dict(d: Mapping | None) -> ElbowVariant | None:
    if d is None:
        return None
    kind = d.get("kind")
    if kind == "IdealHinge":
        _expect_keys(d, ("kind",), "elbow")
        return IdealHinge()
    if kind == "LooseHinge":
        _expect_keys(d, ("kind", "frustum"), "elbow")
        return LooseHinge(frustum_from_dict(d.get("frustum", {})))
    raise InvalidArgument(f"elbow: unknown kind {kind!r}")


def ps_to_dict(p: AxialPS | None) -> dict | None:
    return None if p is None else {"kind": p.kind, "load_angle_deg": _deg(p.load_angle)}


def ps_from_dict(d: Mapping | None) -> AxialPS | None:
    if d is None:
        return None
    _expect_keys(d, ("kind", "load_angle_deg"), "forearm_ps")
    if d.get("kind") != "AxialPS":
        raise InvalidArgument(f"forearm_ps: unknown kind {d.get('kind')!r}")
    return AxialPS(_rad(d.get("load_angle_deg", 10.0)))


def wrist_to_dict(w: WristVariant | None) -> dict | None:
    if w is None:
        return None
    if isinstance(w, WFEOnly):
        return {"kind": w.kind}
    return {"kind": w.kind, "ud_axis_offset": w.ud_axis_offset}


def wrist_from_dict(d: Mapping | None) -> WristVariant | None:
    if d is None:
        return None
    kind = d.get("kind")
    if kind == "WFEOnly":
        _expect_keys(d, ("kind",), "wrist")
        return WFEOnly()
    if kind in ("WFEAndUD", "UDOnly"):
        _expect_keys(d, ("kind", "ud_axis_offset"), "wrist")
        offset = float(d.get("ud_axis_offset", 0.015))
        if offset < 0:
            raise InvalidArgument("wrist: ud_axis_offset must be >= 0")
        return WFEAndUD(offset) if kind == "WFEAndUD" else UDOnly(offset)
    raise InvalidArgument(f"wrist: unknown kind {kind!r}")


def attachment_to_dict(a: AttachmentSpec) -> dict:
    return {"cuffs": [{"segment": c.segment, "rigidity": c.rigidity, "passive_dof": c.passive_dof}
                      for c in a.cuffs]}


def attachment_from_dict(d: Mapping) -> AttachmentSpec:
    _expect_keys(d, ("cuffs",), "attachment")
    cuffs = []
    for c in d.get("cuffs", ()):
        _expect_keys(c, ("segment", "rigidity", "passive_dof"), "attachment.cuffs")
        cuffs.append(Cuff(c["segment"], c.get("rigidity", "rigid"), int(c.get("passive_dof", 0))))
    return AttachmentSpec(tuple(cuffs))


_DIM_CODECS: dict[str, tuple[Callable, Callable]] = {
    "gh": (gh_to_dict, gh_from_dict),
    "girdle": (girdle_to_dict, girdle_from_dict),
    "elbow": (elbow_to_dict, elbow_from_dict),
    "forearm_ps": (ps_to_dict, ps_from_dict),
    "wrist": (wrist_to_dict, wrist_from_dict),
    "attachment": (attachment_to_dict, attachment_from_dict),
}


def design_to_dict(d: ExoDesign) -> dict:
    return {dim: _DIM_CODECS[dim][0](getattr(d, dim)) for dim in DIMENSIONS}


def design_from_dict(d: Mapping) -> ExoDesign:
    _expect_keys(d, DIMENSIONS, "design")
    kwargs = {dim: _DIM_CODECS[dim][1](d.get(dim)) for dim in DIMENSIONS if dim != "girdle" and dim != "attachment"}
    kwargs["girdle"] = girdle_from_dict(d.get("girdle", {"kind": "Fixed"}))
    kwargs["attachment"] = attachment_from_dict(d.get("attachment", attachment_to_dict(DEFAULT_ATTACHMENT)))
    return ExoDesign(**kwargs)


def design_json(d: ExoDesign) -> str:
    return canonical_dumps(design_to_dict(d))


def design_id(d: ExoDesign) -> str:
    return hashlib.sha256(design_json(d).encode()).hexdigest()[:12]


# --- options and enumeration ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class GrammarOptions:
    gh: tuple
    girdle: tuple
    elbow: tuple
    forearm_ps: tuple
    wrist: tuple
    attachment: tuple

    def __post_init__(self):
        for dim in DIMENSIONS:
            values = tuple(getattr(self, dim))
            if not values:
                raise InvalidArgument(f"grammar option set '{dim}' is empty")
            object.__setattr__(self, dim, values)
        if None in self.gh and None in self.elbow and None in self.wrist:
            raise InvalidArgument("options allow a design without gh, elbow and wrist")
        if None in self.gh and any(not isinstance(g, FixedGirdle) for g in self.girdle):
            raise InvalidArgument("options pair a missing GH concept with a moving girdle")

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(getattr(self, dim)) for dim in DIMENSIONS)

    @property
    def cardinality(self) -> int:
        return math.prod(self.sizes)

    def to_dict(self) -> dict:
        return {dim: [_DIM_CODECS[dim][0](v) for v in getattr(self, dim)] for dim in DIMENSIONS}

    @classmethod
    def from_dict(cls, d: Mapping) -> "GrammarOptions":
        _expect_keys(d, DIMENSIONS, "grammar options")
        missing = [dim for dim in DIMENSIONS if dim not in d]
        if missing:
            raise InvalidArgument(f"grammar options missing dimension(s) {missing}")
        return cls(**{dim: tuple(_DIM_CODECS[dim][1](v) for v in d[dim]) for dim in DIMENSIONS})


Predicate = Callable[[ExoDesign], bool]


def _girdle_kind(params):
    kinds = set(params.get("kinds", ()))
    return lambda d: d.girdle.kind in kinds


def _min_margin(params):
    margin = math.radians(float(params.get("deg", 0.0)))
    return lambda d: d.gh is not None and condition_margin(d.gh.triplet) >= margin


FILTERS: dict[str, Callable[[Mapping], Predicate]] = {
    "full_sphere": lambda p: (lambda d: d.gh is not None and full_sphere_condition(d.gh.triplet)),
    "supports_all_dof": lambda p: (lambda d: not dof_gaps(d)),
    "biologic": lambda p: (lambda d: d.gh is not None and d.gh.biologic),
    "self_aligning": lambda p: (lambda d: d.attachment.self_aligning),
    "exoskeleton": lambda p: (lambda d: d.attachment.is_exoskeleton),
    "girdle_kind": _girdle_kind,
    "min_sphere_margin": _min_margin,
}


def make_filter(name: str, params: Mapping | None = None) -> Predicate:
    if name not in FILTERS:
        raise InvalidArgument(f"unknown filter {name!r}; known: {sorted(FILTERS)}")
    return FILTERS[name](params or {})


def enumerate_designs(opts: GrammarOptions, filters: Sequence[Predicate] = ()) -> Iterator[ExoDesign]:
    """Stream the filtered product of the option sets.

    Order is lexicographic over (gh, girdle, elbow, forearm_ps, wrist,
    attachment) with options in the order given.
    """
    for combo in itertools.product(*(getattr(opts, dim) for dim in DIMENSIONS)):
        design = ExoDesign(**dict(zip(DIMENSIONS, combo)))
        if all(f(design) for f in filters):
            yield design


# --- realization -------------------------------------------------------------

SEGMENT_OF_GROUP = {
    "girdle": "upper_arm", "gh": "upper_arm", "passive:upper_arm": "upper_arm",
    "elbow_passive": "forearm", "elbow": "forearm", "ps": "forearm", "passive:forearm": "forearm",
    "wrist": "hand", "passive:hand": "hand",
}


class _Builder:
    """Accumulates joints given in world (rest) coordinates."""

    def __init__(self):
        self.items: list[tuple[Pose, JointSpec]] = []
        self.origin = np.zeros(3)

    def add(self, kind, axis, anchor, limits, label, group, origin=None):
        origin = self.origin if origin is None else np.asarray(origin, dtype=float)
        fixed = Pose.from_translation(origin - self.origin)
        local_anchor = np.asarray(anchor, dtype=float) - origin
        self.items.append((fixed, JointSpec(kind, axis, local_anchor, tuple(limits), label, group)))
        self.origin = origin


def _gh_axes(gh: GHConcept, arm: ArmModel) -> list[np.ndarray]:
    if gh.biologic:
        axes = []
        for label in gh.sequence:
            direction, anchor = arm.axis(base_label(label))
            offset = anchor - arm.gh_center
            if np.linalg.norm(offset - (offset @ direction) * direction) > MATCH_TOL:
                raise ConstructionError("gh", f"biologic {label} axis misses the GH center")
            axes.append(direction)
        measured = measured_triplet(axes, REST_DIRECTION)
        if np.max(np.abs(np.subtract(measured, gh.triplet.as_tuple()))) > 1e-9:
            raise ConstructionError(
                "gh", f"triplet {tuple(round(x, 6) for x in gh.triplet.degrees())} deg does not match "
                      f"the arm's biologic {gh.sequence} axes "
                      f"{tuple(round(math.degrees(x), 6) for x in measured)} deg")
        return axes
    # Turn the canonical placement so the pointing direction hangs along the arm.
    axes, _ = canonical_axes(gh.triplet)
    R = rodrigues(LATERAL, math.pi - sum(gh.triplet.as_tuple()))
    return [R @ a for a in axes]


def _passive_cuff_joints(b: _Builder, segment: str, count: int, point: np.ndarray):
    dirs = (REST_DIRECTION, ANTERIOR, LATERAL)
    specs = [(PRISMATIC, d) for d in dirs] + [(REVOLUTE, d) for d in dirs]
    for i, (kind, direction) in enumerate(specs[:count]):
        lim = (-PASSIVE_SLIDE, PASSIVE_SLIDE) if kind == PRISMATIC else (-PASSIVE_TILT, PASSIVE_TILT)
        b.add(kind, direction, point, lim, f"PASSIVE_{segment}_{i + 1}", f"passive:{segment}")


def realize_chain(d: ExoDesign, arm: ArmModel) -> SerialChain:
    """Serial chain of ``d`` laid out on ``arm`` at its rest pose.

    Order: girdle, GH, upper-arm cuff passives, elbow, PS, forearm cuff
    passives, wrist, hand cuff passives. Joints carry their design label
    (``"HABD"``, ``"ElbowFE"``...) or a synthetic one for passive and
    girdle joints.
    """
    b = _Builder()
    gh_c = arm.gh_center
    g = d.girdle
    if isinstance(g, SingleRevolute):
        b.add(REVOLUTE, g.axis, gh_c + g.anchor, g.limits, "GIRDLE_R", "girdle", gh_c)
    elif isinstance(g, Polar):
        b.add(REVOLUTE, g.axis, gh_c + g.anchor, g.limits[0], "GIRDLE_R", "girdle", gh_c)
        b.add(PRISMATIC, g.direction, gh_c, g.limits[1], "GIRDLE_P", "girdle", gh_c)
    elif isinstance(g, Cartesian):
        for name, direction in zip("XYZ", g.directions):
            b.add(PRISMATIC, direction, gh_c, g.limits, f"GIRDLE_{name}", "girdle", gh_c)
    elif isinstance(g, AxisLinkage):
        # The linkage slides the GH cluster along the first GH axis (which
        # therefore stays put); an independent slide with the coupling's
        # range spans the same set of centers.
        if d.gh is None:
            raise ConstructionError("girdle", "AxisLinkage needs a GH concept")
        first = _gh_axes(d.gh, arm)[0]
        b.add(PRISMATIC, first, gh_c, g.displacement_range, "LINKAGE", "girdle", gh_c)

    if d.gh is not None:
        for label, axis, lim, present in zip(d.gh.sequence, _gh_axes(d.gh, arm),
                                             d.gh.joint_limits, d.gh.present):
            if present:
                b.add(REVOLUTE, axis, gh_c, lim, label, "gh", gh_c)

    cuffs = d.attachment
    rom = arm.rom
    elbow = arm.elbow_center
    wrist = arm.wrist_center

    def cuff_passives(segment, start, end):
        cuff = cuffs.cuff(segment)
        if cuff is not None and cuff.passive_dof:
            _passive_cuff_joints(b, segment, cuff.passive_dof, 0.5 * (start + end))

    cuff_passives("upper_arm", gh_c, elbow)

    if d.elbow is not None:
        nominal, anchor = arm.axis(ArmDOF.ElbowFE)
        if isinstance(d.elbow, LooseHinge):
            f = d.elbow.frustum
            center = elbow + f.center
            u, v = f.plane_basis()
            for i, (semi, direction) in enumerate(((f.ellipse_semi_major, u), (f.ellipse_semi_minor, v))):
                if semi > 0:
                    b.add(PRISMATIC, direction, center, (-semi, semi), f"ELBOW_S{i + 1}", "elbow_passive", elbow)
            tilt = max(f.proximal_half_angle, f.distal_half_angle)
            if tilt > 0:
                for i, direction in enumerate((u, v)):
                    b.add(REVOLUTE, direction, center, (-tilt, tilt), f"ELBOW_T{i + 1}", "elbow_passive", elbow)
            nominal, anchor = f.nominal_axis, center
        b.add(REVOLUTE, nominal, anchor, rom[ArmDOF.ElbowFE], "ElbowFE", "elbow", elbow)

    if d.forearm_ps is not None:
        b.add(REVOLUTE, ps_axis_direction(d.forearm_ps.load_angle), elbow, rom[ArmDOF.PS], "PS", "ps", elbow)

    cuff_passives("forearm", elbow, wrist)

    w = d.wrist
    if isinstance(w, (WFEOnly, WFEAndUD)):
        direction, _ = arm.axis(ArmDOF.WFE)
        b.add(REVOLUTE, direction, wrist, rom[ArmDOF.WFE], "WFE", "wrist", wrist)
    if isinstance(w, (WFEAndUD, UDOnly)):
        direction, _ = arm.axis(ArmDOF.UD)
        b.add(REVOLUTE, direction, wrist - w.ud_axis_offset * REST_DIRECTION, rom[ArmDOF.UD], "UD", "wrist", wrist)

    cuff_passives("hand", wrist, arm.hand_tip)
    if not b.items:
        raise ConstructionError("design", "design realizes to an empty chain")
    return SerialChain(tuple(b.items))


def segment_center(arm: ArmModel, segment: str) -> np.ndarray:
    return {"upper_arm": arm.gh_center, "forearm": arm.elbow_center, "hand": arm.wrist_center}[segment]


def segment_frame_index(chain: SerialChain, segment: str) -> int:
    """Index of the last joint frame rigidly carrying ``segment``'s cuff link.

    Returns -1 when no joint precedes the segment (the link is the base).
    """
    order = SEGMENTS.index(segment)
    idx = -1
    for i, spec in enumerate(chain.specs):
        seg = SEGMENT_OF_GROUP.get(spec.group)
        if seg is not None and SEGMENTS.index(seg) <= order:
            idx = i
    return idx


def segment_offset(chain: SerialChain, arm: ArmModel, segment: str) -> tuple[int, np.ndarray]:
    """(frame index, local offset) placing the segment's cuff frame.

    The cuff frame has its origin at the segment's proximal joint center and
    the rest orientation of the body frame, matching :func:`arm_fk` frames.
    """
    idx = segment_frame_index(chain, segment)
    rest = chain.base_pose if idx < 0 else forward_kinematics(chain, np.zeros(chain.n))[idx]
    return idx, rest.inverse().apply(segment_center(arm, segment))


def segment_frame(chain: SerialChain, arm: ArmModel, segment: str, q) -> Pose:
    idx, offset = segment_offset(chain, arm, segment)
    F = chain.base_pose if idx < 0 else forward_kinematics(chain, q)[idx]
    return F @ Pose.from_translation(offset)


def map_arm_pose(chain: SerialChain, arm: ArmModel, pose7) -> np.ndarray:
    """Joint values copying each arm DOF onto the joint of the same label.

    Tilted labels (``"HABD*"``) take the value of their base DOF; joints
    without an arm counterpart stay at zero.
    """
    q7 = pose_vector(arm, pose7)
    values = {dof.value: v for dof, v in zip(arm.pose_dofs, q7)}
    return np.array([values.get(base_label(label), 0.0) for label in chain.labels])


def direct_mapping(chain: SerialChain, arm: ArmModel) -> np.ndarray | None:
    """Per-joint arm pose index for a chain whose active axes are the arm's.

    Returns an int array (``-1`` for joints held at zero) when every joint
    labeled with a pose DOF lies on that DOF's biologic axis at rest, in the
    arm's composition order, so that copying the pose reproduces
    :func:`arm_fk` exactly. Returns None otherwise, including for any chain
    with tilted (``*``) axes.
    """
    pose_labels = [dof.value for dof in arm.pose_dofs]
    idx = np.full(chain.n, -1)
    order = []
    for i, (kind, point, direction) in enumerate(joint_screws(chain, np.zeros(chain.n))):
        label = chain.specs[i].label
        if label.endswith("*"):
            return None
        if label not in pose_labels:
            continue
        if kind != REVOLUTE:
            return None
        dof = ArmDOF(label)
        if dof == ArmDOF.ElbowFE and not arm.elbow_frustum.degenerate:
            return None
        axis, anchor = arm.axis(dof)
        offset = point - anchor
        if (np.linalg.norm(direction - axis) > MATCH_TOL
                or np.linalg.norm(offset - (offset @ axis) * axis) > MATCH_TOL):
            return None
        j = pose_labels.index(label)
        idx[i] = j
        order.append(j)
    if not order or order != sorted(order) or len(set(order)) != len(order):
        return None
    return idx


def gh_fragment(chain: SerialChain) -> SerialChain | None:
    """The GH joints of a realized chain as a stand-alone chain (rest pose)."""
    joints = []
    for (kind, point, direction), spec in zip(joint_screws(chain, np.zeros(chain.n)), chain.specs):
        if spec.group == "gh":
            joints.append((Pose.identity(), JointSpec(kind, direction, point, spec.limits, spec.label, "gh")))
    return SerialChain(tuple(joints)) if joints else None


# --- DOF support ---------------------------------------------------------------

def dof_support(d: ExoDesign) -> set[ArmDOF]:
    """Arm DOF the design has a mobility for.

    A GH concept with all three joints present and non-collinear
    consecutive axes spans every shoulder rotation, so it supports each GH
    DOF; otherwise each present joint supports its own base DOF.
    """
    out: set[ArmDOF] = set()
    if d.gh is not None:
        t = d.gh.triplet
        if all(d.gh.present) and t.theta1 > 1e-9 and t.theta2 > 1e-9:
            out |= {ArmDOF.ABD, ArmDOF.HABD, ArmDOF.FE, ArmDOF.IE}
        else:
            out |= {ArmDOF(base_label(l)) for l, p in zip(d.gh.sequence, d.gh.present) if p}
    if d.elbow is not None:
        out.add(ArmDOF.ElbowFE)
    if d.forearm_ps is not None:
        out.add(ArmDOF.PS)
    if isinstance(d.wrist, (WFEOnly, WFEAndUD)):
        out.add(ArmDOF.WFE)
    if isinstance(d.wrist, (WFEAndUD, UDOnly)):
        out.add(ArmDOF.UD)
    return out


def dof_gaps(d: ExoDesign) -> set[ArmDOF]:
    """Canonical 7-DOF arm pose entries the design cannot follow."""
    support = dof_support(d)
    gaps = set()
    for dof in CANONICAL_DOFS:
        if dof == ArmDOF.HABD:
            if not support & {ArmDOF.HABD, ArmDOF.ABD}:
                gaps.add(ArmDOF.HABD)
        elif dof not in support:
            gaps.add(dof)
    return gaps


def options_summary(opts: GrammarOptions) -> dict[str, Any]:
    return {"sizes": dict(zip(DIMENSIONS, opts.sizes)), "cardinality": opts.cardinality}


def default_grammar_path():
    return resources.files("exokin") / "data" / "grammar_default.json"


def load_grammar_options(path=None) -> GrammarOptions:
    """Grammar options from a JSON file (the packaged default when None)."""
    source = default_grammar_path() if path is None else path
    with open(source, encoding="utf-8") as fh:
        return GrammarOptions.from_dict(json.load(fh))
