"""Published-device catalog and its classification as grammar instances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .arm import (ANTERIOR, LATERAL, REST_DIRECTION, ArmDOF, ArmModel, AxisLinkage, Cartesian,
                  FixedGirdle, FrustumParams, Polar, SingleRevolute, build_arm)
from .errors import ConstructionError, InvalidArgument
from .grammar import (AttachmentSpec, AxialPS, Cuff, ExoDesign, GrammarOptions, IdealHinge,
                      LooseHinge, UDOnly, WFEAndUD, WFEOnly, dof_gaps, realize_chain)
from .spherical import (FULL_CIRCLE, AxisTriplet, GHConcept, base_label, concurrency_point,
                        measured_triplet)
from .kinematics import REVOLUTE, JointSpec, Pose, SerialChain

FACT_NAMES = ("biologic", "sequence", "triplet_deg", "gh_axes", "girdle", "elbow", "forearm_ps",
              "wrist", "self_aligning", "missing_dofs")
NOT_CONCURRENT = "GH axes must intersect at a single point"

BIOLOGIC_SEQUENCE = ("HABD", "FE", "IE")
TILTED_SEQUENCE = ("HABD*", "ABD*", "FE*")
TILTED_TRIPLET_DEG = (90.0, 90.0, 45.0)
SELF_ALIGNING_PASSIVE_DOF = 3

# Parameter fixtures used when an entry names a concept kind without geometry.
DEFAULT_GIRDLES = {
    "Fixed": lambda: FixedGirdle(),
    "SingleRevolute": lambda: SingleRevolute(ANTERIOR, np.array([0.0, -0.15, 0.0])),
    "Polar": lambda: Polar(ANTERIOR, np.array([0.0, -0.15, 0.0]), LATERAL),
    "Cartesian": lambda: Cartesian(),
    "AxisLinkage": lambda: AxisLinkage(),
}
DEFAULT_LOOSE_FRUSTUM = dict(ellipse_semi_major=0.004, ellipse_semi_minor=0.002,
                             proximal_half_angle=math.radians(3.0), distal_half_angle=math.radians(3.0))


@dataclass(frozen=True)
class Fact:
    value: Any
    provenance: str


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    facts: Mapping[str, Fact]

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise InvalidArgument("catalog entry name must be nonempty")
        for key, fact in self.facts.items():
            if key not in FACT_NAMES:
                raise InvalidArgument(f"{self.name}: unknown fact {key!r}")
            if not isinstance(fact.provenance, str) or not fact.provenance.strip():
                raise InvalidArgument(f"{self.name}: fact {key!r} has no provenance")

    def stated(self, key: str) -> bool:
        return key in self.facts

    def value(self, key: str, default=None):
        fact = self.facts.get(key)
        return default if fact is None else fact.value

    @classmethod
    def from_dict(cls, d: Mapping) -> "CatalogEntry":
        if not isinstance(d, Mapping) or set(d) - {"name", "facts"}:
            raise InvalidArgument(f"catalog entry must have only 'name' and 'facts', got {d!r}")
        facts = {}
        for key, f in (d.get("facts") or {}).items():
            if not isinstance(f, Mapping) or set(f) != {"value", "provenance"}:
                raise InvalidArgument(f"{d.get('name')}: fact {key!r} needs exactly 'value' and 'provenance'")
            facts[key] = Fact(f["value"], f["provenance"])
        return cls(str(d.get("name", "")), facts)


@dataclass(frozen=True, eq=False)
class Classification:
    entry: str
    design: ExoDesign
    assumed: tuple[str, ...]

    representable = True


@dataclass(frozen=True)
class NotRepresentable:
    entry: str
    reason: str

    representable = False


def default_catalog_path() -> Path:
    return Path(str(resources.files("exokin") / "data" / "catalog.json"))


def load_catalog(path: str | Path | None = None) -> list[CatalogEntry]:
    path = default_catalog_path() if path is None else Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise InvalidArgument("catalog file must hold a JSON list of entries")
    return [CatalogEntry.from_dict(e) for e in raw]


def _gh_axes_chain(spec) -> SerialChain:
    joints = []
    for i, ax in enumerate(spec):
        joints.append((Pose.identity(), JointSpec(REVOLUTE, np.asarray(ax["direction"], dtype=float),
                                                  np.asarray(ax.get("anchor", (0, 0, 0)), dtype=float),
                                                  FULL_CIRCLE, f"A{i + 1}", "gh")))
    return SerialChain(tuple(joints))


class _Conflict(Exception):
    pass


def _gh_concept(e: CatalogEntry, arm: ArmModel, missing: set[ArmDOF], assumed: list[str]) -> GHConcept:
    triplet = None
    if e.stated("gh_axes"):
        spec = e.value("gh_axes")
        if not isinstance(spec, list) or len(spec) != 3:
            raise _Conflict("gh_axes must list three axes")
        try:
            chain = _gh_axes_chain(spec)
        except (InvalidArgument, KeyError, TypeError, ValueError) as exc:
            raise _Conflict(f"gh_axes: {exc}")
        _, dist = concurrency_point(chain)
        if dist > 1e-9:
            raise _Conflict(NOT_CONCURRENT)
        triplet = AxisTriplet(*measured_triplet([j.axis for j in chain.specs], REST_DIRECTION))

    sequence = e.value("sequence")
    if sequence is not None:
        sequence = tuple(sequence)
    biologic = e.value("biologic")
    if biologic is None:
        biologic = not (sequence and any(s.endswith("*") for s in sequence))
        assumed.append("gh.biologic")
    if sequence is None:
        sequence = BIOLOGIC_SEQUENCE if biologic else TILTED_SEQUENCE
        assumed.append("gh.sequence")
    if biologic and any(s.endswith("*") for s in sequence):
        raise _Conflict(f"biologic entry lists tilted axes {sequence}")

    if e.stated("triplet_deg"):
        stated = AxisTriplet.from_degrees(*e.value("triplet_deg"))
        if triplet is not None and max(abs(a - b) for a, b in zip(stated.as_tuple(), triplet.as_tuple())) > 1e-9:
            raise _Conflict("stated triplet differs from the stated GH axes")
        triplet = stated
    if triplet is None:
        if biologic:
            axes = [arm.axis(base_label(s))[0] for s in sequence]
            triplet = AxisTriplet(*measured_triplet(axes, REST_DIRECTION))
        else:
            triplet = AxisTriplet.from_degrees(*TILTED_TRIPLET_DEG)
        assumed.append("gh.triplet")

    absent = []
    for dof in sorted(missing & {ArmDOF.ABD, ArmDOF.FE, ArmDOF.IE, ArmDOF.HABD}, key=lambda x: x.value):
        labels = [s for s in sequence if base_label(s) == dof.value]
        if not labels:
            raise _Conflict(f"missing DOF {dof.value} has no joint in sequence {sequence}")
        absent.extend(labels)
    assumed.append("gh.joint_limits")
    try:
        return GHConcept(triplet, sequence, bool(biologic), (FULL_CIRCLE,) * 3, tuple(absent))
    except InvalidArgument as exc:
        raise _Conflict(f"gh: {exc}")


def _kinds(options) -> set[str]:
    return {"None" if o is None else o.kind for o in options}


def classify_catalog_entry(e: CatalogEntry, opts: GrammarOptions | None = None,
                           arm: ArmModel | None = None) -> Classification | NotRepresentable:
    """Grammar instance consistent with every stated fact of ``e``.

    Unstated fields take declared defaults and are listed in ``assumed``.
    When the entry states its missing DOF, the remaining arm DOF are filled
    as present; otherwise the least-committal fill applies (Fixed girdle,
    IdealHinge elbow, no forearm PS, no wrist).
    """
    arm = build_arm() if arm is None else arm
    assumed: list[str] = []
    try:
        missing_stated = e.stated("missing_dofs")
        try:
            missing = {ArmDOF(m) for m in e.value("missing_dofs", ())}
        except ValueError as exc:
            raise _Conflict(f"missing_dofs: {exc}")

        gh = _gh_concept(e, arm, missing, assumed)

        girdle_kind = e.value("girdle")
        if girdle_kind is None:
            girdle_kind = "Fixed"
            assumed.append("girdle")
        elif girdle_kind != "Fixed":
            assumed.append("girdle.parameters")
        if girdle_kind not in DEFAULT_GIRDLES:
            raise _Conflict(f"unknown girdle kind {girdle_kind!r}")
        girdle = DEFAULT_GIRDLES[girdle_kind]()

        elbow_kind = e.value("elbow")
        if elbow_kind is None:
            elbow_kind = "None" if ArmDOF.ElbowFE in missing else "IdealHinge"
            assumed.append("elbow")
        if elbow_kind == "LooseHinge":
            elbow = LooseHinge(FrustumParams(**DEFAULT_LOOSE_FRUSTUM, flexion_range=arm.rom[ArmDOF.ElbowFE]))
            assumed.append("elbow.frustum")
        elif elbow_kind == "IdealHinge":
            elbow = IdealHinge()
        elif elbow_kind == "None":
            elbow = None
        else:
            raise _Conflict(f"unknown elbow kind {elbow_kind!r}")

        ps_kind = e.value("forearm_ps")
        if ps_kind is None:
            ps_kind = "AxialPS" if missing_stated and ArmDOF.PS not in missing else "None"
            assumed.append("forearm_ps")
        if ps_kind == "AxialPS":
            forearm_ps = AxialPS(arm.load_angle)
            assumed.append("forearm_ps.load_angle")
        elif ps_kind == "None":
            forearm_ps = None
        else:
            raise _Conflict(f"unknown forearm_ps kind {ps_kind!r}")

        wrist_kind = e.value("wrist")
        if wrist_kind is None:
            assumed.append("wrist")
            wrist_kind = "None"
            if missing_stated:
                has_wfe, has_ud = ArmDOF.WFE not in missing, ArmDOF.UD not in missing
                wrist_kind = {(True, True): "WFEAndUD", (True, False): "WFEOnly",
                              (False, True): "UDOnly", (False, False): "None"}[(has_wfe, has_ud)]
        wrist = {"None": lambda: None, "WFEOnly": WFEOnly,
                 "WFEAndUD": lambda: WFEAndUD(arm.ud_axis_offset),
                 "UDOnly": lambda: UDOnly(arm.ud_axis_offset)}.get(wrist_kind)
        if wrist is None:
            raise _Conflict(f"unknown wrist kind {wrist_kind!r}")
        wrist = wrist()

        aligning = e.value("self_aligning")
        if aligning is None:
            aligning = False
            assumed.append("attachment")
        else:
            assumed.append("attachment.cuffs")
        upper = Cuff("upper_arm", "compliant" if aligning else "rigid",
                     SELF_ALIGNING_PASSIVE_DOF if aligning else 0)
        attachment = AttachmentSpec((upper, Cuff("forearm")))

        if opts is not None:
            for dim, value in (("girdle", girdle), ("elbow", elbow), ("forearm_ps", forearm_ps),
                               ("wrist", wrist)):
                kind = "None" if value is None else value.kind
                if kind not in _kinds(getattr(opts, dim)):
                    raise _Conflict(f"{dim} kind {kind} is not offered by the grammar options")

        design = ExoDesign(gh, girdle, elbow, forearm_ps, wrist, attachment)
        realize_chain(design, arm)
        if missing_stated:
            gaps = dof_gaps(design)
            if gaps != {ArmDOF.HABD if m == ArmDOF.ABD else m for m in missing}:
                raise _Conflict(f"design gaps {sorted(g.value for g in gaps)} differ from stated "
                                f"missing DOF {sorted(m.value for m in missing)}")
    except _Conflict as exc:
        return NotRepresentable(e.name, str(exc))
    except (ConstructionError, InvalidArgument) as exc:
        return NotRepresentable(e.name, str(exc))
    return Classification(e.name, design, tuple(sorted(set(assumed))))
