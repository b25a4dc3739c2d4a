import json
import math

import numpy as np
import pytest

from conftest import option_pools, random_options
from exokin.arm import ArmDOF, AxisLinkage, Cartesian, FixedGirdle, arm_fk
from exokin.canonical import canonical_dumps
from exokin.errors import InvalidArgument
from exokin.grammar import (DIMENSIONS, AttachmentSpec, AxialPS, Cuff, ExoDesign, GrammarOptions,
                            IdealHinge, WFEAndUD, WFEOnly, design_from_dict, design_id, design_json,
                            design_to_dict, direct_mapping, dof_gaps, dof_support,
                            enumerate_designs, gh_fragment, load_grammar_options, make_filter,
                            map_arm_pose, realize_chain, segment_frame)
from exokin.kinematics import PRISMATIC, REVOLUTE
from exokin.spherical import AxisTriplet, GHConcept, axes_concurrency

T = AxisTriplet.from_degrees
ARMIN = GHConcept(T(90, 90, 0))
FULL = ExoDesign(ARMIN, FixedGirdle(), IdealHinge(), AxialPS(math.radians(10)), WFEAndUD(0.015))


def test_canonical_dumps_stable():
    assert canonical_dumps({"b": 1, "a": [0.1, -0.0, True, None]}) == '{"a":[0.1,0,true,null],"b":1}'
    with pytest.raises(ValueError):
        canonical_dumps(float("nan"))


def test_design_round_trip():
    pools = option_pools()
    for dim in DIMENSIONS:
        for v in pools[dim]:
            d = ExoDesign(**{"gh": ARMIN, dim: v})
            again = design_from_dict(json.loads(design_json(d)))
            assert design_json(again) == design_json(d)
            assert again == d and design_id(again) == design_id(d)


def test_design_from_dict_rejects_unknown_key():
    raw = design_to_dict(FULL)
    raw["colour"] = "red"
    with pytest.raises(InvalidArgument):
        design_from_dict(raw)


def test_design_guards():
    with pytest.raises(InvalidArgument):
        ExoDesign(None, elbow=None, wrist=None)
    with pytest.raises(InvalidArgument):
        ExoDesign(None, girdle=Cartesian())
    with pytest.raises(InvalidArgument):
        AttachmentSpec(())
    with pytest.raises(InvalidArgument):
        Cuff("upper_arm", passive_dof=-1)


def test_attachment_flags():
    assert not AttachmentSpec((Cuff("forearm"),)).is_exoskeleton
    assert AttachmentSpec((Cuff("upper_arm"), Cuff("forearm"))).is_exoskeleton
    assert AttachmentSpec((Cuff("upper_arm", "compliant", 2),)).self_aligning


def test_enumeration_product_rule():
    pools = option_pools()
    opts = GrammarOptions(pools["gh"][:3], pools["girdle"], pools["elbow"][:2],
                          pools["forearm_ps"][:2], pools["wrist"][:3], pools["attachment"][:2])
    assert opts.sizes == (3, 5, 2, 2, 3, 2)
    assert sum(1 for _ in enumerate_designs(opts)) == 360


def test_enumeration_empty_option_set():
    pools = option_pools()
    with pytest.raises(InvalidArgument):
        GrammarOptions((), pools["girdle"], pools["elbow"], pools["forearm_ps"],
                       pools["wrist"], pools["attachment"])


def test_enumeration_order_is_lexicographic(rng):
    opts = random_options(rng)
    designs = list(enumerate_designs(opts))
    keys = [tuple(getattr(opts, dim).index(getattr(d, dim)) for dim in DIMENSIONS) for d in designs]
    assert keys == sorted(keys)


def test_full_sphere_filter_halves():
    pools = option_pools()
    opts = GrammarOptions((GHConcept(T(90, 90, 0)), GHConcept(T(90, 30, 0))), pools["girdle"],
                          pools["elbow"][:2], pools["forearm_ps"], pools["wrist"], pools["attachment"])
    n = sum(1 for _ in enumerate_designs(opts, [make_filter("full_sphere")]))
    assert 2 * n == opts.cardinality


def test_supports_all_dof_filter_recount():
    opts = load_grammar_options()
    kept = list(enumerate_designs(opts, [make_filter("supports_all_dof")]))
    assert all(d.wrist is not None for d in kept)
    recount = 0
    for d in enumerate_designs(opts):
        gaps = set(CANON) - {dof for dof in CANON if covered(d, dof)}
        recount += not gaps
    assert len(kept) == recount


CANON = ("HABD", "FE", "IE", "ElbowFE", "PS", "WFE", "UD")


def covered(d, dof):
    # independent recount from the design fields
    if dof in ("HABD", "FE", "IE"):
        return d.gh is not None and (not d.gh.absent or dof in [l.rstrip("*") for l in d.gh.sequence
                                                                 if l not in d.gh.absent])
    return {"ElbowFE": d.elbow is not None, "PS": d.forearm_ps is not None,
            "WFE": type(d.wrist).__name__ in ("WFEOnly", "WFEAndUD"),
            "UD": type(d.wrist).__name__ in ("WFEAndUD", "UDOnly")}[dof]


def test_make_filter_unknown():
    with pytest.raises(InvalidArgument):
        make_filter("pretty")


def test_girdle_kind_and_margin_filters():
    opts = load_grammar_options()
    kinds = {d.girdle.kind for d in enumerate_designs(opts, [make_filter("girdle_kind", {"kinds": ["Polar"]})])}
    assert kinds == {"Polar"}
    margin = list(enumerate_designs(opts, [make_filter("min_sphere_margin", {"deg": 1})]))
    assert all(d.gh.triplet.degrees() == (90, 90, 45) for d in margin)


def test_realize_fragment_count(arm):
    d = ExoDesign(ARMIN, FixedGirdle(), IdealHinge(), AxialPS(0.1), None)
    chain = realize_chain(d, arm)
    assert chain.n == 5
    assert axes_concurrency(chain.split(3)[0], 1e-9) is not None


def test_realize_cartesian_girdle(arm):
    chain = realize_chain(ExoDesign(ARMIN, Cartesian()), arm)
    assert [s.kind for s in chain.specs[:3]] == [PRISMATIC] * 3
    assert [s.kind for s in chain.specs[3:6]] == [REVOLUTE] * 3


def test_realize_axis_linkage_slides_along_first_gh_axis(arm):
    chain = realize_chain(ExoDesign(ARMIN, AxisLinkage()), arm)
    assert chain.specs[0].kind == PRISMATIC and chain.specs[0].label == "LINKAGE"
    assert np.allclose(chain.specs[0].axis, chain.specs[1].axis)


def test_realize_passive_cuff_joints(arm):
    att = AttachmentSpec((Cuff("upper_arm", "compliant", 3), Cuff("forearm")))
    chain = realize_chain(ExoDesign(ARMIN, attachment=att), arm)
    passive = [s for s in chain.specs if s.group == "passive:upper_arm"]
    assert len(passive) == 3
    assert chain.n == 3 + 3 + 1


def test_realized_biologic_chain_reproduces_arm_fk(arm, rng):
    chain = realize_chain(FULL, arm)
    assert direct_mapping(chain, arm) is not None
    for _ in range(50):
        pose = np.array([rng.uniform(*arm.rom[d]) for d in arm.pose_dofs])
        q = map_arm_pose(chain, arm, pose)
        ref = arm_fk(arm, pose)
        for seg in ("upper_arm", "forearm", "hand"):
            assert segment_frame(chain, arm, seg, q).allclose(ref.segment(seg), 1e-9)


def test_tilted_chain_has_no_direct_mapping(arm):
    mga = GHConcept(T(90, 90, 45), ("HABD*", "ABD*", "FE*"), False)
    assert direct_mapping(realize_chain(ExoDesign(mga), arm), arm) is None


def test_every_default_design_realizes(arm):
    opts = load_grammar_options()
    n = 0
    for d in enumerate_designs(opts):
        chain = realize_chain(d, arm)
        frag = gh_fragment(chain)
        if frag is not None and sum(s.kind == REVOLUTE for s in frag.specs) >= 2:
            assert axes_concurrency(frag, 1e-9) is not None
        n += 1
    assert n == opts.cardinality


def test_dof_support_examples():
    assert dof_gaps(FULL) == set()
    assert {ArmDOF.WFE, ArmDOF.UD} <= dof_gaps(ExoDesign(ARMIN, wrist=None))
    no_ie = ExoDesign(GHConcept(T(90, 90, 0), absent=("IE",)), forearm_ps=AxialPS(0.0), wrist=WFEAndUD(0.01))
    assert dof_gaps(no_ie) == {ArmDOF.IE}
    assert ArmDOF.UD not in dof_support(ExoDesign(ARMIN, wrist=WFEOnly()))


def test_options_round_trip(rng):
    for _ in range(5):
        opts = random_options(rng)
        again = GrammarOptions.from_dict(json.loads(json.dumps(opts.to_dict())))
        assert canonical_dumps(again.to_dict()) == canonical_dumps(opts.to_dict())


def test_default_options_file():
    opts = load_grammar_options()
    assert opts.cardinality == 640
