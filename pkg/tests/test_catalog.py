import json

import pytest

from exokin.arm import ArmDOF
from exokin.catalog import CatalogEntry, classify_catalog_entry, load_catalog
from exokin.errors import InvalidArgument
from exokin.grammar import dof_gaps, load_grammar_options, realize_chain

NAMES = ("ARMin", "ARMin II", "MGA", "IntelliArm", "CLEVERarm", "Dampace", "LIMPACT", "T-WREX",
         "CADEN", "ARAMIS", "SAM", "SUEFUL-7", "NeuroExos", "ABLE")


@pytest.fixture(scope="module")
def classified(arm):
    opts = load_grammar_options()
    return {e.name: (e, classify_catalog_entry(e, opts, arm)) for e in load_catalog()}


def entry(name, **facts):
    return CatalogEntry.from_dict({"name": name, "facts": {k: {"value": v, "provenance": "test"}
                                                           for k, v in facts.items()}})


def test_catalog_names_and_provenance():
    entries = load_catalog()
    assert tuple(e.name for e in entries) == NAMES
    assert all(f.provenance.strip() for e in entries for f in e.facts.values())


def test_all_representable(classified):
    for name, (_, r) in classified.items():
        assert r.representable, (name, getattr(r, "reason", ""))


def test_stated_gaps(classified):
    assert dof_gaps(classified["T-WREX"][1].design) == {ArmDOF.IE}
    assert dof_gaps(classified["ARMin II"][1].design) == {ArmDOF.WFE}


def test_classify_then_realize_gaps_match_stated(classified, arm):
    for name, (e, r) in classified.items():
        realize_chain(r.design, arm)
        if e.stated("missing_dofs"):
            stated = {ArmDOF.HABD if m == "ABD" else ArmDOF(m) for m in e.value("missing_dofs")}
            assert dof_gaps(r.design) == stated


def test_stated_facts_are_honoured(classified):
    d = classified["ARMin"][1].design
    assert d.gh.biologic and d.gh.sequence == ("HABD", "FE", "IE")
    assert d.gh.triplet.degrees() == pytest.approx((90, 90, 0))
    mga = classified["MGA"][1].design
    assert not mga.gh.biologic and mga.gh.sequence == ("HABD*", "ABD*", "FE*")
    assert mga.gh.triplet.degrees() == pytest.approx((90, 90, 45))
    assert mga.girdle.kind == "SingleRevolute"
    assert classified["IntelliArm"][1].design.girdle.kind == "Cartesian"
    assert classified["Dampace"][1].design.girdle.kind == "Cartesian"
    assert classified["CLEVERarm"][1].design.girdle.kind == "Polar"
    assert classified["NeuroExos"][1].design.elbow.kind == "LooseHinge"
    for name in ("LIMPACT", "Dampace", "ABLE"):
        assert classified[name][1].design.attachment.self_aligning


def test_default_fill_marked_assumed(classified):
    r = classified["CADEN"][1]
    assert {"girdle", "elbow", "wrist"} <= set(r.assumed)
    assert r.design.girdle.kind == "Fixed" and r.design.elbow.kind == "IdealHinge"
    assert r.design.wrist is None


def test_non_concurrent_axes_not_representable(arm):
    e = entry("Skew", gh_axes=[{"direction": [0, 0, 1]}, {"direction": [0, 1, 0], "anchor": [0.02, 0, 0]},
                               {"direction": [1, 0, 0]}])
    r = classify_catalog_entry(e, None, arm)
    assert not r.representable
    assert r.reason == "GH axes must intersect at a single point"


def test_concurrent_stated_axes_give_triplet(arm):
    e = entry("Stated", gh_axes=[{"direction": [0, 0, 1]}, {"direction": [0, 1, 0]},
                                 {"direction": [0, 0, -1]}], biologic=True)
    r = classify_catalog_entry(e, None, arm)
    assert r.representable
    assert r.design.gh.triplet.degrees() == pytest.approx((90, 90, 0))


def test_conflicting_facts(arm):
    r = classify_catalog_entry(entry("Bad", biologic=True, sequence=["HABD*", "FE", "IE"]), None, arm)
    assert not r.representable
    r = classify_catalog_entry(entry("Odd", girdle="Hexapod"), None, arm)
    assert not r.representable and "Hexapod" in r.reason


def test_kind_not_offered_by_options(arm):
    from dataclasses import replace
    opts = load_grammar_options()
    narrow = replace(opts, girdle=opts.girdle[:1])
    r = classify_catalog_entry(entry("Polar", girdle="Polar"), narrow, arm)
    assert not r.representable


def test_entry_guards(tmp_path):
    with pytest.raises(InvalidArgument):
        CatalogEntry.from_dict({"name": "", "facts": {}})
    with pytest.raises(InvalidArgument):
        CatalogEntry.from_dict({"name": "X", "facts": {"biologic": {"value": True, "provenance": ""}}})
    with pytest.raises(InvalidArgument):
        CatalogEntry.from_dict({"name": "X", "facts": {"colour": {"value": 1, "provenance": "p"}}})
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"name": "X"}))
    with pytest.raises(InvalidArgument):
        load_catalog(p)
