import math

import numpy as np
import pytest

from conftest import full_biologic_design, random_cuff_pairs, random_revolute_chain
from exokin.arm import ArmDOF
from exokin.errors import InvalidArgument
from exokin.grammar import (AttachmentSpec, Cuff, ExoDesign, gh_fragment, realize_chain)
from exokin.kinematics import REVOLUTE, JointSpec, Pose, SerialChain
from exokin.spherical import AxisTriplet, GHConcept, gimbal_scan
from exokin.validators import (CoupledModel, ValidationReport, arm_chain, constraint_nullity,
                               coupled_model, mobility_count, rom_coverage, rom_coverage_mask,
                               rom_grid, singularity_scan, validate_design)


@pytest.fixture(scope="module")
def full_chain(arm):
    return realize_chain(full_biologic_design(arm), arm)


def test_rom_grid_shape_and_rest(arm):
    assert rom_grid(arm, 3).shape == (3 ** 7, 7)
    g = rom_grid(arm, 4, ["ElbowFE"])
    assert g.shape == (4, 7)
    assert np.allclose(g[:, 3], np.linspace(*arm.rom[ArmDOF.ElbowFE], 4))
    # ElbowFE range starts at 0; other DOF rest at 0
    assert np.all(np.delete(g, 3, axis=1) == 0)


def test_full_design_covers_rom(full_chain, arm):
    assert rom_coverage(full_chain, arm, 3) == 1.0


def test_halved_elbow_limit_recount(full_chain, arm):
    lo, hi = full_chain.limits[3]
    halved = full_chain.with_limits(3, (lo, lo + 0.5 * (hi - lo)))
    for k in (3, 4, 5):
        poses = rom_grid(arm, k)
        recount = np.mean(poses[:, 3] <= lo + 0.5 * (hi - lo) + 1e-12)
        assert rom_coverage(halved, arm, k) == pytest.approx(recount, abs=1e-15)
        assert rom_coverage(halved, arm, k) < 1.0


def test_coverage_monotone_under_shrink(full_chain, arm):
    values = []
    for frac in (1.0, 0.8, 0.5, 0.2):
        lo, hi = full_chain.limits[5]
        mid = 0.5 * (lo + hi)
        chain = full_chain.with_limits(5, (mid - frac * (mid - lo), mid + frac * (hi - mid)))
        values.append(rom_coverage(chain, arm, 3))
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_missing_wrist_only_rest_wfe_covered(arm):
    from exokin.grammar import AxialPS
    d = ExoDesign(GHConcept(AxisTriplet.from_degrees(90, 90, 0)), forearm_ps=AxialPS(arm.load_angle),
                  attachment=AttachmentSpec((Cuff("upper_arm"), Cuff("forearm"), Cuff("hand"))))
    chain = realize_chain(d, arm)
    for k in (3, 4, 5):
        poses = rom_grid(arm, k, ["WFE"])
        expected = np.mean(np.abs(poses[:, 5]) < 1e-12)
        assert rom_coverage(chain, arm, k, dofs=["WFE"]) == expected


def test_ik_agrees_with_direct(full_chain, arm):
    lo, hi = full_chain.limits[3]
    halved = full_chain.with_limits(3, (lo, lo + 0.5 * (hi - lo)))
    dofs = ["HABD", "ElbowFE", "PS", "WFE"]
    _, m_direct, method = rom_coverage_mask(halved, arm, 3, dofs, method="direct")
    assert method == "direct"
    _, m_ik, method = rom_coverage_mask(halved, arm, 3, dofs, method="ik")
    assert method == "ik"
    # agreement within one grid cell's measure
    assert abs(m_direct.mean() - m_ik.mean()) <= 1.0 / 3 + 1e-12
    assert np.array_equal(m_direct, m_ik)


def test_ik_tracks_non_biologic_gh(arm):
    mga = GHConcept(AxisTriplet.from_degrees(90, 90, 45), ("HABD*", "ABD*", "FE*"), False)
    chain = realize_chain(ExoDesign(mga, elbow=None, attachment=AttachmentSpec((Cuff("upper_arm"),))), arm)
    _, mask, method = rom_coverage_mask(chain, arm, 3, ["HABD", "FE", "IE"], cuffs=["upper_arm"])
    assert method == "ik"
    assert mask.all()


def test_direct_method_unavailable(arm):
    mga = GHConcept(AxisTriplet.from_degrees(90, 90, 45), ("HABD*", "ABD*", "FE*"), False)
    chain = realize_chain(ExoDesign(mga), arm)
    with pytest.raises(InvalidArgument):
        rom_coverage(chain, arm, 2, method="direct")


def one_joint(limits=(-math.pi, math.pi)):
    return SerialChain(((Pose.identity(), JointSpec(REVOLUTE, [0, 0, 1], [0, 0, 0], limits)),))


def test_scan_single_revolute():
    r = singularity_scan(one_joint(), 8)
    assert r.min_conditioning == pytest.approx(1.0, abs=1e-9)
    assert r.configs == []


def test_scan_locked_joints():
    joints = tuple((Pose.identity(), JointSpec(REVOLUTE, ax, [0, 0, 0], (0.3, 0.3)))
                   for ax in ([0, 0, 1], [0, 1, 0], [1, 0, 0]))
    r = singularity_scan(SerialChain(joints), 8)
    assert r.evaluated == 1


def test_scan_reproduces_gimbal_scan(arm):
    c = GHConcept(AxisTriplet.from_degrees(90, 90, 0))
    frag = gh_fragment(realize_chain(ExoDesign(c), arm))
    r = singularity_scan(frag, 16, 0.05)
    g = gimbal_scan(c, 16, 0.05)
    assert {q for q, _ in r.configs} == {q for q, _ in g}
    gm = dict(g)
    assert all(abs(m - gm[q]) < 1e-9 for q, m in r.configs)


def test_scan_budget_fallback(full_chain):
    r = singularity_scan(full_chain, 8, budget=500)
    assert r.evaluated == 500
    again = singularity_scan(full_chain, 8, budget=500)
    assert again.min_conditioning == r.min_conditioning


def test_scan_grid_minimum():
    with pytest.raises(InvalidArgument):
        singularity_scan(one_joint(), 4)


@pytest.mark.parametrize("bodies,joints,expected", [(8, 7, 7), (7, 7, 1), (4, 4, -2)])
def test_grubler_examples(bodies, joints, expected):
    assert mobility_count(CoupledModel(bodies, (1,) * joints))[0] == expected


def test_hyperstatic_flag():
    assert mobility_count(CoupledModel(4, (1,) * 4), 1) == (-2, True)
    assert mobility_count(CoupledModel(8, (1,) * 7), 7) == (7, False)


def test_mobility_relabel_invariant(rng):
    joints = tuple(int(f) for f in rng.integers(1, 7, 9))
    base = mobility_count(CoupledModel(7, joints))
    for _ in range(5):
        assert mobility_count(CoupledModel(7, tuple(rng.permutation(joints)))) == base


def test_coupled_model_guards():
    with pytest.raises(InvalidArgument):
        CoupledModel(1, (1,))
    with pytest.raises(InvalidArgument):
        CoupledModel(3, (7,))


def test_nullity_single_loop_7r(rng):
    # a 7R loop: one chain of 4 joints and one of 3, joined at their tips
    a, b = random_revolute_chain(rng, 4), random_revolute_chain(rng, 3)
    nullity, rank = constraint_nullity(a, np.zeros(4), b, np.zeros(3), [(3, 2)])
    assert (nullity, rank) == (1, 6)
    assert mobility_count(CoupledModel(7, (1,) * 7))[0] == nullity


def test_nullity_matches_grubler_on_generic_models(rng):
    for _ in range(20):
        exo_n = int(rng.integers(6, 12))
        cuffs = int(rng.integers(1, 3))
        arm_c, exo = random_revolute_chain(rng, 7), random_revolute_chain(rng, exo_n)
        pairs = random_cuff_pairs(rng, 7, exo_n, cuffs)
        nullity, _ = constraint_nullity(arm_c, rng.uniform(-1, 1, 7), exo, rng.uniform(-1, 1, exo_n), pairs)
        assert mobility_count(coupled_model(exo_n, cuffs))[0] == nullity


def test_arm_exo_two_rigid_cuffs(arm, rng):
    exo = random_revolute_chain(rng, 7)
    nullity, _ = constraint_nullity(arm_chain(arm), rng.uniform(-1, 1, 7), exo, rng.uniform(-1, 1, 7),
                                    [(2, 2), (4, 6)])
    assert mobility_count(coupled_model(7, 2))[0] == nullity == 2


def test_validate_full_design(arm):
    d = full_biologic_design(arm)
    r = validate_design(d, arm, samples_per_dof=2, scan_budget=2000)
    assert isinstance(r, ValidationReport)
    assert r.rom_coverage == 1.0 and r.coverage_method == "direct"
    assert r.dof_gaps == frozenset()
    assert r.mobility == 2 and r.hyperstatic
    out = r.to_dict()
    assert out["passed"] is False and out["failures"][0].startswith("hyperstatic")


def test_validate_gap_failure(arm):
    d = ExoDesign(GHConcept(AxisTriplet.from_degrees(90, 90, 0)))
    r = validate_design(d, arm, samples_per_dof=2, scan_budget=500, expected_mobility=-6)
    assert any(f.startswith("dof gaps") for f in r.failures)
    assert not r.hyperstatic


def test_self_aligning_cuff_adds_mobility(arm):
    d = full_biologic_design(arm)
    aligned = ExoDesign(d.gh, d.girdle, d.elbow, d.forearm_ps, d.wrist,
                        AttachmentSpec((Cuff("upper_arm", "compliant", 3), Cuff("forearm"))))
    m0 = validate_design(d, arm, 2, scan_budget=200).mobility
    m1 = validate_design(aligned, arm, 2, scan_budget=200).mobility
    assert m1 == m0 + 3
