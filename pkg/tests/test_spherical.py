import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_concurrent_chain, random_pose
from exokin.errors import InvalidArgument
from exokin.kinematics import REVOLUTE, JointSpec, Pose, SerialChain, numeric_jacobian
from exokin.spherical import (AxisTriplet, EqualAreaGrid, GHConcept, analytic_coverage,
                              axes_concurrency, canonical_3r_chain, coverage_map,
                              full_sphere_condition, gimbal_scan, joint_samples, measured_triplet,
                              nested_unit_samples, sphere_coverage)
from exokin.kinematics import joint_screws

T = AxisTriplet.from_degrees


def chain_axes(chain):
    screws = joint_screws(chain, np.zeros(chain.n))
    pointing = chain.tool_transform.translation
    return [d for _, _, d in screws], pointing


def inequality_oracle(t1, t2, t3):
    # degrees, integer arithmetic avoids any rounding at the boundary
    return (90 - t3 <= t2 <= 90 + t3) and (180 - t2 - t3 <= t1 <= t2 + t3)


@pytest.mark.parametrize("deg,expected", [((90, 90, 0), True), ((90, 90, 45), True),
                                          ((10, 90, 0), False), ((90, 30, 0), False)])
def test_full_sphere_condition_examples(deg, expected):
    assert full_sphere_condition(T(*deg)) is expected


def test_full_sphere_condition_matches_integer_oracle():
    grid = range(0, 91, 5)
    for a in grid:
        for b in grid:
            for c in grid:
                assert full_sphere_condition(T(a, b, c)) == inequality_oracle(a, b, c), (a, b, c)


def test_triplet_guards():
    with pytest.raises(InvalidArgument):
        T(95, 0, 0)
    with pytest.raises(InvalidArgument):
        AxisTriplet(float("nan"), 0, 0)


def test_canonical_chain_orthogonal_case():
    chain = canonical_3r_chain(T(90, 90, 0))
    (a1, a2, a3), p = chain_axes(chain)
    assert abs(a1 @ a2) < 1e-15 and abs(a2 @ a3) < 1e-15
    assert np.linalg.norm(np.cross(a3, p)) < 1e-15


@settings(max_examples=60, deadline=None)
@given(st.tuples(*[st.floats(0, 90, allow_nan=False)] * 3))
def test_canonical_round_trip(deg):
    t = T(*deg)
    axes, p = chain_axes(canonical_3r_chain(t))
    assert np.allclose(measured_triplet(axes, p), t.as_tuple(), atol=1e-12)
    point = axes_concurrency(canonical_3r_chain(t), 1e-12)
    assert point is not None and np.linalg.norm(point) < 1e-12


def test_canonical_chain_tool_z_is_pointing():
    chain = canonical_3r_chain(T(90, 90, 45))
    tool = chain.tool_transform
    assert np.allclose(tool.rotation[:, 2], tool.translation, atol=1e-15)


def test_concurrency_parallel_axes_absent():
    joints = ((Pose.identity(), JointSpec(REVOLUTE, [0, 0, 1], [0, 0, 0])),
              (Pose.identity(), JointSpec(REVOLUTE, [0, 0, 1], [0.01, 0, 0])))
    assert axes_concurrency(SerialChain(joints), 1e-6) is None


def test_concurrency_needs_two_revolutes():
    with pytest.raises(InvalidArgument):
        axes_concurrency(SerialChain(((Pose.identity(), JointSpec(REVOLUTE, [0, 0, 1])),)))


def test_concurrency_recovers_point(rng):
    p = np.array([0.1, 0.2, 0.3])
    for _ in range(30):
        got = axes_concurrency(random_concurrent_chain(rng, p), 1e-9)
        assert got is not None and np.linalg.norm(got - p) < 1e-9


def test_nested_samples_are_nested_and_uniform():
    a, b = nested_unit_samples(20), nested_unit_samples(21)
    assert np.array_equal(a, b[:20])
    assert np.allclose(np.sort(nested_unit_samples(16)), np.arange(16) / 16)
    assert np.allclose(np.sort(nested_unit_samples(9, closed=True)), np.linspace(0, 1, 9))
    assert np.allclose(joint_samples((0, 1), 5), np.linspace(0, 1, 5))


@pytest.mark.parametrize("n", [2, 100, 1000, 1234])
def test_equal_area_grid(n, rng):
    g = EqualAreaGrid(n)
    assert g.counts.sum() == n
    # Monte Carlo: each cell receives about the same share of uniform directions
    d = rng.normal(size=(200000, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    hist = np.bincount(g.locate(d), minlength=n)
    expected = 200000 / n
    assert abs(hist.mean() - expected) < 1e-9
    assert hist.std() < 4 * math.sqrt(expected)


def test_grid_bounds_contain_centers():
    g = EqualAreaGrid(1000)
    for (lat, lon), (lo, hi, a, b) in zip(g.centers(), g.cell_bounds()):
        assert lo - 1e-9 <= lat <= hi + 1e-9
        assert a - 1e-9 <= lon % 360 <= b + 1e-9 or (a, b) == (0.0, 360.0)


def test_degenerate_triplet_single_bin():
    assert coverage_map(T(0, 0, 0), 16, 1000).covered.sum() == 1


def test_reference_device_triples_full_coverage():
    assert sphere_coverage(T(90, 90, 0)) >= 0.999
    assert sphere_coverage(T(90, 90, 45)) >= 0.999


def test_coverage_monotone_in_samples():
    t = T(55, 40, 25)
    values = [sphere_coverage(t, n, 500) for n in (8, 12, 16, 24, 32)]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_coverage_tracks_analytic_area():
    # binning counts partially hit boundary cells, so the sampled value sits slightly above
    for deg in [(90, 90, 0), (30, 60, 10), (45, 45, 45), (80, 20, 30), (15, 75, 5)]:
        t = T(*deg)
        diff = sphere_coverage(t, 64, 1000) - analytic_coverage(t)
        assert -0.005 < diff < 0.07


def test_coverage_argument_guards():
    with pytest.raises(InvalidArgument):
        sphere_coverage(T(90, 90, 0), 4)
    with pytest.raises(InvalidArgument):
        sphere_coverage(T(90, 90, 0), 8, 50)


def test_gimbal_scan_detects_alignment():
    c = GHConcept(T(90, 90, 0))
    hits = gimbal_scan(c, 16)
    assert hits and hits[0][1] < 1e-9
    metrics = [m for _, m in hits]
    assert metrics == sorted(metrics)
    # rank drop confirmed independently from finite differences
    q = np.array(hits[0][0])
    J = numeric_jacobian(canonical_3r_chain(c.triplet), q)[:3]
    assert np.linalg.matrix_rank(J, tol=1e-6) == 2


def test_gimbal_scan_empty_when_limits_avoid_alignment():
    # outer axes of (90, 90, 0) are parallel at q2 = 0 and q2 = pi
    c = GHConcept(T(90, 90, 0), joint_limits=((-1, 1), (0.6, 2.5), (-1, 1)))
    assert gimbal_scan(c, 16) == []


def test_gimbal_scan_base_invariant(rng):
    c = GHConcept(T(90, 90, 45))
    a = gimbal_scan(c, 16, 0.3)
    b = gimbal_scan(c, 16, 0.3, base=random_pose(rng))
    ma, mb = dict(a), dict(b)
    assert set(ma) == set(mb)
    assert all(abs(ma[q] - mb[q]) < 1e-9 for q in ma)


def test_gh_concept_guards():
    with pytest.raises(InvalidArgument):
        GHConcept(T(90, 90, 0), ("HABD", "FE", "FE"))
    with pytest.raises(InvalidArgument):
        GHConcept(T(90, 90, 0), ("HABD*", "FE", "IE"), biologic=True)
    with pytest.raises(InvalidArgument):
        GHConcept(T(90, 90, 0), absent=("HABD", "FE", "IE"))


def test_pointing_directions_match_chain_fk():
    from exokin.kinematics import batch_forward
    from exokin.spherical import FULL_CIRCLE, pointing_directions
    for deg in [(35, 60, 20), (90, 90, 45), (0, 10, 90)]:
        t = T(*deg)
        limits = (FULL_CIRCLE, (-1.0, 2.0), (0.5, 0.5))
        g = [joint_samples(lim, 8) for lim in limits]
        Q = np.stack(np.meshgrid(*g, indexing="ij"), axis=-1).reshape(-1, 3)
        R, _ = batch_forward(canonical_3r_chain(t, limits), Q)
        assert np.abs(R[:, :, 2] - pointing_directions(t, 8, limits)).max() < 1e-14
