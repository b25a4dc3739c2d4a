"""Three-revolute concurrent-axis shoulder (GH) concepts.

Inter-axis angles follow this convention: ``theta1`` is the angle between
the first and second axes, ``theta2`` between the second and third axes, and
``theta3`` between the third axis and the distal pointing direction (the
humerus). All three lie in [0, pi/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .kinematics import (REVOLUTE, JointSpec, Pose, SerialChain, batch_conditioning,
                         batch_jacobian, joint_screws)

BOUNDARY_EPS = 1e-12
GH_LABELS = ("HABD", "FE", "IE", "ABD")
FULL_CIRCLE = (-math.pi, math.pi)


@dataclass(frozen=True)
class AxisTriplet:
    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            v = getattr(self, name)
            if not math.isfinite(v) or not -BOUNDARY_EPS <= v <= math.pi / 2 + BOUNDARY_EPS:
                raise InvalidArgument(f"{name}={v!r} rad outside [0, pi/2]")

    @classmethod
    def from_degrees(cls, t1: float, t2: float, t3: float) -> "AxisTriplet":
        return cls(math.radians(t1), math.radians(t2), math.radians(t3))

    def degrees(self) -> tuple[float, float, float]:
        return (math.degrees(self.theta1), math.degrees(self.theta2), math.degrees(self.theta3))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)


def base_label(label: str) -> str:
    """Strip the tilt marker: ``"HABD*"`` -> ``"HABD"``."""
    return label.rstrip("*")


@dataclass(frozen=True)
class GHConcept:
    """A 3R concurrent-axis shoulder concept.

    ``absent`` lists sequence labels whose joint is not built (a device that
    lacks that shoulder DOF); the remaining axes keep the triplet geometry.
    """

    triplet: AxisTriplet
    sequence: tuple[str, str, str] = ("HABD", "FE", "IE")
    biologic: bool = True
    joint_limits: tuple[tuple[float, float], ...] = (FULL_CIRCLE, FULL_CIRCLE, FULL_CIRCLE)
    absent: tuple[str, ...] = ()

    def __post_init__(self):
        seq = tuple(self.sequence)
        limits = tuple(tuple(float(x) for x in lim) for lim in self.joint_limits)
        object.__setattr__(self, "sequence", seq)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "absent", tuple(self.absent))
        if len(seq) != 3 or len(set(seq)) != 3:
            raise InvalidArgument(f"GH sequence needs 3 distinct labels, got {seq}")
        for label in seq:
            if base_label(label) not in GH_LABELS or label.count("*") > 1:
                raise InvalidArgument(f"unknown GH axis label {label!r}")
            if self.biologic and label.endswith("*"):
                raise InvalidArgument(f"biologic concept cannot use tilted axis {label!r}")
        if len(limits) != 3 or any(lo > hi for lo, hi in limits):
            raise InvalidArgument("GH concept needs three nonempty joint limit intervals")
        if not set(self.absent) <= set(seq) or len(self.absent) > 2:
            raise InvalidArgument(f"absent labels {self.absent} must be a proper subset of {seq}")

    @property
    def present(self) -> tuple[bool, bool, bool]:
        return tuple(label not in self.absent for label in self.sequence)


def full_sphere_condition(t: AxisTriplet) -> bool:
    """Whether the 3R concept can point its distal segment in every direction.

    Closed inequalities; a 1e-12 rad slack absorbs degree/radian round-off.
    """
    t1, t2, t3 = t.as_tuple()
    e = BOUNDARY_EPS
    first = math.pi / 2 - t3 - e <= t2 <= math.pi / 2 + t3 + e
    second = math.pi - t2 - t3 - e <= t1 <= t2 + t3 + e
    return first and second


def condition_margin(t: AxisTriplet) -> float:
    """Signed distance (rad) to the nearest inequality boundary.

    Positive inside the full-sphere region, negative outside; the magnitude
    is the smallest slack (inside) or largest violation (outside).
    """
    t1, t2, t3 = t.as_tuple()
    slacks = [t2 - (math.pi / 2 - t3), (math.pi / 2 + t3) - t2,
              t1 - (math.pi - t2 - t3), (t2 + t3) - t1]
    return min(slacks)


def _xz(angle: float) -> np.ndarray:
    return np.array([math.sin(angle), 0.0, math.cos(angle)])


def _ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def canonical_axes(t: AxisTriplet) -> tuple[list[np.ndarray], np.ndarray]:
    """Axis directions and pointing direction of the canonical placement.

    Every successor lies in the x-z plane, rotated from its predecessor by
    the next triplet angle; azimuth about the predecessor is absorbed by the
    joint offsets, so this choice does not change the workspace.
    """
    phis = np.cumsum([0.0, *t.as_tuple()])
    axes = [_xz(p) for p in phis[:3]]
    return axes, _xz(phis[3])


def canonical_3r_chain(t: AxisTriplet,
                       limits: Sequence[tuple[float, float]] = (FULL_CIRCLE,) * 3,
                       labels: Sequence[str] = ("J1", "J2", "J3")) -> SerialChain:
    """Three revolutes through the origin realizing ``t``.

    The tool sits at unit distance along the pointing direction, and its
    z-axis is the pointing direction.
    """
    axes, pointing = canonical_axes(t)
    joints = [(Pose.identity(), JointSpec(REVOLUTE, a, np.zeros(3), lim, lab, "gh"))
              for a, lim, lab in zip(axes, limits, labels)]
    phi4 = sum(t.as_tuple())
    return SerialChain(tuple(joints), Pose.identity(), Pose(_ry(phi4), pointing))


def line_angle(u, v) -> float:
    """Angle in [0, pi/2] between the lines spanned by ``u`` and ``v``."""
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), abs(float(np.dot(u, v))))


def measured_triplet(axes: Sequence[np.ndarray], pointing) -> tuple[float, float, float]:
    """Recover the inter-axis angles from three axis directions and a pointing direction."""
    a1, a2, a3 = axes
    return (line_angle(a1, a2), line_angle(a2, a3), line_angle(a3, pointing))


# --- sphere coverage ---------------------------------------------------------

def nested_unit_samples(n: int, closed: bool = False) -> np.ndarray:
    """First ``n`` points of a nested low-discrepancy sequence in [0, 1).

    Built from the base-2 van der Corput sequence, so the point set for
    ``n`` is contained in the set for ``n + 1`` and equals the uniform grid
    ``k / n`` when ``n`` is a power of two. With ``closed=True`` the point 1
    is inserted second, which covers [0, 1] and yields the uniform grid with
    both endpoints for ``n = 2**k + 1``.
    """
    if n < 1:
        raise InvalidArgument("need at least one sample")
    out = []
    i = 0
    while len(out) < n:
        if closed and len(out) == 1:
            out.append(1.0)
            continue
        x, f, k = 0.0, 0.5, i
        while k:
            x += f * (k & 1)
            k >>= 1
            f *= 0.5
        out.append(x)
        i += 1
    return np.array(out[:n])


def joint_samples(limits: tuple[float, float], n: int) -> np.ndarray:
    """Nested samples of one joint's range, sorted ascending."""
    lo, hi = limits
    if hi - lo >= 2 * math.pi - 1e-12:
        u = nested_unit_samples(n)
        return np.sort(lo + 2 * math.pi * u)
    if hi == lo:
        return np.array([lo])
    return np.sort(lo + (hi - lo) * nested_unit_samples(n, closed=True))


class EqualAreaGrid:
    """Zonal equal-area partition of the unit sphere.

    Two polar caps plus latitude collars; each collar is split into a number
    of cells proportional to its area, and collar boundaries are then moved
    so every cell has area exactly ``4 pi / n``.
    """

    def __init__(self, n: int):
        if n < 2:
            raise InvalidArgument("an equal-area grid needs at least 2 cells")
        self.n = n
        if n == 2:
            counts = [1, 1]
        else:
            cap = 2.0 * math.asin(math.sqrt(1.0 / n))
            side = math.sqrt(4.0 * math.pi / n)
            collars = max(1, int(round((math.pi - 2.0 * cap) / side)))
            edges = cap + (math.pi - 2.0 * cap) / collars * np.arange(collars + 1)
            cell_area = 4.0 * math.pi / n
            counts, carry = [1], 0.0
            for j in range(collars):
                ideal = 2.0 * math.pi * (math.cos(edges[j]) - math.cos(edges[j + 1])) / cell_area + carry
                m = int(round(ideal))
                carry = ideal - m
                counts.append(m)
            counts.append(1)
        self.counts = np.array(counts, dtype=int)
        if self.counts.sum() != n or np.any(self.counts < 1):
            raise InvalidArgument(f"could not partition the sphere into {n} cells")
        # z decreases from the north pole; band b spans z in [z_edges[b+1], z_edges[b]]
        self.z_edges = np.concatenate([[1.0], 1.0 - 2.0 * np.cumsum(self.counts) / n])
        self.z_edges[-1] = -1.0
        self.offsets = np.concatenate([[0], np.cumsum(self.counts)[:-1]])

    def locate(self, directions) -> np.ndarray:
        """Cell index of each unit direction in an (N, 3) array."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        z = np.clip(d[:, 2], -1.0, 1.0)
        band = np.searchsorted(-self.z_edges[1:-1], -z, side="right")
        m = self.counts[band]
        az = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)
        cell = np.minimum((az / (2.0 * math.pi) * m).astype(int), m - 1)
        return self.offsets[band] + cell

    def centers(self) -> np.ndarray:
        """(n, 2) array of cell-center (latitude, longitude) in degrees."""
        out = []
        for b, m in enumerate(self.counts):
            zmid = 0.5 * (self.z_edges[b] + self.z_edges[b + 1])
            lat = math.degrees(math.asin(zmid)) if m > 1 else (90.0 if b == 0 else -90.0)
            for k in range(m):
                lon = math.degrees((k + 0.5) / m * 2.0 * math.pi) if m > 1 else 0.0
                if lon > 180.0:
                    lon -= 360.0
                out.append((lat, lon))
        return np.array(out)

    def cell_bounds(self) -> list[tuple[float, float, float, float]]:
        """(lat_lo, lat_hi, lon_lo, lon_hi) per cell, degrees, lon in [0, 360)."""
        out = []
        for b, m in enumerate(self.counts):
            lat_hi = math.degrees(math.asin(self.z_edges[b]))
            lat_lo = math.degrees(math.asin(self.z_edges[b + 1]))
            for k in range(m):
                out.append((lat_lo, lat_hi, 360.0 * k / m, 360.0 * (k + 1) / m))
        return out


@dataclass
class CoverageMap:
    grid: EqualAreaGrid
    covered: np.ndarray = field(repr=False)

    @property
    def fraction(self) -> float:
        return float(self.covered.mean())


def _rotate_about(axis: np.ndarray, angles: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate every vector of ``v`` (M, 3) by every angle: result (len(angles), M, 3)."""
    c, s = np.cos(angles)[:, None, None], np.sin(angles)[:, None, None]
    return v * c + np.cross(axis, v) * s + np.outer(v @ axis, axis) * (1.0 - c)


def pointing_directions(t: AxisTriplet, joint_samples_per_axis: int,
                        limits: Sequence[tuple[float, float]] = (FULL_CIRCLE,) * 3) -> np.ndarray:
    """Tool pointing directions over the joint grid of ``canonical_3r_chain(t)``.

    All axes pass through the origin, so the pointing vector is rotated
    about axis 3, then 2, then 1 (the product of exponentials applied
    right to left). Rows follow ``meshgrid(q1, q2, q3, indexing="ij")``.
    """
    axes, pointing = canonical_axes(t)
    grids = [joint_samples(lim, joint_samples_per_axis) for lim in limits]
    v = pointing[None, :]
    for axis, q in zip(reversed(axes), reversed(grids)):
        v = _rotate_about(axis, q, v).reshape(-1, 3)
    return v


def coverage_map(t: AxisTriplet, joint_samples_per_axis: int = 64, sphere_bins: int = 1000,
                 limits: Sequence[tuple[float, float]] = (FULL_CIRCLE,) * 3) -> CoverageMap:
    if joint_samples_per_axis < 8:
        raise InvalidArgument("joint_samples_per_axis must be >= 8")
    if sphere_bins < 100:
        raise InvalidArgument("sphere_bins must be >= 100")
    grid = EqualAreaGrid(sphere_bins)
    covered = np.zeros(grid.n, dtype=bool)
    covered[grid.locate(pointing_directions(t, joint_samples_per_axis, limits))] = True
    return CoverageMap(grid, covered)


def sphere_coverage(t: AxisTriplet, joint_samples_per_axis: int = 64, sphere_bins: int = 1000,
                    limits: Sequence[tuple[float, float]] = (FULL_CIRCLE,) * 3) -> float:
    """Fraction of equal-area sphere cells hit by the sampled pointing directions."""
    return coverage_map(t, joint_samples_per_axis, sphere_bins, limits).fraction


def analytic_coverage(t: AxisTriplet) -> float:
    """Exact area fraction of pointing directions reachable with unlimited joints.

    Joints 2 and 3 sweep a band of polar angles [|t2 - t3|, t2 + t3] about
    axis 2; joint 1 revolves that band about axis 1, missing a cap around
    each end of axis 1 whenever the band cannot reach it.
    """
    t1, t2, t3 = t.as_tuple()
    lo, hi = abs(t2 - t3), t2 + t3
    near = 0.0 if lo <= t1 <= hi else min(abs(t1 - lo), abs(t1 - hi))
    # the largest angle from axis 1 peaks where the band meets pi - t1
    g = min(max(math.pi - t1, lo), hi)
    far = math.pi - min(t1 + g, 2 * math.pi - t1 - g)
    return 1.0 - 0.5 * (1.0 - math.cos(near)) - 0.5 * (1.0 - math.cos(far))


# --- concurrency -------------------------------------------------------------

def concurrency_point(chain: SerialChain, q: Sequence[float] | None = None) -> tuple[np.ndarray, float]:
    """Least-squares common point of the revolute axes and its max distance.

    Raises :class:`InvalidArgument` for fewer than two revolute joints.
    """
    q = np.zeros(chain.n) if q is None else q
    lines = [(p, d) for kind, p, d in joint_screws(chain, q) if kind == REVOLUTE]
    if len(lines) < 2:
        raise InvalidArgument("axes concurrency needs at least two revolute joints")
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for p, d in lines:
        P = np.eye(3) - np.outer(d, d)
        A += P
        b += P @ p
    x = np.linalg.lstsq(A, b, rcond=None)[0]
    dist = max(np.linalg.norm((np.eye(3) - np.outer(d, d)) @ (x - p)) for p, d in lines)
    return x, float(dist)


def axes_concurrency(chain: SerialChain, tol: float = 1e-9) -> np.ndarray | None:
    """Common point of all revolute axes (zero config), or None when they miss by > ``tol``."""
    x, dist = concurrency_point(chain)
    return x if dist <= tol else None


# --- gimbal scan -------------------------------------------------------------

def scan_grid(limits: Sequence[tuple[float, float]], grid: int) -> np.ndarray:
    """Uniform per-joint grid within limits (full circles exclude the duplicate endpoint)."""
    axes = []
    for lo, hi in limits:
        if hi == lo:
            axes.append(np.array([lo]))
        elif hi - lo >= 2 * math.pi - 1e-12:
            axes.append(lo + 2 * math.pi * np.arange(grid) / grid)
        else:
            axes.append(np.linspace(lo, hi, grid))
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(limits))


def low_conditioning_configs(chain: SerialChain, Q: np.ndarray, threshold: float,
                             rows: str = "angular_only", chunk: int = 20000):
    """Evaluate the conditioning metric on ``Q``; return (metrics, sub-threshold list)."""
    metrics = np.empty(Q.shape[0])
    for start in range(0, Q.shape[0], chunk):
        J = batch_jacobian(chain, Q[start:start + chunk])
        metrics[start:start + chunk] = batch_conditioning(J, rows)
    idx = np.flatnonzero(metrics < threshold)
    hits = sorted(((tuple(float(v) for v in Q[i]), float(metrics[i])) for i in idx),
                  key=lambda item: (item[1], item[0]))
    return metrics, hits


def gimbal_scan(c: GHConcept, grid: int = 16, threshold: float = 0.05,
                base: Pose | None = None) -> list[tuple[tuple[float, ...], float]]:
    """Configurations of a GH concept whose angular Jacobian is near singular.

    Returns ``(q, smallest singular value)`` pairs below ``threshold``,
    sorted ascending by metric.
    """
    if grid < 16:
        raise InvalidArgument("gimbal_scan grid must be >= 16 per joint")
    chain = canonical_3r_chain(c.triplet, c.joint_limits)
    if base is not None:
        chain = chain.with_base(base)
    Q = scan_grid(c.joint_limits, grid)
    _, hits = low_conditioning_configs(chain, Q, threshold)
    return hits
