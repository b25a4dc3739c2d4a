"""Whole-design analyses: ROM coverage, singularity scan, mobility counting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.stats import qmc

from .arm import ArmModel, arm_fk, elbow_axis
from .errors import InvalidArgument
from .grammar import (SEGMENTS, ExoDesign, design_id, direct_mapping, dof_gaps, map_arm_pose,
                      realize_chain, segment_frame_index, segment_offset)
from .kinematics import (REVOLUTE, JointSpec, Pose, SerialChain, batch_conditioning,
                         batch_jacobian, joint_screws, rodrigues)
from .spherical import scan_grid

IK_DAMPING = 1e-3
IK_MAX_ITER = 200
IK_POS_TOL = 1e-3
IK_ROT_TOL = 1e-2
IK_MAX_STEP = 0.3
LIMIT_TOL = 1e-12
# Number of leading pose DOF that move each segment.
SEGMENT_DOF_COUNT = {"upper_arm": 3, "forearm": 5, "hand": 7}


# --- ROM coverage --------------------------------------------------------------

def rom_grid(arm: ArmModel, samples_per_dof: int, dofs: Sequence | None = None) -> np.ndarray:
    """Uniform grid over the arm ROM, endpoints included, in pose order.

    DOF not listed in ``dofs`` stay at their rest value 0 (clamped into
    the ROM).
    """
    if samples_per_dof < 1:
        raise InvalidArgument("samples_per_dof must be >= 1")
    names = None if dofs is None else {getattr(d, "value", d) for d in dofs}
    axes = []
    for dof in arm.pose_dofs:
        lo, hi = arm.rom[dof]
        if names is None or dof.value in names:
            axes.append(np.linspace(lo, hi, samples_per_dof) if samples_per_dof > 1 else np.array([0.5 * (lo + hi)]))
        else:
            axes.append(np.array([min(max(0.0, lo), hi)]))
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 7)


def _relevant_dof_count(cuffs: Sequence[str] | None) -> int:
    if not cuffs:
        return 7
    return max(SEGMENT_DOF_COUNT[c] for c in cuffs)


def direct_coverage_mask(chain: SerialChain, arm: ArmModel, poses: np.ndarray,
                         mapping: np.ndarray, cuffs: Sequence[str] | None = None) -> np.ndarray:
    """Per-pose coverage when chain joints copy arm DOF one to one.

    Mapped joints must hold the DOF value within limits; a DOF without a
    joint is only followed at its rest value; other joints stay at zero.
    """
    k = _relevant_dof_count(cuffs)
    ok = np.ones(poses.shape[0], dtype=bool)
    mapped = set()
    for i, spec in enumerate(chain.specs):
        lo, hi = spec.limits
        j = mapping[i]
        if j >= 0:
            mapped.add(int(j))
            if j < k:
                v = poses[:, j]
                ok &= (v >= lo - LIMIT_TOL) & (v <= hi + LIMIT_TOL)
        elif not lo - LIMIT_TOL <= 0.0 <= hi + LIMIT_TOL:
            ok[:] = False
    for j in range(k):
        if j not in mapped:
            ok &= np.abs(poses[:, j]) <= LIMIT_TOL
    return ok


def _batch_chain_state(chain: SerialChain, Q: np.ndarray):
    """World joint axes/points and post-joint frames for a stack of configs."""
    N = Q.shape[0]
    R = np.broadcast_to(chain.base_pose.rotation, (N, 3, 3)).copy()
    p = np.broadcast_to(chain.base_pose.translation, (N, 3)).copy()
    axes, points, frames_R, frames_p = [], [], [], []
    for j, (fixed, joint) in enumerate(chain.joints):
        p = p + R @ fixed.translation
        R = R @ fixed.rotation
        axes.append(R @ joint.axis)
        points.append(p + R @ joint.anchor)
        if joint.kind == REVOLUTE:
            Rm = rodrigues(joint.axis, Q[:, j])
            p = p + np.einsum("nij,nj->ni", R, joint.anchor - Rm @ joint.anchor)
            R = R @ Rm
        else:
            p = p + Q[:, j, None] * axes[-1]
        frames_R.append(R)
        frames_p.append(p)
    return axes, points, frames_R, frames_p


def _cuff_poses(chain, state, index, offset):
    _, _, frames_R, frames_p = state
    if index < 0:
        N = frames_p[0].shape[0]
        R = np.broadcast_to(chain.base_pose.rotation, (N, 3, 3))
        p = np.broadcast_to(chain.base_pose.apply(offset), (N, 3))
        return R, p
    R = frames_R[index]
    return R, frames_p[index] + R @ offset


def solve_cuff_ik(chain: SerialChain, arm: ArmModel, poses: np.ndarray, cuffs: Sequence[str],
                  damping: float = IK_DAMPING, max_iter: int = IK_MAX_ITER,
                  pos_tol: float = IK_POS_TOL, rot_tol: float = IK_ROT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Damped least-squares IK matching the chain's cuff frames to the arm's.

    All poses are solved together; a pose leaves the active set once every
    cuff error is within tolerance. Returns (converged mask, joint values).
    """
    N = poses.shape[0]
    kinds = [s.kind for s in chain.specs]
    limits = chain.limits
    places = [segment_offset(chain, arm, s) for s in cuffs]

    target_R = np.empty((len(cuffs), N, 3, 3))
    target_p = np.empty((len(cuffs), N, 3))
    for i, pose in enumerate(poses):
        frames = arm_fk(arm, pose)
        for c, seg in enumerate(cuffs):
            F = frames.segment(seg)
            target_R[c, i] = F.rotation
            target_p[c, i] = F.translation

    # full-circle revolutes wrap around; clamping them would strand the
    # solver at an artificial wall at +-pi
    wrap = np.array([k == REVOLUTE and hi - lo >= 2 * math.pi - 1e-12 for k, (lo, hi) in zip(kinds, limits)])

    def project(Qx):
        lo = limits[:, 0]
        return np.where(wrap, lo + np.mod(Qx - lo, 2 * math.pi), np.clip(Qx, lo, limits[:, 1]))

    Q = project(np.array([map_arm_pose(chain, arm, pose) for pose in poses]).reshape(N, chain.n))
    done = np.zeros(N, dtype=bool)
    active = np.arange(N)
    eye = np.eye(chain.n)
    for _ in range(max_iter + 1):
        Qa = Q[active]
        state = _batch_chain_state(chain, Qa)
        axes, points, _, _ = state
        errs, jacs, converged = [], [], np.ones(active.size, dtype=bool)
        for c, (idx, offset) in enumerate(places):
            R, p = _cuff_poses(chain, state, idx, offset)
            e_p = target_p[c, active] - p
            e_r = Rotation.from_matrix(target_R[c, active] @ np.transpose(R, (0, 2, 1))).as_rotvec()
            converged &= (np.linalg.norm(e_p, axis=1) < pos_tol) & (np.linalg.norm(e_r, axis=1) < rot_tol)
            J = np.zeros((active.size, 6, chain.n))
            for j in range(idx + 1):
                if kinds[j] == REVOLUTE:
                    J[:, :3, j] = axes[j]
                    J[:, 3:, j] = np.cross(axes[j], p - points[j])
                else:
                    J[:, 3:, j] = axes[j]
            errs.append(np.concatenate([e_r, e_p], axis=1))
            jacs.append(J)
        done[active[converged]] = True
        active = active[~converged]
        if active.size == 0:
            break
        keep = ~converged
        e = np.concatenate(errs, axis=1)[keep]
        J = np.concatenate(jacs, axis=1)[keep]
        Jt = np.transpose(J, (0, 2, 1))
        step = np.linalg.solve(Jt @ J + damping ** 2 * eye, (Jt @ e[..., None]))[..., 0]
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        step *= np.minimum(1.0, IK_MAX_STEP / np.maximum(norm, 1e-300))
        Q[active] = project(Q[active] + step)
    return done, Q


def rom_coverage_mask(chain: SerialChain, arm: ArmModel, samples_per_dof: int,
                      dofs: Sequence | None = None, cuffs: Sequence[str] | None = None,
                      method: str = "auto") -> tuple[np.ndarray, np.ndarray, str]:
    """(poses, covered mask, method used) over the ROM grid."""
    poses = rom_grid(arm, samples_per_dof, dofs)
    cuffs = tuple(cuffs) if cuffs else SEGMENTS
    if method not in ("auto", "direct", "ik"):
        raise InvalidArgument(f"unknown coverage method {method!r}")
    mapping = direct_mapping(chain, arm) if method != "ik" else None
    if method == "direct" and mapping is None:
        raise InvalidArgument("chain axes are not the arm's biologic axes; direct mapping unavailable")
    if mapping is not None:
        return poses, direct_coverage_mask(chain, arm, poses, mapping, cuffs), "direct"
    mask, _ = solve_cuff_ik(chain, arm, poses, cuffs)
    return poses, mask, "ik"


def rom_coverage(chain: SerialChain, arm: ArmModel, samples_per_dof: int = 3,
                 dofs: Sequence | None = None, cuffs: Sequence[str] | None = None,
                 method: str = "auto") -> float:
    """Fraction of the ROM grid the chain can follow at its cuffs.

    ``method="auto"`` uses the direct mapping when the chain's labeled axes
    coincide with the arm's biologic axes, and cuff IK otherwise.
    """
    _, mask, _ = rom_coverage_mask(chain, arm, samples_per_dof, dofs, cuffs, method)
    return float(np.count_nonzero(mask)) / mask.size


# --- singularity scan ------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    min_conditioning: float
    configs: list
    evaluated: int


def _scan_configs(limits: np.ndarray, grid: int, budget: int) -> np.ndarray:
    sizes = [1 if lo == hi else grid for lo, hi in limits]
    if math.prod(sizes) <= budget:
        return scan_grid([tuple(l) for l in limits], grid)
    # Over budget: an unscrambled Halton set is deterministic and spreads
    # the same number of points evenly over the limit box.
    pts = qmc.Halton(d=len(limits), scramble=False).random(budget)
    return limits[:, 0] + pts * (limits[:, 1] - limits[:, 0])


def singularity_scan(chain: SerialChain, grid: int = 8, threshold: float = 0.05,
                     rows: str = "angular_only", budget: int = 50_000, chunk: int = 5000) -> ScanResult:
    """Minimum conditioning over the in-limits grid and all sub-threshold configs.

    A grid whose size exceeds ``budget`` is replaced by ``budget`` Halton
    points in the same box.
    """
    if grid < 8:
        raise InvalidArgument("singularity_scan grid must be >= 8 per joint")
    Q = _scan_configs(chain.limits, grid, budget)
    metrics = np.empty(Q.shape[0])
    for start in range(0, Q.shape[0], chunk):
        metrics[start:start + chunk] = batch_conditioning(batch_jacobian(chain, Q[start:start + chunk]), rows)
    idx = np.flatnonzero(metrics < threshold)
    configs = sorted(((tuple(float(v) for v in Q[i]), float(metrics[i])) for i in idx),
                     key=lambda item: (item[1], item[0]))
    return ScanResult(float(metrics.min()), configs, int(Q.shape[0]))


# --- mobility ------------------------------------------------------------------

@dataclass(frozen=True)
class CoupledModel:
    bodies: int
    joints: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(int(f) for f in self.joints))
        if self.bodies < 2:
            raise InvalidArgument("a coupled model needs at least 2 bodies (including ground)")
        if any(not 1 <= f <= 6 for f in self.joints):
            raise InvalidArgument("joint DOF must lie in [1, 6]")


def mobility_count(m: CoupledModel, expected_mobility: int = 0) -> tuple[int, bool]:
    """Spatial Grübler-Kutzbach count and the hyperstatic flag (M < expected)."""
    M = 6 * (m.bodies - 1 - len(m.joints)) + sum(m.joints)
    return M, M < expected_mobility


def arm_chain(arm: ArmModel, elbow_flexion: float = 0.0) -> SerialChain:
    """The 7-DOF arm as a serial chain at rest (instantaneous elbow axis)."""
    elbow = elbow_axis(arm.elbow_frustum, elbow_flexion)
    lines = []
    for dof in arm.pose_dofs:
        if dof.value == "ElbowFE":
            lines.append((elbow.axis, arm.elbow_center + elbow.anchor, dof.value))
        else:
            direction, anchor = arm.axis(dof)
            lines.append((direction, anchor, dof.value))
    joints = [(Pose.identity(), JointSpec(REVOLUTE, d, a, arm.rom[arm.pose_dofs[i]], lab, "arm"))
              for i, (d, a, lab) in enumerate(lines)]
    return SerialChain(tuple(joints))


def coupled_model(exo_joint_count: int, cuff_count: int, arm_joint_count: int = 7) -> CoupledModel:
    """Arm and exoskeleton as two open chains from ground, welded at each cuff.

    Passive cuff DOF are joints of the exoskeleton chain, so every cuff is
    a rigid weld that merges two bodies.
    """
    bodies = 1 + arm_joint_count + exo_joint_count - cuff_count
    return CoupledModel(bodies, (1,) * (arm_joint_count + exo_joint_count))


def _twist_columns(chain: SerialChain, q) -> np.ndarray:
    cols = []
    for kind, point, direction in joint_screws(chain, q):
        if kind == REVOLUTE:
            cols.append(np.concatenate([direction, np.cross(point, direction)]))
        else:
            cols.append(np.concatenate([np.zeros(3), direction]))
    return np.array(cols).T


def constraint_nullity(chain_a: SerialChain, qa, chain_b: SerialChain, qb,
                       pairs: Sequence[tuple[int, int]], tol: float = 1e-9) -> tuple[int, int]:
    """Instantaneous mobility of two chains from a common ground joined at ``pairs``.

    Each pair ``(i, j)`` welds the body after joint ``i`` of ``chain_a`` to
    the body after joint ``j`` of ``chain_b`` (``-1`` is ground). Returns
    (nullity, rank) of the loop constraint matrix in joint rates.
    """
    A = _twist_columns(chain_a, qa)
    B = _twist_columns(chain_b, qb)
    na, nb = A.shape[1], B.shape[1]
    rows = []
    for i, j in pairs:
        row = np.zeros((6, na + nb))
        row[:, :i + 1] = A[:, :i + 1]
        row[:, na:na + j + 1] = -B[:, :j + 1]
        rows.append(row)
    C = np.vstack(rows) if rows else np.zeros((0, na + nb))
    if C.size == 0:
        return na + nb, 0
    s = np.linalg.svd(C, compute_uv=False)
    rank = int(np.count_nonzero(s > tol * max(1.0, s[0])))
    return na + nb - rank, rank


# --- report --------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    design_id: str
    rom_coverage: float
    coverage_method: str
    min_conditioning: float
    singular_configs: list
    evaluated_configs: int
    mobility: int
    mobility_numeric: int
    hyperstatic: bool
    dof_gaps: frozenset
    failures: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not 0.0 <= self.rom_coverage <= 1.0:
            raise InvalidArgument("rom_coverage must lie in [0, 1]")

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self, max_configs: int = 20) -> dict:
        return {
            "design_id": self.design_id,
            "rom_coverage": self.rom_coverage,
            "coverage_method": self.coverage_method,
            "min_conditioning": self.min_conditioning,
            "singular_count": len(self.singular_configs),
            "singular_configs": [{"q": list(q), "metric": m} for q, m in self.singular_configs[:max_configs]],
            "evaluated_configs": self.evaluated_configs,
            "mobility": self.mobility,
            "mobility_numeric": self.mobility_numeric,
            "paradoxical": self.mobility != self.mobility_numeric,
            "hyperstatic": self.hyperstatic,
            "dof_gaps": sorted(g.value for g in self.dof_gaps),
            "failures": list(self.failures),
            "passed": self.passed,
        }


def validate_design(d: ExoDesign, arm: ArmModel, samples_per_dof: int = 3, scan_grid_size: int = 8,
                    threshold: float = 0.05, expected_mobility: int = 7, min_rom_coverage: float = 0.0,
                    scan_budget: int = 20_000) -> ValidationReport:
    """Run every whole-design analysis on ``d`` against ``arm``.

    Failures: DOF gaps, hyperstaticity, and ROM coverage below
    ``min_rom_coverage``. Construction errors propagate.
    """
    chain = realize_chain(d, arm)
    cuffs = tuple(c.segment for c in d.attachment.cuffs)
    _, mask, method = rom_coverage_mask(chain, arm, samples_per_dof, cuffs=cuffs)
    coverage = float(np.count_nonzero(mask)) / mask.size
    scan = singularity_scan(chain, scan_grid_size, threshold, budget=scan_budget)

    model = coupled_model(chain.n, len(cuffs))
    mobility, hyper = mobility_count(model, expected_mobility)
    arm_c = arm_chain(arm)
    pairs = [(SEGMENT_DOF_COUNT[s] - 1, segment_frame_index(chain, s)) for s in cuffs]
    nullity, _ = constraint_nullity(arm_c, np.zeros(7), chain, np.zeros(chain.n), pairs)

    gaps = dof_gaps(d)
    failures = []
    if gaps:
        failures.append("dof gaps: " + ",".join(sorted(g.value for g in gaps)))
    if hyper:
        failures.append(f"hyperstatic: mobility {mobility} < expected {expected_mobility}")
    if coverage < min_rom_coverage:
        failures.append(f"rom coverage {coverage:.4f} < {min_rom_coverage}")
    return ValidationReport(design_id(d), coverage, method, scan.min_conditioning, scan.configs,
                            scan.evaluated, mobility, nullity, hyper, frozenset(gaps), tuple(failures))
