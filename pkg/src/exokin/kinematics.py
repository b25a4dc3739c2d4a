"""Rigid-body poses and serial-chain kinematics.

Joints are parameterized by an axis direction and a point on the axis (the
anchor), both expressed in the frame that results from the joint's fixed
transform. Angles are radians throughout; lengths are meters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import InvalidArgument

UNIT_TOL = 1e-9
ORTHO_TOL = 1e-9

REVOLUTE = "revolute"
PRISMATIC = "prismatic"


def unit(v) -> np.ndarray:
    """Return ``v`` scaled to unit length."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise InvalidArgument(f"cannot normalize vector {v!r}")
    return v / n


def check_unit(v, what: str = "axis") -> np.ndarray:
    v = np.array(v, dtype=float).reshape(3)
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise InvalidArgument(f"{what} must be unit-norm, got |{v.tolist()}| = {np.linalg.norm(v):.12g}")
    return v


def hat(k) -> np.ndarray:
    """3x3 cross-product matrix of ``k``."""
    return np.array([[0.0, -k[2], k[1]],
                     [k[2], 0.0, -k[0]],
                     [-k[1], k[0], 0.0]])


def rodrigues(axis, angle) -> np.ndarray:
    """Rotation matrix (or stack of them) for unit ``axis`` and ``angle``.

    ``angle`` may be a scalar or a 1-D array; the result then has shape
    ``angle.shape + (3, 3)``.
    """
    K = hat(axis)
    K2 = K @ K
    a = np.asarray(angle, dtype=float)
    s = np.sin(a)[..., None, None]
    c = np.cos(a)[..., None, None]
    return np.eye(3) + s * K + (1.0 - c) * K2


def so3_log(R) -> np.ndarray:
    """Rotation vector of ``R`` (works on stacks)."""
    return Rotation.from_matrix(R).as_rotvec()


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform ``x -> rotation @ x + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise InvalidArgument("pose contains non-finite values")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise InvalidArgument("pose rotation is not a proper rotation matrix")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_translation(cls, t) -> "Pose":
        return cls(np.eye(3), t)

    @classmethod
    def from_matrix(cls, T) -> "Pose":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        """Transform a point (3,) or an array of points (N, 3)."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def apply_vector(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.rotation.T

    def allclose(self, other: "Pose", atol: float = 1e-12) -> bool:
        return (np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol)
                and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"Pose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def rotation_about_axis(axis, anchor, angle: float) -> Pose:
    """Rotation by ``angle`` about the line through ``anchor`` along ``axis``."""
    axis = check_unit(axis)
    anchor = np.asarray(anchor, dtype=float).reshape(3)
    R = rodrigues(axis, float(angle))
    return Pose(R, anchor - R @ anchor)


@dataclass(frozen=True, eq=False)
class JointSpec:
    """One-DOF joint.

    ``group`` tags the design fragment a joint belongs to (``"gh"``,
    ``"girdle"``, ``"elbow"``...); it carries no kinematic meaning.
    """

    kind: str
    axis: np.ndarray
    anchor: np.ndarray = field(default_factory=lambda: np.zeros(3))
    limits: tuple[float, float] = (-np.pi, np.pi)
    label: str = ""
    group: str = ""

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise InvalidArgument(f"unknown joint kind {self.kind!r}")
        axis = check_unit(self.axis, f"joint {self.label or '?'} axis")
        anchor = np.array(self.anchor, dtype=float).reshape(3)
        lo, hi = (float(x) for x in self.limits)
        if not lo <= hi:
            raise InvalidArgument(f"joint {self.label or '?'} limits [{lo}, {hi}] are empty")
        axis = axis.copy()
        axis.setflags(write=False)
        anchor.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "limits", (lo, hi))

    @property
    def is_revolute(self) -> bool:
        return self.kind == REVOLUTE

    def motion(self, q: float) -> Pose:
        if self.kind == REVOLUTE:
            return rotation_about_axis(self.axis, self.anchor, q)
        return Pose.from_translation(q * self.axis)

    def within_limits(self, q: float, tol: float = 1e-12) -> bool:
        lo, hi = self.limits
        return lo - tol <= q <= hi + tol


@dataclass(frozen=True, eq=False)
class SerialChain:
    """Ordered joints, each preceded by a fixed transform."""

    joints: tuple[tuple[Pose, JointSpec], ...]
    base_pose: Pose = field(default_factory=Pose.identity)
    tool_transform: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        joints = tuple((fixed, joint) for fixed, joint in self.joints)
        if not joints:
            raise InvalidArgument("a serial chain needs at least one joint")
        object.__setattr__(self, "joints", joints)

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def specs(self) -> list[JointSpec]:
        return [j for _, j in self.joints]

    @property
    def labels(self) -> list[str]:
        return [j.label for _, j in self.joints]

    @property
    def limits(self) -> np.ndarray:
        return np.array([j.limits for _, j in self.joints], dtype=float)

    def with_limits(self, index: int, limits: tuple[float, float]) -> "SerialChain":
        joints = list(self.joints)
        fixed, joint = joints[index]
        joints[index] = (fixed, replace(joint, limits=tuple(limits)))
        return replace(self, joints=tuple(joints))

    def with_base(self, base: Pose) -> "SerialChain":
        return replace(self, base_pose=base)

    def split(self, k: int) -> tuple["SerialChain", "SerialChain"]:
        """Split into head (joints ``[:k]``) and tail (joints ``[k:]``).

        The head keeps the base pose and gets an identity tool; the tail gets
        an identity base and keeps the tool transform.
        """
        if not 1 <= k < self.n:
            raise InvalidArgument(f"split index {k} outside [1, {self.n - 1}]")
        head = SerialChain(self.joints[:k], self.base_pose, Pose.identity())
        tail = SerialChain(self.joints[k:], Pose.identity(), self.tool_transform)
        return head, tail


def _check_config(chain: SerialChain, q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != chain.n:
        raise InvalidArgument(f"configuration has {q.shape[0]} values, chain has {chain.n} joints")
    return q


def forward_kinematics(chain: SerialChain, q: Sequence[float]) -> list[Pose]:
    """Frames after each joint, followed by the tool frame."""
    q = _check_config(chain, q)
    T = chain.base_pose
    frames = []
    for (fixed, joint), qi in zip(chain.joints, q):
        T = T @ fixed @ joint.motion(qi)
        frames.append(T)
    frames.append(T @ chain.tool_transform)
    return frames


def joint_screws(chain: SerialChain, q: Sequence[float]) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """World-frame ``(kind, point, direction)`` of every joint axis at ``q``."""
    q = _check_config(chain, q)
    T = chain.base_pose
    out = []
    for (fixed, joint), qi in zip(chain.joints, q):
        F = T @ fixed
        out.append((joint.kind, F.apply(joint.anchor), F.apply_vector(joint.axis)))
        T = F @ joint.motion(qi)
    return out


def batch_forward(chain: SerialChain, Q, frame: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized FK over a stack of configurations.

    ``Q`` has shape (N, n). Returns rotations (N, 3, 3) and translations
    (N, 3) of frame ``frame`` (joint frame index, or -1 / n for the tool).
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != chain.n:
        raise InvalidArgument(f"configurations have {Q.shape[1]} columns, chain has {chain.n} joints")
    idx = frame if frame >= 0 else chain.n + 1 + frame
    if not 0 <= idx <= chain.n:
        raise InvalidArgument(f"frame index {frame} out of range for {chain.n} joints")
    stop = min(idx + 1, chain.n)
    N = Q.shape[0]
    R = np.broadcast_to(chain.base_pose.rotation, (N, 3, 3)).copy()
    p = np.broadcast_to(chain.base_pose.translation, (N, 3)).copy()
    for j in range(stop):
        fixed, joint = chain.joints[j]
        p = p + R @ fixed.translation
        R = R @ fixed.rotation
        if joint.kind == REVOLUTE:
            Rm = rodrigues(joint.axis, Q[:, j])
            tm = joint.anchor - Rm @ joint.anchor
        else:
            Rm = None
            tm = Q[:, j, None] * joint.axis
        p = p + np.einsum("nij,nj->ni", R, tm)
        if Rm is not None:
            R = R @ Rm
    if idx == chain.n:
        p = p + R @ chain.tool_transform.translation
        R = R @ chain.tool_transform.rotation
    return R, p


def numeric_jacobian(chain: SerialChain, q: Sequence[float], h: float = 1e-6,
                     frame: int = -1) -> np.ndarray:
    """Central-difference 6xn Jacobian of a frame (tool by default).

    Rows are the world-frame angular velocity followed by the linear velocity
    of the frame origin.
    """
    q = _check_config(chain, q)
    J = np.zeros((6, chain.n))
    for j in range(chain.n):
        dq = np.zeros(chain.n)
        dq[j] = h
        Tp = forward_kinematics(chain, q + dq)[frame]
        Tm = forward_kinematics(chain, q - dq)[frame]
        J[:3, j] = so3_log(Tp.rotation @ Tm.rotation.T) / (2 * h)
        J[3:, j] = (Tp.translation - Tm.translation) / (2 * h)
    return J


def batch_jacobian(chain: SerialChain, Q, h: float = 1e-6, frame: int = -1) -> np.ndarray:
    """Vectorized :func:`numeric_jacobian`; returns shape (N, 6, n)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    N, n = Q.shape
    J = np.zeros((N, 6, n))
    for j in range(n):
        dq = np.zeros(n)
        dq[j] = h
        Rp, pp = batch_forward(chain, Q + dq, frame)
        Rm, pm = batch_forward(chain, Q - dq, frame)
        J[:, :3, j] = so3_log(Rp @ np.swapaxes(Rm, 1, 2)) / (2 * h)
        J[:, 3:, j] = (pp - pm) / (2 * h)
    return J


def conditioning_metric(J, rows: str = "angular_only") -> float:
    """Smallest singular value of the selected row block of ``J``."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape[1] < 1:
        raise InvalidArgument("Jacobian needs at least one column")
    if rows == "angular_only":
        block = J[:3]
    elif rows == "full":
        block = J
    else:
        raise InvalidArgument(f"rows must be 'angular_only' or 'full', got {rows!r}")
    return float(np.linalg.svd(block, compute_uv=False).min())


def batch_conditioning(J, rows: str = "angular_only") -> np.ndarray:
    J = np.asarray(J, dtype=float)
    block = J[:, :3] if rows == "angular_only" else J
    return np.linalg.svd(block, compute_uv=False).min(axis=1)
