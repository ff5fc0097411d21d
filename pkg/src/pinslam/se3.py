"""Minimal SE(3)/SO(3) toolkit: quaternion poses, exp/log maps, interpolation.

Conventions: quaternions are stored (w, x, y, z) and kept unit-norm; twists
are ordered [translation, axis-angle rotation]; poses map local coordinates
to the parent frame via p' = R(q) p + t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Below this rotation angle exp/log switch to Taylor expansions.
SMALL_ANGLE = 1e-8

# Composition chains longer than this renormalize the quaternion.
RENORM_CHAIN = 16


def quat_multiply(q1, q2):
    """Hamilton product of two (w,x,y,z) quaternions (broadcasting)."""
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    w1, v1 = q1[..., :1], q1[..., 1:]
    w2, v2 = q2[..., :1], q2[..., 1:]
    w = w1 * w2 - np.sum(v1 * v2, axis=-1, keepdims=True)
    v = w1 * v2 + w2 * v1 + np.cross(v1, v2)
    return np.concatenate([w, v], axis=-1)


def quat_conjugate(q):
    q = np.asarray(q, dtype=np.float64)
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def quat_rotate(q, v):
    """Rotate vectors v by quaternions q, i.e. R(q) v (broadcasting)."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = q[..., :1]
    u = q[..., 1:]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def quat_to_matrix(q):
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(R):
    """Rotation matrix to (w,x,y,z) quaternion (Shepperd's method)."""
    R = np.asarray(R, dtype=np.float64)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array(
            [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
        )
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array(
            [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array(
            [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_z(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass
class Twist:
    """se(3) element: translation part ``t`` (m) and axis-angle part ``theta`` (rad)."""

    t: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64).reshape(3)
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(3)

    @classmethod
    def from_vector(cls, xi):
        xi = np.asarray(xi, dtype=np.float64).reshape(6)
        return cls(xi[:3], xi[3:])

    @property
    def vec(self):
        return np.concatenate([self.t, self.theta])


@dataclass
class Pose:
    """Rigid transform: unit quaternion (w,x,y,z) plus translation (m)."""

    quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))
    _chain: int = 0

    def __post_init__(self):
        self.quat = np.asarray(self.quat, dtype=np.float64).reshape(4)
        self.trans = np.asarray(self.trans, dtype=np.float64).reshape(3)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_matrix(cls, T):
        T = np.asarray(T, dtype=np.float64)
        return cls(matrix_to_quat(T[:3, :3]), T[:3, 3].copy())

    @classmethod
    def from_rt(cls, R, t):
        return cls(matrix_to_quat(R), np.asarray(t, dtype=np.float64))

    def to_matrix(self):
        T = np.eye(4)
        T[:3, :3] = quat_to_matrix(self.quat)
        T[:3, 3] = self.trans
        return T

    @property
    def rotation_matrix(self):
        return quat_to_matrix(self.quat)

    def compose(self, other: "Pose") -> "Pose":
        q = quat_multiply(self.quat, other.quat)
        t = self.trans + quat_rotate(self.quat, other.trans)
        chain = self._chain + other._chain + 1
        if chain > RENORM_CHAIN:
            q = q / np.linalg.norm(q)
            chain = 0
        return Pose(q, t, chain)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        qinv = quat_conjugate(self.quat)
        return Pose(qinv, -quat_rotate(qinv, self.trans), self._chain)

    def apply(self, points):
        """Transform one point (3,) or a cloud (N,3)."""
        return quat_rotate(self.quat, points) + self.trans

    def rotation_angle(self):
        w = min(abs(float(self.quat[0])), 1.0)
        return 2.0 * math.acos(w)

    def yaw(self):
        R = self.rotation_matrix
        return math.atan2(R[1, 0], R[0, 0])

    def copy(self) -> "Pose":
        return Pose(self.quat.copy(), self.trans.copy(), self._chain)

    def almost_equal(self, other: "Pose", tol=1e-9):
        dq = min(
            np.abs(self.quat - other.quat).max(), np.abs(self.quat + other.quat).max()
        )
        return dq < tol and np.abs(self.trans - other.trans).max() < tol

    def __repr__(self):
        return f"Pose(q={np.round(self.quat, 6)}, t={np.round(self.trans, 6)})"


def _so3_exp_quat(theta):
    angle = np.linalg.norm(theta)
    if angle < SMALL_ANGLE:
        # q ~ (1, theta/2) to first order
        q = np.concatenate([[1.0], 0.5 * theta])
        return q / np.linalg.norm(q)
    axis = theta / angle
    half = 0.5 * angle
    return np.concatenate([[math.cos(half)], math.sin(half) * axis])


def _so3_log(q):
    if q[0] < 0.0:
        q = -q
    vnorm = np.linalg.norm(q[1:])
    if vnorm < SMALL_ANGLE:
        return 2.0 * q[1:]
    angle = 2.0 * math.atan2(vnorm, q[0])
    return (angle / vnorm) * q[1:]


# Below this angle the Jacobian coefficients use series expansions; the
# closed forms lose digits to cancellation in (1 - cos) and (angle - sin).
_SERIES_ANGLE = 0.1


def _left_jacobian(theta):
    angle = np.linalg.norm(theta)
    S = skew(theta)
    a2 = angle * angle
    if angle < _SERIES_ANGLE:
        c1 = 0.5 - a2 / 24.0 + a2 * a2 / 720.0
        c2 = 1.0 / 6.0 - a2 / 120.0 + a2 * a2 / 5040.0
    else:
        c1 = (1.0 - math.cos(angle)) / a2
        c2 = (angle - math.sin(angle)) / (a2 * angle)
    return np.eye(3) + c1 * S + c2 * (S @ S)


def _left_jacobian_inv(theta):
    angle = np.linalg.norm(theta)
    S = skew(theta)
    a2 = angle * angle
    if angle < _SERIES_ANGLE:
        c = 1.0 / 12.0 + a2 / 720.0 + a2 * a2 / 30240.0
    else:
        c = (1.0 - (angle * math.sin(angle)) / (2.0 * (1.0 - math.cos(angle)))) / a2
    return np.eye(3) - 0.5 * S + c * (S @ S)


def exp_map(xi) -> Pose:
    """SE(3) exponential of a twist (Twist or length-6 vector)."""
    if isinstance(xi, Twist):
        t, theta = xi.t, xi.theta
    else:
        xi = np.asarray(xi, dtype=np.float64).reshape(6)
        t, theta = xi[:3], xi[3:]
    q = _so3_exp_quat(theta)
    return Pose(q, _left_jacobian(theta) @ t)


def log_map(T: Pose) -> Twist:
    """SE(3) logarithm; rotation angle must stay below pi."""
    theta = _so3_log(T.quat)
    angle = np.linalg.norm(theta)
    if angle > math.pi - 1e-6:
        raise ValueError(f"log_map undefined near angle pi (got {angle:.9f} rad)")
    return Twist(_left_jacobian_inv(theta) @ T.trans, theta)


def interpolate_pose(T_rel: Pose, alpha: float) -> Pose:
    """Geodesic interpolation from identity toward T_rel, exp(alpha * log(T_rel))."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"interpolation fraction must be in [0, 1], got {alpha}")
    xi = log_map(T_rel)
    return exp_map(np.concatenate([alpha * xi.t, alpha * xi.theta]))


def interpolate_many(T_rel: Pose, alphas):
    """Vectorized interpolate_pose: rotations and translations for many fractions.

    Returns (quats (N,4), trans (N,3)) so per-point deskewing avoids N Pose objects.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    xi = log_map(T_rel)
    theta = np.outer(alphas, xi.theta)
    rho = np.outer(alphas, xi.t)
    angle = np.linalg.norm(theta, axis=1)
    safe = np.where(angle < SMALL_ANGLE, 1.0, angle)

    half = 0.5 * angle
    axis = theta / safe[:, None]
    quats = np.empty((len(alphas), 4))
    quats[:, 0] = np.cos(half)
    quats[:, 1:] = np.sin(half)[:, None] * axis
    small = angle < SMALL_ANGLE
    if small.any():
        qs = np.concatenate([np.ones((small.sum(), 1)), 0.5 * theta[small]], axis=1)
        quats[small] = qs / np.linalg.norm(qs, axis=1, keepdims=True)

    # V(theta) rho = rho + c1 theta x rho + c2 theta x (theta x rho)
    a2 = safe * safe
    series = angle < _SERIES_ANGLE
    a2s = angle * angle
    with np.errstate(invalid="ignore"):
        c1 = np.where(
            series,
            0.5 - a2s / 24.0 + a2s * a2s / 720.0,
            (1.0 - np.cos(angle)) / a2,
        )
        c2 = np.where(
            series,
            1.0 / 6.0 - a2s / 120.0 + a2s * a2s / 5040.0,
            (angle - np.sin(angle)) / (a2 * safe),
        )
    cr = np.cross(theta, rho)
    trans = rho + c1[:, None] * cr + c2[:, None] * np.cross(theta, cr)
    return quats, trans
