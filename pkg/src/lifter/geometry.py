"""
Geometry - rotations, the pinhole camera, projection, hip-centring and
Procrustes alignment.

Conventions: world y is the vertical axis, all frames are right-handed,
3D poses are 3 x n joint matrices in millimetres and joint 0 is the hip.
Camera frame: x right, y down, z along the optical axis.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DataError, DegenerateTarget, NonPositiveDepth, ShapeMismatch

ORTHONORMAL_TOL = 1e-9
DEPTH_EPSILON_MM = 1.0

# Synthetic-camera intrinsics, close to the Human3.6M calibration
DEFAULT_FOCAL_PX = (1150.0, 1150.0)
DEFAULT_PRINCIPAL_PX = (500.0, 500.0)


@dataclass(frozen=True, eq=False)
class Rotation3:
    """Orthonormal 3x3 matrix with determinant +1"""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ShapeMismatch(f"rotation must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DataError("rotation contains non-finite entries")
        if np.linalg.norm(m.T @ m - np.eye(3)) > ORTHONORMAL_TOL:
            raise DataError("rotation matrix is not orthonormal")
        if abs(np.linalg.det(m) - 1.0) > ORTHONORMAL_TOL:
            raise DataError("rotation matrix has determinant != 1")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "Rotation3":
        return cls(np.eye(3))

    def inverse(self) -> "Rotation3":
        return Rotation3(self.m.T)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Rotate a 3 x n point matrix (or a batch of them, ... x 3 x n)"""
        return np.matmul(self.m, points)

    def __matmul__(self, other):
        if isinstance(other, Rotation3):
            return Rotation3(self.m @ other.m)
        return np.matmul(self.m, other)

    def allclose(self, other: "Rotation3", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.m, other.m, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        return f"Rotation3({self.m.tolist()})"


class PoseFrame(enum.Enum):
    WORLD = "world"
    CAMERA = "camera"
    HIP_CENTERED = "hip-centered"


@dataclass(eq=False)
class Pose3D:
    """3 x n joint positions in millimetres, tagged with their frame"""

    joints: np.ndarray
    frame: PoseFrame = PoseFrame.WORLD

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64)
        if self.joints.ndim != 2 or self.joints.shape[0] != 3:
            raise ShapeMismatch(f"3D pose must be 3 x n, got {self.joints.shape}")
        if self.frame is PoseFrame.HIP_CENTERED and np.any(np.abs(self.joints[:, 0]) > 1e-9):
            raise DataError("hip-centered pose must have the hip at the origin")

    @property
    def n_joints(self) -> int:
        return self.joints.shape[1]


@dataclass(eq=False)
class Pose2D:
    """2 x n joint positions in pixels"""

    joints: np.ndarray

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64)
        if self.joints.ndim != 2 or self.joints.shape[0] != 2:
            raise ShapeMismatch(f"2D pose must be 2 x n, got {self.joints.shape}")
        if not np.all(np.isfinite(self.joints)):
            raise DataError("2D pose contains non-finite coordinates")

    @property
    def n_joints(self) -> int:
        return self.joints.shape[1]


@dataclass(eq=False)
class Camera:
    """
    Extrinsics plus pinhole intrinsics.

    `rot` maps world directions into the camera frame, `center` is the
    optical centre in world millimetres.
    """

    rot: Rotation3
    center: np.ndarray
    focal: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_FOCAL_PX))
    principal: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_PRINCIPAL_PX))
    id: str = "cam"

    def __post_init__(self):
        if not isinstance(self.rot, Rotation3):
            self.rot = Rotation3(self.rot)
        self.center = _vector(self.center, 3, "center")
        self.focal = _vector(self.focal, 2, "focal")
        self.principal = _vector(self.principal, 2, "principal")
        if np.any(self.focal <= 0):
            raise DataError(f"camera {self.id}: focal lengths must be positive")
        self.id = str(self.id)

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        """Camera-frame coordinates of a 3 x n world point matrix"""
        return self.rot.m @ (np.asarray(points, dtype=np.float64) - self.center[:, None])

    def azimuth_deg(self, ring_center: Sequence[float] = (0.0, 0.0)) -> float:
        """Azimuth of the optical centre around the vertical axis through `ring_center` (x, z)"""
        dx = self.center[0] - ring_center[0]
        dz = self.center[2] - ring_center[1]
        return float(np.degrees(np.arctan2(dx, dz)))

    def rotated_about_vertical(self, angle_deg: float, ring_center: Sequence[float] = (0.0, 0.0),
                               new_id: Optional[str] = None) -> "Camera":
        """
        Move the camera by `angle_deg` around the vertical axis through `ring_center`.

        Seeing a point p with the returned camera equals seeing
        rot_vertical(-angle) p (about the same axis) with this camera.
        """
        r = rot_vertical(angle_deg)
        pivot = np.array([ring_center[0], 0.0, ring_center[1]])
        center = r.m @ (self.center - pivot) + pivot
        return Camera(
            rot=Rotation3(self.rot.m @ r.m.T),
            center=center,
            focal=self.focal.copy(),
            principal=self.principal.copy(),
            id=new_id if new_id is not None else self.id,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "rot": self.rot.m.reshape(-1).tolist(),
            "center": self.center.tolist(),
            "focal": self.focal.tolist(),
            "principal": self.principal.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Camera":
        return cls(
            rot=Rotation3(np.asarray(data["rot"], dtype=np.float64).reshape(3, 3)),
            center=data["center"],
            focal=data["focal"],
            principal=data["principal"],
            id=data["id"],
        )

    def same_as(self, other: "Camera") -> bool:
        return (
            self.id == other.id
            and np.array_equal(self.rot.m, other.rot.m)
            and np.array_equal(self.center, other.center)
            and np.array_equal(self.focal, other.focal)
            and np.array_equal(self.principal, other.principal)
        )


def _vector(value, size: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (size,):
        raise ShapeMismatch(f"{name} must have {size} elements, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr.copy()


def _joints(pose: Union[Pose3D, Pose2D, np.ndarray]) -> np.ndarray:
    if isinstance(pose, (Pose3D, Pose2D)):
        return pose.joints
    return np.asarray(pose, dtype=np.float64)


def rot_vertical(angle_deg: float) -> Rotation3:
    """Right-handed rotation about the world vertical (y) axis"""
    if not np.isfinite(angle_deg):
        raise DataError(f"angle must be finite, got {angle_deg}")
    a = np.radians(angle_deg)
    c, s = np.cos(a), np.sin(a)
    return Rotation3(np.array([
        [c, 0.0, s],
        [0.0, 1.0, 0.0],
        [-s, 0.0, c],
    ]))


def random_rotation(gen: np.random.Generator) -> Rotation3:
    """Uniformly distributed rotation (QR of a Gaussian matrix with sign fix)"""
    q, r = np.linalg.qr(gen.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return Rotation3(q)


def look_at_camera(center: Sequence[float], target: Sequence[float],
                   focal: Sequence[float] = DEFAULT_FOCAL_PX,
                   principal: Sequence[float] = DEFAULT_PRINCIPAL_PX,
                   camera_id: str = "cam") -> Camera:
    """Camera at `center` whose optical axis passes through `target`, image y pointing down"""
    center = np.asarray(center, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - center
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise DataError("camera centre and target coincide")
    z_axis = forward / norm
    down = np.array([0.0, -1.0, 0.0])
    y_axis = down - z_axis * np.dot(down, z_axis)
    if np.linalg.norm(y_axis) < 1e-9:
        raise DataError("camera looks straight along the vertical axis")
    y_axis /= np.linalg.norm(y_axis)
    x_axis = np.cross(y_axis, z_axis)
    return Camera(
        rot=Rotation3(np.stack([x_axis, y_axis, z_axis])),
        center=center,
        focal=focal,
        principal=principal,
        id=camera_id,
    )


def relative_rotation(c1: Camera, c2: Camera) -> Rotation3:
    """R2 R1^T: takes camera-1 frame directions into the camera-2 frame"""
    return Rotation3(c2.rot.m @ c1.rot.m.T)


def project(cam: Camera, pose: Union[Pose3D, np.ndarray]) -> Pose2D:
    """
    Pinhole projection of a world-frame pose.

    Raises:
        NonPositiveDepth: a joint is within DEPTH_EPSILON_MM of the camera plane or behind it
    """
    return Pose2D(project_points(cam, _joints(pose)))


def project_points(cam: Camera, points: np.ndarray) -> np.ndarray:
    """Pixel coordinates (2 x n) of a 3 x n world point matrix"""
    cam_pts = cam.world_to_camera(points)
    depth = cam_pts[2]
    if np.any(depth <= DEPTH_EPSILON_MM):
        worst = int(np.argmin(depth))
        raise NonPositiveDepth(
            f"joint {worst} has depth {depth[worst]:.3f} mm in camera {cam.id}"
        )
    u = cam.focal[0] * cam_pts[0] / depth + cam.principal[0]
    v = cam.focal[1] * cam_pts[1] / depth + cam.principal[1]
    return np.stack([u, v])


def hip_center(points: np.ndarray) -> np.ndarray:
    """Subtract joint 0 from every joint (works on 3 x n or batch x 3 x n)"""
    points = np.asarray(points, dtype=np.float64)
    return points - points[..., :, :1]


def to_camera_hip_centered(cam: Camera, pose: Union[Pose3D, np.ndarray]) -> Pose3D:
    """Camera-frame pose with the hip moved to the origin"""
    cam_pts = cam.world_to_camera(_joints(pose))
    centered = hip_center(cam_pts)
    centered[:, 0] = 0.0
    return Pose3D(centered, PoseFrame.HIP_CENTERED)


def camera_to_world(cam: Camera, pose_cam: np.ndarray, root_world: np.ndarray) -> np.ndarray:
    """Invert to_camera_hip_centered given the hip position in world millimetres"""
    root_world = np.asarray(root_world, dtype=np.float64).reshape(3, 1)
    return cam.rot.m.T @ np.asarray(pose_cam, dtype=np.float64) + root_world


def procrustes_align(pred: Union[Pose3D, np.ndarray], gt: Union[Pose3D, np.ndarray],
                     with_scale: bool = False) -> np.ndarray:
    """
    Rigid (optionally similarity) alignment of `pred` onto `gt`.

    Args:
        pred: 3 x n predicted joints
        gt: 3 x n target joints
        with_scale: also fit a uniform scale factor

    Returns:
        The aligned 3 x n prediction minimising the Frobenius distance to `gt`

    Raises:
        DegenerateTarget: all target joints coincide
    """
    p = _joints(pred)
    g = _joints(gt)
    if p.shape != g.shape or p.ndim != 2 or p.shape[0] != 3:
        raise ShapeMismatch(f"cannot align {p.shape} onto {g.shape}")
    return procrustes_align_batch(p[None], g[None], with_scale)[0]


def procrustes_align_batch(preds: np.ndarray, gts: np.ndarray, with_scale: bool = False) -> np.ndarray:
    """Batched procrustes_align over batch x 3 x n arrays"""
    preds = np.asarray(preds, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    if preds.shape != gts.shape or preds.ndim != 3 or preds.shape[1] != 3:
        raise ShapeMismatch(f"cannot align {preds.shape} onto {gts.shape}")

    mu_p = preds.mean(axis=2, keepdims=True)
    mu_g = gts.mean(axis=2, keepdims=True)
    a = preds - mu_p
    b = gts - mu_g

    spread = np.abs(b).max(axis=(1, 2))
    scale_ref = np.maximum(1.0, np.abs(gts).max(axis=(1, 2)))
    degenerate = spread <= 1e-12 * scale_ref
    if np.any(degenerate):
        raise DegenerateTarget(f"target {int(np.argmax(degenerate))} has all joints coincident")

    h = a @ np.transpose(b, (0, 2, 1))
    u, s, vt = np.linalg.svd(h)
    v = np.transpose(vt, (0, 2, 1))
    ut = np.transpose(u, (0, 2, 1))
    d = np.sign(np.linalg.det(v @ ut))
    d[d == 0] = 1.0
    fix = np.tile(np.eye(3), (len(preds), 1, 1))
    fix[:, 2, 2] = d
    r = v @ fix @ ut

    if with_scale:
        norm_a = np.sum(a * a, axis=(1, 2))
        trace = s[:, 0] + s[:, 1] + d * s[:, 2]
        scale = np.where(norm_a > 0, trace / np.where(norm_a > 0, norm_a, 1.0), 1.0)
    else:
        scale = np.ones(len(preds))
    return scale[:, None, None] * (r @ a) + mu_g
