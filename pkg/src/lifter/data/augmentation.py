"""
Synthetic-camera augmentation and detector-noise simulation.

New viewpoints are copies of a reference camera rotated about the vertical
axis through the camera-ring centre. Each frame's world pose is recovered
from its camera-frame ground truth and root position, then re-expressed
and re-projected for every synthetic camera.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..compute import RngStream
from ..errors import ConfigInvalid, GeometryUnknown, UnknownCamera
from ..geometry import Camera, Pose2D, project, project_points, to_camera_hip_centered
from ..types import FrameKey, N_JOINTS
from .records import FrameRecord

logger = logging.getLogger(__name__)

COINCIDENT_TOL_DEG = 0.5
SYNTHETIC_PREFIX = "syn@"


@dataclass
class AugmentationConfig:
    enabled: bool = True
    step_deg: float = 15.0
    drop_nearest: int = 2
    noise_sigma_px: Union[float, List[float]] = 5.0
    noise_enabled: bool = False
    ring_center: Optional[Tuple[float, float]] = None
    min_test_distance_deg: Optional[float] = None
    coincident_tol_deg: float = COINCIDENT_TOL_DEG

    def __post_init__(self):
        if not 0.0 < self.step_deg <= 360.0:
            raise ConfigInvalid(f"augmentation step must be in (0, 360], got {self.step_deg}")
        if self.drop_nearest < 0:
            raise ConfigInvalid(f"drop_nearest must be >= 0, got {self.drop_nearest}")
        remainder = math.fmod(360.0, self.step_deg)
        if min(remainder, self.step_deg - remainder) > 1e-9:
            logger.warning(f"Augmentation step {self.step_deg} deg does not divide 360; the ring is uneven")
        sigma = np.asarray(self.noise_sigma_px, dtype=np.float64)
        if sigma.ndim > 1 or (sigma.ndim == 1 and sigma.shape[0] != N_JOINTS):
            raise ConfigInvalid(f"noise sigma must be a scalar or {N_JOINTS} per-joint values")
        if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
            raise ConfigInvalid("noise sigma must be finite and non-negative")
        if self.min_test_distance_deg is not None and not 0.0 <= self.min_test_distance_deg <= 180.0:
            raise ConfigInvalid(f"min_test_distance_deg must be in [0, 180], got {self.min_test_distance_deg}")
        if self.ring_center is not None:
            self.ring_center = tuple(float(v) for v in self.ring_center)
            if len(self.ring_center) != 2:
                raise ConfigInvalid("ring_center is an (x, z) pair in world millimetres")

    @property
    def sigma(self) -> np.ndarray:
        return np.asarray(self.noise_sigma_px, dtype=np.float64)

    @classmethod
    def from_dict(cls, data: Dict) -> "AugmentationConfig":
        return cls(**data)


def angular_distance(a: float, b: float) -> float:
    """Absolute azimuth difference on the ring, in [0, 180]"""
    return abs((a - b + 180.0) % 360.0 - 180.0)


def wrap_deg(angle: float) -> float:
    """Map an angle to (-180, 180]"""
    wrapped = -((-angle + 180.0) % 360.0 - 180.0)
    return wrapped + 0.0


def simulate_detector_noise(p2d: Pose2D, cfg: AugmentationConfig,
                            rng: Union[RngStream, np.random.Generator]) -> Pose2D:
    """Per-joint isotropic Gaussian pixel noise; identity when noise is disabled or sigma is zero"""
    sigma = cfg.sigma
    if not cfg.noise_enabled or not np.any(sigma > 0):
        return p2d
    gen = rng.next() if isinstance(rng, RngStream) else rng
    joints = p2d.joints
    scale = sigma if sigma.ndim == 0 else sigma[None, :]
    return Pose2D(joints + gen.standard_normal(joints.shape) * scale)


def fit_noise_sigmas(records: Sequence[FrameRecord]) -> np.ndarray:
    """
    Per-joint sigma (px) of the residual between stored detections and the
    reprojected ground truth, pooled over both image axes.

    Raises:
        GeometryUnknown: no record carries a recoverable world pose
    """
    sq_sum = None
    count = 0
    for rec in records:
        world = rec.world_pose()
        if world is None:
            continue
        residual = rec.pose2d_det.joints - project_points(rec.camera, world)
        sq = np.sum(residual * residual, axis=0)
        sq_sum = sq if sq_sum is None else sq_sum + sq
        count += 1
    if count == 0:
        raise GeometryUnknown("no record has ground truth and a root position to reproject")
    sigmas = np.sqrt(sq_sum / (2.0 * count))
    logger.info(f"Fitted detector noise on {count} records: mean sigma {sigmas.mean():.3f} px")
    return sigmas


def original_cameras(records: Sequence[FrameRecord]) -> List[Camera]:
    """Distinct non-synthetic cameras, sorted by id"""
    cams: Dict[str, Camera] = {}
    for rec in records:
        if not rec.synthetic_cam and rec.camera.id not in cams:
            cams[rec.camera.id] = rec.camera
    return [cams[k] for k in sorted(cams)]


def fit_ring_center(cameras: Sequence[Camera]) -> Tuple[float, float]:
    """
    Algebraic circle fit through the camera centres projected on the ground plane.

    Raises:
        GeometryUnknown: fewer than three cameras, or collinear ones
    """
    if len(cameras) < 3:
        raise GeometryUnknown(f"need at least 3 cameras to fit the ring, got {len(cameras)}")
    xz = np.array([[c.center[0], c.center[2]] for c in cameras])
    a = np.column_stack([xz[:, 0], xz[:, 1], np.ones(len(xz))])
    b = -(xz[:, 0] ** 2 + xz[:, 1] ** 2)
    sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 3:
        raise GeometryUnknown("camera centres are collinear; the ring cannot be recovered")
    return (float(-sol[0] / 2.0), float(-sol[1] / 2.0))


def resolve_cameras(cameras: Sequence[Camera], wanted: Sequence[Union[Camera, str]]) -> List[Camera]:
    """Cameras by object or id; ids must name one of `cameras`"""
    by_id = {c.id: c for c in cameras}
    resolved = []
    for item in wanted:
        if isinstance(item, Camera):
            resolved.append(item)
        elif item in by_id:
            resolved.append(by_id[item])
        else:
            raise UnknownCamera(f"camera {item!r} is not among {sorted(by_id)}")
    return resolved


@dataclass
class RingPlan:
    """Where synthetic cameras go, relative to the reference camera"""

    reference: Camera
    ring_center: Tuple[float, float]
    offsets_deg: List[float] = field(default_factory=list)
    azimuths_deg: List[float] = field(default_factory=list)
    excluded_originals: List[str] = field(default_factory=list)


def plan_ring(originals: Sequence[Camera], cfg: AugmentationConfig,
              test_cameras: Sequence[Camera]) -> RingPlan:
    """
    Choose synthetic-camera azimuths: one every step_deg from the reference
    camera, minus those coincident with an original or test camera, minus
    the drop_nearest closest to each test camera. With min_test_distance_deg
    set, cameras closer than that to a test camera are removed and two are
    added at exactly that distance.

    Test cameras need not be among the originals (a held-out camera never
    appears in training records) but take part in the ring fit.
    """
    if not originals:
        raise GeometryUnknown("no original cameras to build a ring from")
    test_ids = [c.id for c in test_cameras]
    known = {c.id: c for c in originals}
    known.update({c.id: c for c in test_cameras})
    center = cfg.ring_center if cfg.ring_center is not None else fit_ring_center([known[k] for k in sorted(known)])
    reference = originals[0]
    ref_az = reference.azimuth_deg(center)
    original_az = [c.azimuth_deg(center) for c in originals]
    test_az = [c.azimuth_deg(center) for c in test_cameras]
    tol = cfg.coincident_tol_deg

    n_steps = int(math.floor(360.0 / cfg.step_deg - 1e-9)) + 1
    offsets = [k * cfg.step_deg for k in range(n_steps)]
    offsets = [o for o in offsets
               if all(angular_distance(ref_az + o, a) > tol for a in original_az + test_az)]

    for t_az in test_az:
        ranked = sorted(offsets, key=lambda o: (angular_distance(ref_az + o, t_az), o))
        dropped = set(ranked[:cfg.drop_nearest])
        offsets = [o for o in offsets if o not in dropped]

    excluded: List[str] = []
    d = cfg.min_test_distance_deg
    if d is not None and d > 0:
        offsets = [o for o in offsets
                   if all(angular_distance(ref_az + o, t) >= d - 1e-9 for t in test_az)]
        excluded = [c.id for c, a in zip(originals, original_az)
                    if c.id not in test_ids and any(angular_distance(a, t) < d - 1e-9 for t in test_az)]
        kept_az = [a for c, a in zip(originals, original_az) if c.id not in excluded]
        for t_az in test_az:
            for sign in (1.0, -1.0):
                o = wrap_deg(t_az + sign * d - ref_az) % 360.0
                taken = [ref_az + x for x in offsets] + kept_az
                if all(angular_distance(ref_az + o, a) > tol for a in taken):
                    offsets.append(o)

    offsets = sorted(offsets)
    if not offsets:
        logger.warning("Augmentation produced no distinct synthetic cameras")
    return RingPlan(
        reference=reference,
        ring_center=center,
        offsets_deg=offsets,
        azimuths_deg=[wrap_deg(ref_az + o) for o in offsets],
        excluded_originals=excluded,
    )


def synthetic_cameras(plan: RingPlan) -> List[Camera]:
    return [
        plan.reference.rotated_about_vertical(o, plan.ring_center, new_id=f"{SYNTHETIC_PREFIX}{az:.1f}")
        for o, az in zip(plan.offsets_deg, plan.azimuths_deg)
    ]


def augment_cameras(records: Sequence[FrameRecord], cfg: AugmentationConfig,
                    test_cameras: Sequence[Union[Camera, str]],
                    rng: Optional[RngStream] = None) -> List[FrameRecord]:
    """
    Original records (minus those excluded by min_test_distance_deg) followed
    by one record per (frame, synthetic camera).

    Test cameras are Camera objects or ids of cameras present in the records.

    Raises:
        GeometryUnknown: the ring cannot be inferred or a frame has no
            recoverable world pose
        UnknownCamera: a test camera id is not among the record cameras
    """
    records = list(records)
    if not cfg.enabled or not records:
        return records
    originals = original_cameras(records)
    plan = plan_ring(originals, cfg, resolve_cameras(originals, test_cameras))
    cams = synthetic_cameras(plan)
    excluded = set(plan.excluded_originals)
    kept = [r for r in records if r.camera.id not in excluded]

    worlds: Dict[FrameKey, Tuple[FrameRecord, np.ndarray]] = {}
    for rec in records:
        if rec.key in worlds or rec.synthetic_cam:
            continue
        world = rec.world_pose()
        if world is not None:
            worlds[rec.key] = (rec, world)
    missing = {r.key for r in records} - set(worlds)
    if missing:
        raise GeometryUnknown(
            f"{len(missing)} frames have no root position or ground truth, e.g. {sorted(missing)[0]}"
        )

    rng = rng or RngStream(0)
    out = kept
    for cam_index, cam in enumerate(cams):
        cam_rng = rng.substream(cam_index)
        for rec, world in worlds.values():
            p2d = project(cam, world)
            if cfg.noise_enabled:
                p2d = simulate_detector_noise(p2d, cfg, cam_rng)
            out.append(FrameRecord(
                subject=rec.subject,
                action=rec.action,
                frame=rec.frame,
                camera=cam,
                pose2d_det=p2d,
                pose3d_cam=to_camera_hip_centered(cam, world),
                synthetic_cam=True,
                root_world=rec.root_world,
            ))
    logger.info(
        f"Augmented {len(kept)} records with {len(cams)} synthetic cameras "
        f"({len(out) - len(kept)} new records, {len(excluded)} original cameras excluded)"
    )
    return out
