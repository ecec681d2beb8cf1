import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lifter.errors import DataError, DegenerateTarget, NonPositiveDepth, ShapeMismatch
from lifter.geometry import (
    Camera,
    Pose3D,
    PoseFrame,
    Rotation3,
    camera_to_world,
    look_at_camera,
    procrustes_align,
    procrustes_align_batch,
    project,
    project_points,
    random_rotation,
    relative_rotation,
    rot_vertical,
    to_camera_hip_centered,
)

angles = st.floats(min_value=-720.0, max_value=720.0, allow_nan=False, allow_infinity=False)


def _pose(gen, n=16):
    return gen.normal(scale=300.0, size=(3, n)) + np.array([[0.0], [900.0], [0.0]])


def _homogeneous_projection(cam, points):
    """K [R | -R c] X, divided by the third row"""
    k = np.array([[cam.focal[0], 0.0, cam.principal[0]],
                  [0.0, cam.focal[1], cam.principal[1]],
                  [0.0, 0.0, 1.0]])
    ext = np.hstack([cam.rot.m, (-cam.rot.m @ cam.center)[:, None]])
    homo = np.vstack([points, np.ones(points.shape[1])])
    uvw = k @ ext @ homo
    return uvw[:2] / uvw[2]


class TestRotations:
    @given(angles, angles)
    def test_vertical_rotations_compose_by_adding_angles(self, a, b):
        assert (rot_vertical(a) @ rot_vertical(b)).allclose(rot_vertical(a + b), atol=1e-12)

    @given(angles)
    def test_inverse_is_negated_angle(self, a):
        assert rot_vertical(a).inverse().allclose(rot_vertical(-a), atol=1e-12)

    def test_group_laws_on_random_rotations(self, gen):
        for _ in range(50):
            a, b, c = (random_rotation(gen) for _ in range(3))
            assert ((a @ b) @ c).allclose(a @ (b @ c), atol=1e-12)
            assert (a @ a.inverse()).allclose(Rotation3.identity(), atol=1e-12)
            assert abs(np.linalg.det(a.m) - 1.0) < 1e-12

    def test_rejects_reflections_and_bad_shapes(self):
        with pytest.raises(DataError):
            Rotation3(np.diag([1.0, 1.0, -1.0]))
        with pytest.raises(DataError):
            Rotation3(np.eye(3) * 2.0)
        with pytest.raises(ShapeMismatch):
            Rotation3(np.eye(2))

    def test_vertical_axis_is_fixed(self):
        up = np.array([0.0, 1.0, 0.0])
        assert np.allclose(rot_vertical(37.0).apply(up), up, atol=1e-15)


class TestCameras:
    def test_projection_matches_homogeneous_pipeline(self, gen):
        for k in range(20):
            cam = look_at_camera((4000.0 * np.sin(k), 1500.0, 4000.0 * np.cos(k)), (0.0, 1000.0, 0.0))
            pts = _pose(gen)
            assert np.max(np.abs(project_points(cam, pts) - _homogeneous_projection(cam, pts))) < 1e-9

    def test_target_projects_to_principal_point(self):
        cam = look_at_camera((0.0, 1600.0, 4500.0), (0.0, 1000.0, 0.0))
        uv = project_points(cam, np.array([[0.0], [1000.0], [0.0]]))
        assert np.allclose(uv[:, 0], cam.principal, atol=1e-9)

    def test_image_y_points_down(self):
        cam = look_at_camera((0.0, 1000.0, 4500.0), (0.0, 1000.0, 0.0))
        uv = project_points(cam, np.array([[0.0, 0.0], [1500.0, 500.0], [0.0, 0.0]]))
        assert uv[1, 0] < uv[1, 1]

    def test_point_behind_camera_raises(self):
        cam = look_at_camera((0.0, 1000.0, 4500.0), (0.0, 1000.0, 0.0))
        with pytest.raises(NonPositiveDepth):
            project(cam, np.array([[0.0], [1000.0], [9000.0]]))

    def test_azimuth_of_ring_camera(self):
        cam = look_at_camera((4500.0, 1600.0, 0.0), (0.0, 1000.0, 0.0))
        assert cam.azimuth_deg() == pytest.approx(90.0)

    @given(st.floats(min_value=-180.0, max_value=180.0, allow_nan=False))
    @settings(max_examples=30)
    def test_rotated_camera_sees_counter_rotated_scene(self, angle):
        gen = np.random.default_rng(0)
        center = (250.0, -400.0)
        cam = look_at_camera((center[0], 1600.0, center[1] + 4500.0), (center[0], 1000.0, center[1]))
        moved = cam.rotated_about_vertical(angle, center)
        pivot = np.array([[center[0]], [0.0], [center[1]]])
        pts = _pose(gen, 5) + pivot
        counter = rot_vertical(-angle).m @ (pts - pivot) + pivot
        assert np.allclose(project_points(moved, pts), project_points(cam, counter), atol=1e-7)

    def test_relative_rotation_maps_camera_frames(self, gen):
        c1 = look_at_camera((0.0, 1600.0, 4500.0), (0.0, 1000.0, 0.0))
        c2 = look_at_camera((4500.0, 1500.0, 0.0), (0.0, 1000.0, 0.0))
        world = _pose(gen)
        p1 = to_camera_hip_centered(c1, world).joints
        p2 = to_camera_hip_centered(c2, world).joints
        assert np.allclose(relative_rotation(c1, c2).apply(p1), p2, atol=1e-9)

    def test_camera_dict_round_trip(self):
        cam = look_at_camera((1.0, 1600.0, 4500.0), (0.0, 1000.0, 0.0), camera_id="cam3")
        assert Camera.from_dict(cam.to_dict()).same_as(cam)


class TestPoses:
    def test_hip_centered_pose_inverts_to_world(self, gen):
        cam = look_at_camera((3000.0, 1600.0, 3000.0), (0.0, 1000.0, 0.0))
        world = _pose(gen)
        centered = to_camera_hip_centered(cam, world)
        assert centered.frame is PoseFrame.HIP_CENTERED
        assert np.all(centered.joints[:, 0] == 0.0)
        assert np.allclose(camera_to_world(cam, centered.joints, world[:, 0]), world, atol=1e-9)

    def test_hip_centered_requires_hip_at_origin(self):
        with pytest.raises(DataError):
            Pose3D(np.ones((3, 4)), PoseFrame.HIP_CENTERED)


class TestProcrustes:
    def test_recovers_rigid_transforms_exactly(self, gen):
        for _ in range(100):
            gt = _pose(gen)
            r = random_rotation(gen)
            pred = r.apply(gt) + gen.normal(scale=500.0, size=(3, 1))
            assert np.max(np.abs(procrustes_align(pred, gt) - gt)) < 1e-9

    def test_recovers_similarity_with_scale(self, gen):
        gt = _pose(gen)
        pred = 1.7 * random_rotation(gen).apply(gt) + 40.0
        assert np.max(np.abs(procrustes_align(pred, gt, with_scale=True) - gt)) < 1e-9

    def test_never_introduces_reflections(self, gen):
        gt = _pose(gen)
        mirrored = gt * np.array([[-1.0], [1.0], [1.0]])
        aligned = procrustes_align(mirrored, gt)
        a = aligned - aligned.mean(axis=1, keepdims=True)
        m = mirrored - mirrored.mean(axis=1, keepdims=True)
        r, *_ = np.linalg.lstsq(m.T, a.T, rcond=None)
        assert np.linalg.det(r.T) > 0

    def test_batch_matches_single(self, gen):
        gts = np.stack([_pose(gen) for _ in range(4)])
        preds = gts + gen.normal(scale=30.0, size=gts.shape)
        batch = procrustes_align_batch(preds, gts)
        for i in range(4):
            assert np.allclose(batch[i], procrustes_align(preds[i], gts[i]), atol=1e-10)

    def test_degenerate_target(self):
        with pytest.raises(DegenerateTarget):
            procrustes_align(np.random.default_rng(0).normal(size=(3, 5)), np.ones((3, 5)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            procrustes_align(np.zeros((3, 5)), np.zeros((3, 4)))
