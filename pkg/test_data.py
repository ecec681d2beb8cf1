import dataclasses
import json

import numpy as np
import pytest

from lifter.compute import RngStream
from lifter.errors import (
    BadFps,
    ConfigInvalid,
    DiskError,
    EmptySplit,
    GeometryUnknown,
    InsufficientViews,
    LeakageError,
    ParseError,
    SchemaVersionMismatch,
    UnknownCamera,
)
from lifter.data.augmentation import (
    AugmentationConfig,
    angular_distance,
    augment_cameras,
    fit_noise_sigmas,
    fit_ring_center,
    original_cameras,
    plan_ring,
    simulate_detector_noise,
    wrap_deg,
)
from lifter.data.normalization import fit_norm_stats, flatten_poses, unflatten_poses
from lifter.data.protocols import Protocol, split_protocol, subsample_10fps
from lifter.data.records import decode_record, encode_record, read_dataset, write_dataset
from lifter.data.sampling import PairSampler
from lifter.data.synthetic import bone_length_table, generate_synthetic
from lifter.geometry import Pose2D, project_points, to_camera_hip_centered


def _cam(records, camera_id):
    return next(r.camera for r in records if r.camera.id == camera_id)


class TestRecords:
    def test_file_round_trip(self, tiny_dataset, tmp_path):
        path = tmp_path / "data.jsonl"
        write_dataset(tiny_dataset[:25], str(path))
        loaded = read_dataset(str(path))
        assert len(loaded) == 25
        assert all(a.same_as(b) for a, b in zip(tiny_dataset[:25], loaded))

    def test_invalid_json_reports_line(self):
        with pytest.raises(ParseError) as info:
            decode_record("{not json", line_no=3)
        assert info.value.line == 3

    def test_missing_fields(self, tiny_dataset):
        data = json.loads(encode_record(tiny_dataset[0]))
        del data["pose2d"]
        with pytest.raises(ParseError, match="pose2d"):
            decode_record(json.dumps(data))

    def test_unsupported_schema(self, tiny_dataset):
        data = json.loads(encode_record(tiny_dataset[0]))
        data["schema"] = 2
        with pytest.raises(SchemaVersionMismatch):
            decode_record(json.dumps(data))

    def test_malformed_camera(self, tiny_dataset):
        data = json.loads(encode_record(tiny_dataset[0]))
        data["camera"] = {"id": "cam0"}
        with pytest.raises(ParseError):
            decode_record(json.dumps(data), line_no=1)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DiskError):
            read_dataset(str(tmp_path / "absent.jsonl"))


class TestSynthetic:
    def test_size_and_order(self, tiny_dataset):
        assert len(tiny_dataset) == 7 * 2 * 6 * 5
        keys = [(r.subject, r.action, r.frame, r.camera.id) for r in tiny_dataset]
        assert keys[:2] == [(1, "Directions", 0, "cam0"), (1, "Directions", 0, "cam1")]
        assert {r.subject for r in tiny_dataset} == {1, 5, 6, 7, 8, 9, 11}

    def test_deterministic_per_seed(self, synth_config):
        a = generate_synthetic(synth_config(frames_per_action=2))
        b = generate_synthetic(synth_config(frames_per_action=2))
        c = generate_synthetic(synth_config(frames_per_action=2, seed=1))
        assert all(x.same_as(y) for x, y in zip(a, b))
        assert not np.array_equal(a[0].pose3d_cam.joints, c[0].pose3d_cam.joints)

    def test_bones_keep_configured_lengths(self, synth_config):
        cfg = synth_config(n_subjects=1, frames_per_action=3, scale_jitter=0.0)
        for rec in generate_synthetic(cfg)[::5]:
            for bone, length in bone_length_table(rec.world_pose()):
                assert length == pytest.approx(cfg.bone_lengths[bone], rel=1e-9)

    def test_detections_are_projections_of_ground_truth(self, tiny_dataset):
        for rec in tiny_dataset[::37]:
            assert np.allclose(project_points(rec.camera, rec.world_pose()), rec.pose2d_det.joints, atol=1e-9)

    def test_cameras_too_close_rejected(self, synth_config):
        with pytest.raises(ConfigInvalid):
            synth_config(camera_radius=1500.0)


class TestProtocols:
    def test_subsample_keeps_every_nth_frame(self, tiny_dataset):
        kept = subsample_10fps(tiny_dataset, 50)
        assert {r.frame for r in kept} == {0, 5}
        assert subsample_10fps(tiny_dataset, 10) == list(tiny_dataset)

    def test_subsample_rejects_low_rates(self, tiny_dataset):
        with pytest.raises(BadFps):
            subsample_10fps(tiny_dataset, 5)
        with pytest.raises(BadFps):
            subsample_10fps(tiny_dataset, float("nan"))

    def test_subject_split(self, tiny_dataset):
        train, test = split_protocol(tiny_dataset, 1)
        assert len(train) == 5 * 60 and len(test) == 2 * 60
        assert {r.subject for r in train}.isdisjoint({r.subject for r in test})

    def test_cross_camera_split_holds_out_camera(self, tiny_dataset):
        train, test = split_protocol(tiny_dataset, Protocol.CROSS_CAMERA, test_camera="cam0")
        assert len(train) == 5 * 12 * 4
        assert {r.camera.id for r in test} == {"cam0"}
        assert "cam0" not in {r.camera.id for r in train}

    def test_split_errors(self, tiny_dataset):
        with pytest.raises(UnknownCamera):
            split_protocol(tiny_dataset, 3, test_camera="cam9")
        with pytest.raises(ConfigInvalid):
            split_protocol(tiny_dataset, 1, train_subjects=[1, 9], test_subjects=[9])
        with pytest.raises(EmptySplit):
            split_protocol(tiny_dataset, 1, test_subjects=[42])
        with pytest.raises(ConfigInvalid):
            Protocol.parse(4)


class TestNormalization:
    def test_flatten_is_joint_major_and_invertible(self, gen):
        poses = gen.normal(size=(4, 3, 16))
        flat = flatten_poses(poses)
        assert flat[0, :3].tolist() == poses[0, :, 0].tolist()
        assert np.array_equal(unflatten_poses(flat, 3), poses)

    def test_training_inputs_are_standardized(self, tiny_dataset):
        train, _ = split_protocol(tiny_dataset, 1)
        stats = fit_norm_stats(train)
        x = stats.normalize_2d(flatten_poses(np.stack([r.pose2d_det.joints for r in train])))
        assert np.allclose(x.mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(x.std(axis=0), 1.0, atol=1e-9)

    def test_stats_from_another_split_are_rejected(self, tiny_dataset):
        train, test = split_protocol(tiny_dataset, 1)
        with pytest.raises(LeakageError):
            PairSampler(train, fit_norm_stats(test))


class TestAugmentation:
    def test_angles(self):
        assert angular_distance(350.0, 10.0) == pytest.approx(20.0)
        assert angular_distance(-90.0, 90.0) == pytest.approx(180.0)
        assert wrap_deg(190.0) == pytest.approx(-170.0)
        assert wrap_deg(-180.0) == pytest.approx(180.0)

    def test_ring_center_of_synthetic_rig(self, tiny_dataset):
        center = fit_ring_center(original_cameras(tiny_dataset))
        assert np.allclose(center, (0.0, 0.0), atol=1e-6)
        with pytest.raises(GeometryUnknown):
            fit_ring_center(original_cameras(tiny_dataset)[:2])

    def test_cross_camera_augmentation(self, tiny_dataset):
        train, _ = split_protocol(tiny_dataset, 3, test_camera="cam0")
        held_out = _cam(tiny_dataset, "cam0")
        augmented = augment_cameras(train, AugmentationConfig(step_deg=60.0), [held_out])
        synthetic = [r for r in augmented if r.synthetic_cam]
        cams = {r.camera.id: r.camera for r in synthetic}
        assert len(cams) == 3
        assert len(synthetic) == 3 * 60
        assert augmented[:len(train)] == train
        for cam in cams.values():
            assert angular_distance(cam.azimuth_deg(), held_out.azimuth_deg()) > 60.0
        for rec in synthetic[::17]:
            world = rec.world_pose()
            assert np.allclose(rec.pose2d_det.joints, project_points(rec.camera, world), atol=1e-9)
            assert np.allclose(rec.pose3d_cam.joints, to_camera_hip_centered(rec.camera, world).joints, atol=1e-9)

    def test_disabled_augmentation_is_identity(self, tiny_dataset):
        assert augment_cameras(tiny_dataset, AugmentationConfig(enabled=False), ["cam0"]) == list(tiny_dataset)

    def test_unknown_test_camera_id(self, tiny_dataset):
        with pytest.raises(UnknownCamera):
            augment_cameras(tiny_dataset, AugmentationConfig(), ["cam7"])

    def test_minimum_test_distance_places_two_cameras_at_distance(self, tiny_dataset):
        originals = [c for c in original_cameras(tiny_dataset) if c.id != "cam0"]
        held_out = _cam(tiny_dataset, "cam0")
        plan = plan_ring(originals, AugmentationConfig(step_deg=60.0, min_test_distance_deg=30.0), [held_out])
        test_az = held_out.azimuth_deg(plan.ring_center)
        dists = sorted(angular_distance(a, test_az) for a in plan.azimuths_deg)
        assert dists[0] == pytest.approx(30.0) and dists[1] == pytest.approx(30.0)
        assert dists[2] > 30.0
        assert plan.excluded_originals == []

    def test_minimum_test_distance_excludes_close_originals(self, tiny_dataset):
        originals = [c for c in original_cameras(tiny_dataset) if c.id != "cam0"]
        held_out = _cam(tiny_dataset, "cam0")
        plan = plan_ring(originals, AugmentationConfig(step_deg=60.0, min_test_distance_deg=80.0), [held_out])
        assert sorted(plan.excluded_originals) == ["cam1", "cam4"]

    def test_noise_disabled_is_identity(self, tiny_dataset):
        p2d = tiny_dataset[0].pose2d_det
        assert simulate_detector_noise(p2d, AugmentationConfig(noise_enabled=False), RngStream(0)) is p2d

    def test_noise_has_configured_sigma(self):
        p2d = Pose2D(np.zeros((2, 16)))
        cfg = AugmentationConfig(noise_enabled=True, noise_sigma_px=5.0)
        stream = RngStream(9)
        draws = np.stack([simulate_detector_noise(p2d, cfg, stream).joints for _ in range(500)])
        assert draws.std() == pytest.approx(5.0, rel=0.05)

    def test_fitted_noise_recovers_generator_sigma(self, synth_config):
        records = generate_synthetic(synth_config(noise_sigma_px=3.0))
        assert np.allclose(fit_noise_sigmas(records), 3.0, rtol=0.15)

    def test_fitted_noise_needs_world_geometry(self, tiny_dataset):
        blind = [dataclasses.replace(r, root_world=None) for r in tiny_dataset[:5]]
        with pytest.raises(GeometryUnknown):
            fit_noise_sigmas(blind)


class TestSampling:
    def test_half_of_batch_is_same_pose(self, tiny_dataset):
        train, _ = split_protocol(tiny_dataset, 1)
        sampler = PairSampler(train, fit_norm_stats(train))
        batch = sampler.sample(9, RngStream(5), index=2)
        assert len(batch) == 9 and batch.same_pose_count == 4
        for a, b in zip(batch.indices_a[:4], batch.indices_b[:4]):
            assert train[a].key == train[b].key and train[a].camera.id != train[b].camera.id
        assert np.all(batch.siamese_targets.pose_dists[:4] < 1e-9)

    def test_same_stream_same_batch(self, tiny_dataset):
        train, _ = split_protocol(tiny_dataset, 1)
        sampler = PairSampler(train, fit_norm_stats(train))
        a = sampler.sample(16, RngStream(5), index=3)
        b = sampler.sample(16, RngStream(5), index=3)
        c = sampler.sample(16, RngStream(5), index=4)
        assert np.array_equal(a.indices_a, b.indices_a) and np.array_equal(a.indices_b, b.indices_b)
        assert not np.array_equal(a.indices_a, c.indices_a)

    def test_same_pose_pairs_can_be_disabled(self, tiny_dataset):
        train, _ = split_protocol(tiny_dataset, 1)
        batch = PairSampler(train, fit_norm_stats(train)).sample(8, RngStream(0), same_pose_enabled=False)
        assert batch.same_pose_count == 0

    def test_single_view_data_has_no_same_pose_pairs(self, tiny_dataset):
        single = [r for r in tiny_dataset if r.camera.id == "cam0"]
        sampler = PairSampler(single, fit_norm_stats(single))
        with pytest.raises(InsufficientViews):
            sampler.sample(8, RngStream(0))

    def test_empty_split(self, tiny_dataset):
        with pytest.raises(EmptySplit):
            PairSampler([], fit_norm_stats(tiny_dataset[:5]))
