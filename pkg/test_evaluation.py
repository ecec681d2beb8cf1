import dataclasses

import numpy as np
import pytest

from lifter.data.normalization import fit_norm_stats
from lifter.data.protocols import split_protocol
from lifter.data.sampling import PairSampler
from lifter.errors import EmptySplit, MissingGroundTruth, ShapeMismatch, UnknownCamera
from lifter.evaluation import (
    EvalReport,
    aug_distance_sweep,
    camera_azimuths,
    distance_split,
    embedding_rotation_experiment,
    equivariance_error,
    frame_errors,
    mpjpe,
    mpjpe_procrustes,
    per_frame_mpjpe,
    run_protocol,
    sweep_medians,
)
from lifter.geometry import Pose3D, random_rotation
from lifter.model import LiftingModel, ModelConfig

SMALL = ModelConfig(hidden=16, m=4, dropout=0.1)


@pytest.fixture(scope="module")
def fitted(tiny_dataset):
    """Untrained model with statistics fitted on the protocol 1 training side"""
    train, test = split_protocol(tiny_dataset, 1)
    stats = fit_norm_stats(train)
    return LiftingModel(SMALL, seed=0, stats=stats), train, test


class TestMetrics:
    def test_three_four_five(self, gen):
        gt = gen.normal(size=(2, 3, 16))
        pred = gt + np.array([3.0, 4.0, 0.0])[None, :, None]
        assert mpjpe(pred, gt) == pytest.approx(5.0)

    def test_matches_joint_loop(self, gen):
        pred, gt = gen.normal(size=(5, 3, 16)), gen.normal(size=(5, 3, 16))
        expected = np.mean([[np.linalg.norm(pred[b, :, j] - gt[b, :, j]) for j in range(16)] for b in range(5)])
        assert mpjpe(pred, gt) == pytest.approx(expected, rel=1e-12)

    def test_accepts_pose_objects(self, gen):
        gt = gen.normal(size=(3, 16))
        assert mpjpe([Pose3D(gt)], gt[None]) == 0.0

    def test_alignment_never_increases_error(self, gen):
        for _ in range(20):
            gt = gen.normal(scale=300.0, size=(4, 3, 16))
            pred = gt + gen.normal(scale=50.0, size=gt.shape)
            assert mpjpe_procrustes(pred, gt) <= mpjpe(pred, gt) + 1e-9
            assert mpjpe_procrustes(pred, gt, with_scale=True) <= mpjpe_procrustes(pred, gt) + 1e-9

    def test_alignment_removes_rigid_motion(self, gen):
        gt = gen.normal(scale=300.0, size=(3, 16))
        pred = random_rotation(gen).apply(gt) + 100.0
        assert mpjpe_procrustes(pred[None], gt[None]) < 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            per_frame_mpjpe(np.zeros((2, 3, 16)), np.zeros((2, 3, 15)))


class TestReport:
    def test_average_is_frame_weighted(self):
        report = EvalReport.from_errors(1, ["walk", "walk", "sit"], np.array([1.0, 2.0, 6.0]))
        assert report.per_action == {"sit": 6.0, "walk": 1.5}
        assert report.average == pytest.approx(3.0)
        assert report.recomputed_average() == pytest.approx(report.average)
        assert list(report.table().columns) == ["sit", "walk", "Average"]

    def test_dict_round_trip(self):
        report = EvalReport.from_errors(2, ["a", "b"], np.array([3.0, 4.0]), seed=7, config_hash="abc")
        assert EvalReport.from_dict(report.to_dict()) == report


class TestProtocolHarness:
    def test_aligned_protocol_scores_at_most_plain(self, fitted, tiny_dataset):
        model = fitted[0]
        plain = run_protocol(model, tiny_dataset, 1)
        aligned = run_protocol(model, tiny_dataset, 2)
        assert plain.n_frames == aligned.n_frames == 120
        assert aligned.average <= plain.average
        assert set(plain.per_action) == {"Directions", "Discussion"}

    def test_cross_camera_protocol_uses_held_out_camera_only(self, fitted, tiny_dataset):
        report = run_protocol(fitted[0], tiny_dataset, 3, test_camera="cam0")
        assert report.n_frames == 2 * 12
        assert report.test_camera == "cam0"

    def test_requires_ground_truth(self, fitted):
        model, _, test = fitted
        blind = [dataclasses.replace(test[0], pose3d_cam=None)]
        with pytest.raises(MissingGroundTruth):
            frame_errors(model, blind)


class TestExperiments:
    def test_zero_angle_is_plain_prediction(self, fitted):
        model, _, test = fitted
        table = embedding_rotation_experiment(model, test[:30], angles_deg=[0.0, 90.0])
        assert table["angle_deg"].tolist() == [0.0, 90.0]
        assert table["mpjpe_mm"].iloc[0] == pytest.approx(float(np.mean(frame_errors(model, test[:30]))))
        assert table["median_ratio_to_zero"].iloc[0] == pytest.approx(1.0)

    def test_identical_pairs_have_zero_equivariance_residual(self, fitted):
        model, train, _ = fitted
        sampler = PairSampler(train, model.stats)
        idx = np.arange(10)
        stats = equivariance_error(model, [sampler.batch_from_indices(idx, idx)])
        assert stats.n_pairs == 10
        assert stats.mean == pytest.approx(0.0, abs=1e-12)

    def test_distance_split_keeps_far_cameras(self, tiny_dataset):
        azimuths = camera_azimuths(tiny_dataset)
        train, test = distance_split(tiny_dataset, 100.0, "cam0", azimuths)
        assert {r.camera.id for r in train} == {"cam2", "cam3"}
        assert {r.camera.id for r in test} == {"cam0"}
        everything, _ = distance_split(tiny_dataset, 0.0, "cam0", azimuths)
        assert len(everything) == 5 * 12 * 5
        with pytest.raises(UnknownCamera):
            distance_split(tiny_dataset, 30.0, "cam8", azimuths)
        with pytest.raises(EmptySplit):
            distance_split(tiny_dataset, 170.0, "cam0", azimuths)

    def test_sweep_runs_every_combination(self, tiny_dataset):
        calls = []

        def train_fn(train, test, variant, seed, distance):
            calls.append((distance, variant, seed))
            stats = fit_norm_stats(train)
            return LiftingModel(SMALL, seed=seed, stats=stats), stats

        table = aug_distance_sweep(train_fn, tiny_dataset, distances_deg=[30.0, 100.0], seeds=[0, 1])
        assert len(table) == 2 * 2 * 2
        assert calls[0] == (30.0, "siamese", 0)
        medians = sweep_medians(table)
        assert list(medians.index) == [30.0, 100.0]
        assert set(medians.columns) == {"siamese", "baseline"}
        assert np.all(np.isfinite(table["mpjpe_mm"]))
