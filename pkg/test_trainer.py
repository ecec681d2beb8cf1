import math
import os
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

import lifter.trainer as trainer_module
from lifter.checkpoint import load_checkpoint
from lifter.data.augmentation import angular_distance
from lifter.errors import ConfigInvalid, NonFiniteLoss, SchemaMismatch
from lifter.evaluation import aug_distance_sweep, camera_azimuths, distance_split
from lifter.trainer import (
    BEST_CHECKPOINT,
    FINAL_CHECKPOINT,
    LOG_COLUMNS,
    LOG_FILE,
    TrainLog,
    Trainer,
    augment_training_side,
    prepare_data,
    resume,
    run_variants,
    summarize_variants,
    sweep_train_fn,
    train,
)


def _log_row(epoch, total=1.0):
    return dict(epoch=epoch, l2_a=0.5, l2_b=0.25, siamese=0.125, total=total, test_mpjpe=80.0,
                lr=0.001, wall_time=1.5)


class TestTrainConfig:
    def test_rejects_invalid_values(self, train_config):
        with pytest.raises(ConfigInvalid):
            train_config(batch_size=1)
        with pytest.raises(ConfigInvalid):
            train_config(dropout=1.0)
        with pytest.raises(ConfigInvalid):
            train_config(protocol=5)
        with pytest.raises(ConfigInvalid):
            train_config(lambda1=-0.1)

    def test_variant_hash_ignores_seed_and_output(self, train_config):
        cfg = train_config()
        assert cfg.with_overrides({"seed": 9, "out_dir": "/tmp/x"}).variant_hash() == cfg.variant_hash()
        assert cfg.with_overrides({"siamese_enabled": False}).variant_hash() != cfg.variant_hash()

    def test_augmentation_overrides_are_merged(self, train_config):
        cfg = train_config().with_overrides({"augmentation": {"enabled": False}})
        assert cfg.augmentation.enabled is False
        assert cfg.augmentation.step_deg == 60.0

    def test_disabled_siamese_zeroes_weight_and_same_pose_pairs(self, train_config):
        cfg = train_config(siamese_enabled=False, lambda2=2.0)
        assert cfg.effective_lambda2 == 0.0
        assert cfg.uses_same_pose is False


class TestTrainLog:
    def test_rows_must_advance(self):
        log = TrainLog()
        log.append(**_log_row(0))
        with pytest.raises(ValueError):
            log.append(**_log_row(0))

    def test_non_finite_values_rejected(self):
        with pytest.raises(NonFiniteLoss):
            TrainLog().append(**_log_row(0, total=float("nan")))

    def test_csv_has_provenance_and_no_timing_by_default(self, tmp_path):
        log = TrainLog(config_hash="abc123", seed=4)
        log.append(**_log_row(0))
        log.append(**_log_row(1, total=0.75))
        text = log.to_csv()
        lines = text.splitlines()
        assert lines[0] == "# config_hash=abc123 seed=4"
        assert lines[1] == ",".join(c for c in LOG_COLUMNS if c != "wall_time")
        path = str(tmp_path / "log.csv")
        log.save_csv(path)
        loaded = TrainLog.read_csv(path)
        assert loaded.config_hash == "abc123" and loaded.seed == 4
        assert loaded.frame()["total"].tolist() == [1.0, 0.75]

    def test_matrix_round_trip_zeroes_wall_time(self):
        log = TrainLog()
        log.append(**_log_row(0))
        matrix = log.to_matrix()
        assert matrix.shape == (1, len(LOG_COLUMNS))
        assert matrix[0, LOG_COLUMNS.index("wall_time")] == 0.0
        assert TrainLog.from_matrix(matrix).rows[0]["total"] == 1.0


class TestPrepareData:
    def test_cross_camera_split_is_augmented_and_normalized(self, train_config, tiny_dataset):
        data = prepare_data(train_config(), tiny_dataset)
        assert len(data.test) == 2 * 12
        synthetic = [r for r in data.train if r.synthetic_cam]
        assert len(data.train) == 5 * 12 * 4 + len(synthetic)
        assert len({r.camera.id for r in synthetic}) == 3
        data.stats.ensure_fitted_on(data.train)

    def test_subject_protocols_are_not_augmented(self, train_config, tiny_dataset):
        for protocol in (1, 2):
            data = prepare_data(train_config(protocol=protocol), tiny_dataset)
            assert not any(r.synthetic_cam for r in data.train)
            assert len(data.train) == 5 * 12 * 5

    def test_augmentation_can_be_switched_off(self, train_config, tiny_dataset):
        cfg = train_config().with_overrides({"augmentation": {"enabled": False}})
        assert not any(r.synthetic_cam for r in prepare_data(cfg, tiny_dataset).train)


class TestTraining:
    def test_one_epoch_smoke(self, train_config, tiny_dataset):
        model, log = train(train_config(), tiny_dataset)
        assert len(log) == 1
        row = log.rows[0]
        assert all(math.isfinite(row[c]) for c in LOG_COLUMNS)
        assert row["lr"] == pytest.approx(0.001)
        assert model.stats is not None

    def test_same_seed_same_model(self, train_config, tiny_dataset):
        a, log_a = train(train_config(), tiny_dataset)
        b, log_b = train(train_config(workers=3), tiny_dataset)
        c, _ = train(train_config(seed=1), tiny_dataset)
        assert a.fingerprint() == b.fingerprint()
        assert log_a.frame(include_timing=False).equals(log_b.frame(include_timing=False))
        assert a.fingerprint() != c.fingerprint()

    def test_writes_checkpoints_and_log(self, train_config, tiny_dataset, tmp_path):
        out = str(tmp_path / "run")
        train(train_config(epochs=2, out_dir=out, config_hash="00ff00ff00ff00ff"), tiny_dataset)
        for name in (BEST_CHECKPOINT, FINAL_CHECKPOINT, LOG_FILE):
            assert os.path.exists(os.path.join(out, name))
        final = load_checkpoint(os.path.join(out, FINAL_CHECKPOINT))
        assert final.epoch == 2 and final.config_hash == "00ff00ff00ff00ff"
        assert final.log_matrix.shape == (2, len(LOG_COLUMNS))
        best = load_checkpoint(os.path.join(out, BEST_CHECKPOINT))
        assert best.best_mpjpe == pytest.approx(min(final.log_matrix[:, LOG_COLUMNS.index("test_mpjpe")]))

    def test_zero_siamese_weight_matches_disabled_siamese(self, train_config, tiny_dataset):
        off, _ = train(train_config(siamese_enabled=False), tiny_dataset)
        zero, _ = train(train_config(lambda2=0.0, same_pose_enabled=False), tiny_dataset)
        assert off.fingerprint() == zero.fingerprint()

    def test_nan_weights_abort_with_batch_id(self, train_config, tiny_dataset):
        cfg = train_config()
        trainer = Trainer(cfg, prepare_data(cfg, tiny_dataset))
        trainer.model.enc_in.w.value[0, 0] = np.nan
        with pytest.raises(NonFiniteLoss) as info:
            trainer.run()
        assert info.value.batch_id == "0:0"

    def test_interrupt_saves_last_completed_epoch(self, train_config, tiny_dataset, tmp_path, monkeypatch):
        out = str(tmp_path / "run")
        original = Trainer.run_epoch

        def interrupted(self, epoch):
            if epoch == 1:
                raise KeyboardInterrupt
            return original(self, epoch)

        monkeypatch.setattr(Trainer, "run_epoch", interrupted)
        with pytest.raises(KeyboardInterrupt):
            train(train_config(epochs=3, out_dir=out), tiny_dataset)
        assert load_checkpoint(os.path.join(out, FINAL_CHECKPOINT)).epoch == 1


class TestResume:
    def test_resumed_run_matches_uninterrupted_run(self, train_config, tiny_dataset, tmp_path):
        straight, straight_log = train(train_config(epochs=2), tiny_dataset)
        first = str(tmp_path / "first")
        train(train_config(epochs=1, out_dir=first), tiny_dataset)
        resumed, resumed_log = resume(os.path.join(first, FINAL_CHECKPOINT), train_config(epochs=2), tiny_dataset)
        assert resumed.fingerprint() == straight.fingerprint()
        assert resumed_log.frame()["test_mpjpe"].tolist() == straight_log.frame()["test_mpjpe"].tolist()

    def test_nothing_left_to_do(self, train_config, tiny_dataset, tmp_path):
        out = str(tmp_path / "run")
        train(train_config(out_dir=out), tiny_dataset)
        checkpoint = load_checkpoint(os.path.join(out, FINAL_CHECKPOINT))
        model, log = resume(checkpoint, train_config(), tiny_dataset)
        assert model.fingerprint() == checkpoint.build_model().fingerprint()
        assert len(log) == 1

    def test_architecture_mismatch(self, train_config, tiny_dataset, tmp_path):
        out = str(tmp_path / "run")
        train(train_config(out_dir=out), tiny_dataset)
        with pytest.raises(SchemaMismatch):
            resume(os.path.join(out, FINAL_CHECKPOINT), train_config(hidden=64), tiny_dataset)


class TestStudies:
    def test_summary_takes_median_over_seeds(self):
        runs = pd.DataFrame({
            "variant": ["all", "all", "all", "baseline"],
            "seed": [0, 1, 2, 0],
            "mpjpe_mm": [60.0, 70.0, 65.0, 90.0],
            "config_hash": ["h1", "h1", "h1", "h2"],
        })
        table = summarize_variants(runs, {"all": 65.8})
        assert list(table.index) == ["all", "baseline"]
        assert table.loc["all", "median_mm"] == 65.0
        assert table.loc["all", "seeds"] == "0 1 2"
        assert table.loc["all", "reference_mm"] == 65.8
        assert np.isnan(table.loc["baseline", "reference_mm"])

    def test_variants_train_and_score(self, train_config, tiny_dataset):
        variants = {"all": {}, "baseline": {"siamese_enabled": False, "augmentation": {"enabled": False}}}
        runs = run_variants(train_config(), tiny_dataset, variants, seeds=[0])
        assert runs["variant"].tolist() == ["all", "baseline"]
        assert runs["config_hash"].nunique() == 2
        assert np.all(np.isfinite(runs["mpjpe_mm"]))

    def test_distance_sweep_with_real_training(self, train_config, tiny_dataset):
        table = aug_distance_sweep(sweep_train_fn(train_config()), tiny_dataset, distances_deg=[100.0], seeds=[0])
        assert table["variant"].tolist() == ["siamese", "baseline"]
        assert np.all(np.isfinite(table["mpjpe_mm"]))

    def test_sweep_variants_share_nearest_training_camera(self, train_config, tiny_dataset, monkeypatch):
        nearest = {}

        def recording_train_on_split(cfg, train_records, test_records, test_cameras):
            augmented = augment_training_side(cfg, train_records, test_cameras)
            test_az = test_cameras[0].azimuth_deg()
            variant = "siamese" if cfg.siamese_enabled else "baseline"
            nearest[variant] = min(angular_distance(r.camera.azimuth_deg(), test_az) for r in augmented)
            return SimpleNamespace(stats=None), None

        monkeypatch.setattr(trainer_module, "train_on_split", recording_train_on_split)
        train, test = distance_split(tiny_dataset, 30.0, "cam0", camera_azimuths(tiny_dataset))
        train_fn = sweep_train_fn(train_config())
        for variant in ("siamese", "baseline"):
            train_fn(train, test, variant, 0, 30.0)
        assert nearest["siamese"] == pytest.approx(30.0, abs=1e-6)
        assert nearest["baseline"] == pytest.approx(30.0, abs=1e-6)

    def test_unknown_sweep_variant(self, train_config, tiny_dataset):
        with pytest.raises(ConfigInvalid):
            sweep_train_fn(train_config())(tiny_dataset[:10], tiny_dataset[10:20], "other", 0, 30.0)
