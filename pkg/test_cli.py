import json
import os
from pathlib import Path

import pytest
import yaml

from cli.config import RunConfig, parse_set, resolve_config
from cli.main import main
from lifter.errors import ConfigInvalid

SMOKE = ["--profile", "smoke", "--set", "train.epochs=1"]


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    """One-epoch smoke training run shared by the evaluation tests"""
    out = str(tmp_path_factory.mktemp("smoke"))
    assert main(["train", *SMOKE, "--out", out]) == 0
    return out


class TestConfig:
    def test_precedence(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"model": {"hidden": 48}, "train": {"seed": 3, "epochs": 5}}))
        run = resolve_config("smoke", str(path), ["model.hidden=40"], seed=7, out_dir="elsewhere")
        assert run.section("model")["hidden"] == 40
        assert run.section("model")["m"] == 16
        assert run.section("train")["epochs"] == 5
        assert run.seed == 7
        assert run.out_dir == "elsewhere"

    def test_json_config_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"eval": {"protocol": 1}}))
        assert resolve_config(config_path=str(path)).section("eval")["protocol"] == 1

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"train": {"epochz": 5}}))
        with pytest.raises(ConfigInvalid, match="epochz"):
            resolve_config(config_path=str(path))

    def test_wrong_type_rejected(self):
        with pytest.raises(ConfigInvalid, match="model.hidden"):
            resolve_config(sets=["model.hidden=wide"])
        with pytest.raises(ConfigInvalid):
            resolve_config(profile="huge")

    def test_set_values_are_yaml(self):
        assert parse_set("eval.seeds=[1, 2]") == {"eval": {"seeds": [1, 2]}}
        assert parse_set("data.path=null") == {"data": {"path": None}}
        with pytest.raises(ConfigInvalid):
            parse_set("train.epochs")
        with pytest.raises(ConfigInvalid):
            parse_set("epochs=3")

    def test_synth_skeleton_overrides_merge_over_defaults(self):
        run = resolve_config("smoke", sets=["synth.bone_lengths={thigh: 500.0}", "synth.angle_ranges={knee: [10, 90]}"])
        synth = run.synth_config()
        assert synth.bone_lengths["thigh"] == 500.0
        assert synth.bone_lengths["shin"] == 440.0
        assert synth.angle_ranges["knee"] == [10.0, 90.0]
        with pytest.raises(ConfigInvalid, match="synth.angle_ranges"):
            resolve_config(sets=["synth.angle_ranges={knee: [10]}"])
        with pytest.raises(ConfigInvalid, match="synth.bone_lengths"):
            resolve_config(sets=["synth.bone_lengths={thigh: -1}"])

    def test_hash_follows_content_not_key_order(self):
        a = resolve_config("smoke")
        b = RunConfig(dict(reversed(list(a.data.items()))))
        assert a.config_hash == b.config_hash
        assert resolve_config("smoke", seed=1).config_hash != a.config_hash


class TestCommands:
    def test_generate_synth(self, tmp_path):
        path = str(tmp_path / "synth.jsonl")
        assert main(["generate-synth", "--profile", "smoke", "--dataset", path]) == 0
        with open(path) as f:
            assert sum(1 for _ in f) == 7 * 2 * 12 * 5

    def test_train_outputs(self, smoke_run):
        for name in ("config.json", "final.eqlf", "best.eqlf", "train_log.csv", "loss_curve.svg",
                     "loss_curve_0.html", "loss_curve_1.html"):
            assert os.path.exists(os.path.join(smoke_run, name)), name
        with open(os.path.join(smoke_run, "config.json")) as f:
            config_hash = RunConfig(json.load(f)).config_hash
        with open(os.path.join(smoke_run, "loss_curve.svg")) as f:
            assert f"config_hash={config_hash}" in f.read()
        with open(os.path.join(smoke_run, "train_log.csv")) as f:
            assert f.readline().startswith(f"# config_hash={config_hash}")

    def test_eval_report(self, smoke_run):
        assert main(["eval", *SMOKE, "--out", smoke_run]) == 0
        with open(os.path.join(smoke_run, "eval_report.json")) as f:
            report = json.load(f)
        assert report["protocol"] == 3
        assert report["test_camera"] == "cam0"
        assert report["n_frames"] == 2 * 2 * 12
        assert report["provenance"]["config_hash"] == report["config_hash"]
        assert os.path.exists(os.path.join(smoke_run, "eval_table.txt"))

    def test_embed_rotate(self, smoke_run):
        assert main(["embed-rotate", *SMOKE, "--out", smoke_run, "--angles", "0", "90"]) == 0
        with open(os.path.join(smoke_run, "embed_rotation.csv")) as f:
            lines = f.read().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert len(lines) == 2 + 2

    def test_resume_with_nothing_left(self, smoke_run, tmp_path):
        out = str(tmp_path / "resumed")
        checkpoint = os.path.join(smoke_run, "final.eqlf")
        assert main(["train", *SMOKE, "--out", out, "--resume", checkpoint]) == 0
        assert os.path.exists(os.path.join(out, "final.eqlf"))


class TestExitCodes:
    def test_corrupted_checkpoint_is_storage_error(self, smoke_run, tmp_path):
        raw = bytearray(Path(smoke_run, "final.eqlf").read_bytes())
        raw[len(raw) // 3] ^= 0xFF
        broken = tmp_path / "broken.eqlf"
        broken.write_bytes(bytes(raw))
        assert main(["eval", *SMOKE, "--out", str(tmp_path), "--checkpoint", str(broken)]) == 5

    def test_architecture_mismatch_is_config_error(self, smoke_run, tmp_path):
        checkpoint = os.path.join(smoke_run, "final.eqlf")
        args = ["eval", *SMOKE, "--set", "model.hidden=32", "--out", str(tmp_path), "--checkpoint", checkpoint]
        assert main(args) == 2

    def test_missing_dataset_is_storage_error(self, tmp_path):
        args = ["train", *SMOKE, "--out", str(tmp_path), "--dataset", str(tmp_path / "absent.jsonl")]
        assert main(args) == 5

    def test_invalid_config_is_config_error(self, tmp_path):
        assert main(["train", "--set", "train.batch_size=1", "--out", str(tmp_path)]) == 2

    def test_long_studies_need_confirmation(self, tmp_path):
        assert main(["ablate", "--out", str(tmp_path)]) == 2
        assert main(["sweep-aug", "--out", str(tmp_path)]) == 2
