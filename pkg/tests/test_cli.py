import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from matchprop import io as mio
from matchprop.cli import main
from matchprop.synthetic import moving_square


@pytest.fixture(scope="module")
def sequence_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("cliseq")
    frames = root / "frames"
    gt = root / "gt"
    frames.mkdir(), gt.mkdir()
    seq = moving_square(num_frames=5)
    for i, (frame, mask) in enumerate(zip(seq.frames, seq.masks), start=1):
        Image.fromarray(frame).save(frames / f"{i:05d}.png")
        Image.fromarray(mask.labels.astype(np.uint8)).save(gt / f"{i:05d}.png")
    return root


SUITE_FLAGS = ["--softmax-temp", "0.1", "--bg-weight", "1.05", "--dc", "40"]


def run_cli(args):
    result = CliRunner().invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


class TestExtractFeatures:
    def test_writes_one_file_per_frame(self, sequence_dirs):
        out = sequence_dirs / "feats"
        run_cli(["extract-features", "--frames", str(sequence_dirs / "frames"), "--out", str(out)])
        files = sorted(out.glob("*.vmf"))
        assert len(files) == 5
        fmap = mio.read_feature_file(files[0])
        assert fmap.channels == 21 and fmap.stride == 8


class TestPropagate:
    def test_feature_and_frame_inputs_agree(self, sequence_dirs):
        out = sequence_dirs / "feats"
        if not out.exists():
            run_cli(["extract-features", "--frames", str(sequence_dirs / "frames"), "--out", str(out)])
        run_a = sequence_dirs / "run_a"
        run_b = sequence_dirs / "run_b"
        template = str(sequence_dirs / "gt" / "00001.png")
        run_cli(["propagate", "--features", str(out), "--template", template,
                 "--out", str(run_a), *SUITE_FLAGS])
        run_cli(["propagate", "--frames", str(sequence_dirs / "frames"), "--template", template,
                 "--out", str(run_b), *SUITE_FLAGS])
        for i in range(1, 6):
            a = (run_a / "masks" / f"{i:05d}.png").read_bytes()
            b = (run_b / "masks" / f"{i:05d}.png").read_bytes()
            assert a == b
        assert not (run_a / "overlays").exists()  # no frames given
        assert len(list((run_b / "overlays").glob("*.png"))) == 5
        log = json.loads((run_a / "run.json").read_text())
        assert log["frame_count"] == 5

    def test_rejects_both_input_modes(self, sequence_dirs):
        result = CliRunner().invoke(
            main,
            ["propagate", "--features", str(sequence_dirs), "--frames", str(sequence_dirs),
             "--template", str(sequence_dirs / "gt" / "00001.png"), "--out", "x"],
        )
        assert result.exit_code != 0
        assert "exactly one" in result.output

    def test_config_file_with_flag_override(self, sequence_dirs, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"top_k": 5, "softmax_temperature": 0.1,
                                        "bg_weight": 1.05, "extrusion_radius": 40.0}))
        out = tmp_path / "run"
        run_cli(["propagate", "--frames", str(sequence_dirs / "frames"),
                 "--template", str(sequence_dirs / "gt" / "00001.png"),
                 "--out", str(out), "--config", str(cfg_path), "--k", "7"])
        log = json.loads((out / "run.json").read_text())
        assert log["config"]["top_k"] == 7  # CLI beats file
        assert log["config"]["extrusion_radius"] == 40.0  # file beats default

    def test_unknown_config_key_rejected(self, sequence_dirs, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"K": 5}))
        result = CliRunner().invoke(
            main,
            ["propagate", "--frames", str(sequence_dirs / "frames"),
             "--template", str(sequence_dirs / "gt" / "00001.png"),
             "--out", str(tmp_path / "r"), "--config", str(cfg_path)],
        )
        assert result.exit_code != 0
        assert "unknown config keys" in result.output

    def test_ablation_flags_reach_log(self, sequence_dirs, tmp_path):
        out = tmp_path / "run"
        run_cli(["propagate", "--frames", str(sequence_dirs / "frames"),
                 "--template", str(sequence_dirs / "gt" / "00001.png"),
                 "--out", str(out), *SUITE_FLAGS,
                 "--no-outlier-removal", "--no-bg-update", "--fg-only"])
        log = json.loads((out / "run.json").read_text())
        assert log["config"]["outlier_removal_enabled"] is False
        assert log["config"]["bg_update_enabled"] is False
        assert log["config"]["fg_only_matching"] is True


class TestEval:
    def test_scores_perfect_prediction(self, sequence_dirs):
        result = run_cli(["eval", "--pred", str(sequence_dirs / "gt"),
                          "--gt", str(sequence_dirs / "gt")])
        report = json.loads(result.output)
        assert report["miou"] == 1.0
        assert report["f"] == 1.0
        assert len(report["per_frame"]) == 5

    def test_count_mismatch_fails(self, sequence_dirs, tmp_path):
        pred = tmp_path / "pred"
        pred.mkdir()
        Image.fromarray(np.zeros((8, 8), np.uint8)).save(pred / "a.png")
        result = CliRunner().invoke(
            main, ["eval", "--pred", str(pred), "--gt", str(sequence_dirs / "gt")]
        )
        assert result.exit_code != 0


class TestJumpcutEval:
    def test_runs_with_explicit_keyframes(self, sequence_dirs):
        result = run_cli(["jumpcut-eval", "--frames", str(sequence_dirs / "frames"),
                          "--gt", str(sequence_dirs / "gt"), "--keyframes", "0,1",
                          "--distance", "3", *SUITE_FLAGS])
        report = json.loads(result.output)
        assert len(report["per_keyframe"]) == 2
        assert report["error_rate"] >= 0.0


class TestBenchKernel:
    def test_emits_csv_row(self):
        result = run_cli(["bench-kernel", "--h", "4", "--w", "4", "--c", "8",
                          "--bank", "32", "--k", "5", "--threads", "1", "--header"])
        lines = result.output.strip().splitlines()
        assert lines[0] == "strategy,h,w,c,bank,K,threads,millis"
        fields = lines[1].split(",")
        assert fields[0] == "blocked" and len(fields) == 8
