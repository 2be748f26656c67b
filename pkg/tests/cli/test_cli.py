"""
Command-Line Pipeline Tests
"""
import filecmp
import logging
import os

import pytest
import yaml

from conftest import tiny_raw_config
from difftalk.cli import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, build_parser, main
from difftalk.dataset import image_path
from difftalk.metrics import parse_report
from difftalk.utils.manifest import read_manifest

logger = logging.getLogger(__name__)

SHIPPED_CONFIG = os.path.join(os.path.dirname(__file__), "..", "..", "config", "config.yaml")


def write_config(root, name: str = "config.yaml", **overrides) -> str:
    """Write the tiny configuration (with section overrides) and return its path"""
    raw = tiny_raw_config(root)
    for section, values in overrides.items():
        raw[section].update(values)
    path = root / name
    path.write_text(yaml.safe_dump(raw))
    return str(path)


@pytest.mark.smoke
class TestCliErrors:
    """Test suite for exit codes on failures"""

    def test_parser_rejects_unknown_command(self):
        """Test argparse refuses commands outside the pipeline"""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train-everything"])

    def test_missing_stage_is_runtime_failure(self, tmp_path):
        """Test sampling before any training exits with the runtime code"""
        code = main(["sample", "--config", write_config(tmp_path)])
        logger.info(f"sample without checkpoints exited {code}")
        assert code == EXIT_RUNTIME, f"Expected {EXIT_RUNTIME}, got {code}"

    def test_invalid_config_is_validation_failure(self, tmp_path):
        """Test an unknown config key exits with the validation code"""
        path = tmp_path / "bad.yaml"
        path.write_text("completion:\n  learning_rate: 0.1\n")
        assert main(["gen-data", "--config", str(path)]) == EXIT_VALIDATION

    def test_missing_config_file(self, tmp_path):
        """Test a missing config file exits with the validation code"""
        assert main(["gen-data", "--config", str(tmp_path / "absent.yaml")]) == EXIT_VALIDATION

    def test_malformed_frame_range(self, tmp_path):
        """Test a malformed --frames value exits with the validation code"""
        config = write_config(tmp_path)
        assert main(["gen-data", "--config", config]) == EXIT_OK
        assert main(["sample", "--config", config, "--frames", "5-2"]) == EXIT_VALIDATION


@pytest.mark.regression
class TestGenData:
    """Test suite for the gen-data command"""

    def test_writes_dataset_and_manifest(self, tmp_path):
        """Test gen-data writes images, landmarks, audio and a manifest"""
        config = write_config(tmp_path)
        assert main(["gen-data", "--config", config]) == EXIT_OK
        data_dir = str(tmp_path / "data")
        for name in ("landmarks.txt", "audio.txt", "params.txt", "manifest.yaml"):
            assert os.path.isfile(os.path.join(data_dir, name)), f"{name} missing"
        assert os.path.isfile(image_path(data_dir, 23)), "Last frame image missing"
        manifest = read_manifest(data_dir)
        assert manifest["seed"] == 7, f"Unexpected manifest seed {manifest['seed']}"

    def test_same_seed_same_bytes(self, tmp_path):
        """Test two generations with the same seed are byte-identical"""
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        first = write_config(tmp_path / "a")
        second = write_config(tmp_path / "b")
        assert main(["gen-data", "--config", first]) == EXIT_OK
        assert main(["gen-data", "--config", second]) == EXIT_OK
        names = ["landmarks.txt", "audio.txt", "params.txt", os.path.join("images", "000010.pgm")]
        match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a" / "data", tmp_path / "b" / "data", names,
                                                   shallow=False)
        assert not mismatch and not errors, f"Files differ: {mismatch} {errors}"


@pytest.mark.critical
class TestSelfCheck:
    """Test suite for the invariant self-check command"""

    def test_selfcheck_passes(self, tmp_path):
        """Test every self-check passes and the report is written"""
        assert main(["selfcheck", "--config", write_config(tmp_path)]) == EXIT_OK
        report = tmp_path / "samples" / "selfcheck" / "selfcheck.txt"
        lines = report.read_text().splitlines()
        logger.info(lines[-1])
        assert not [line for line in lines if line.startswith("FAIL")], "No check should fail"


@pytest.mark.slow
class TestPipeline:
    """End-to-end runs of every command"""

    def test_full_pipeline(self, tmp_path):
        """Test gen-data through eval, sampling determinism and stage reuse"""
        config = write_config(tmp_path)
        for command in ("gen-data", "train-landmarks", "train-face"):
            assert main([command, "--config", config]) == EXIT_OK, f"{command} failed"

        assert main(["train-face", "--config", config]) == EXIT_OK, "train-face rerun failed"
        manifest = read_manifest(str(tmp_path / "checkpoints" / "face"))
        assert manifest["reused_stages"] == ["autoencoder", "base", "synthesis"], "Rerun should reuse every stage"

        assert main(["sample", "--config", config]) == EXIT_OK, "sample failed"
        again = write_config(tmp_path, "again.yaml", paths={"outputs": str(tmp_path / "samples-again")})
        assert main(["sample", "--config", again]) == EXIT_OK, "second sample failed"
        for index in (18, 19, 20):
            first = image_path(str(tmp_path / "samples"), index)
            second = image_path(str(tmp_path / "samples-again"), index)
            assert filecmp.cmp(first, second, shallow=False), f"Frame {index} differs between identical runs"
        assert filecmp.cmp(tmp_path / "samples" / "landmarks.txt", tmp_path / "samples-again" / "landmarks.txt",
                           shallow=False), "Completed landmarks differ between identical runs"

        assert main(["sample", "--config", config, "--frames", "0..9"]) == EXIT_VALIDATION, \
            "Range beyond the held-out split should be rejected"

        assert main(["eval", "--config", config]) == EXIT_OK, "eval failed"
        rows, aggregate = parse_report(str(tmp_path / "samples" / "eval" / "eval_report.txt"))
        assert [r[0] for r in rows] == [18, 19, 20], f"Unexpected evaluated frames {[r[0] for r in rows]}"
        assert 0.0 <= aggregate["mean_LD"] < 1.0, f"Implausible mean LD {aggregate['mean_LD']}"

    def test_quality_on_shipped_config(self, tmp_path):
        """Test full two-stage training on the shipped configuration reaches the quality targets on 50 frames"""
        with open(SHIPPED_CONFIG) as handle:
            raw = yaml.safe_load(handle)
        raw["paths"] = {
            "dataset": str(tmp_path / "data"),
            "checkpoints": str(tmp_path / "checkpoints"),
            "outputs": str(tmp_path / "samples"),
        }
        raw["sample"] = {"n_frames": 50, "overlays": False}
        config = tmp_path / "config.yaml"
        config.write_text(yaml.safe_dump(raw))
        for command in ("gen-data", "train-landmarks", "train-face", "sample", "eval"):
            assert main([command, "--config", str(config)]) == EXIT_OK, f"{command} failed"

        rows, aggregate = parse_report(str(tmp_path / "samples" / "eval" / "eval_report.txt"))
        logger.info(f"quality: {aggregate}")
        assert len(rows) == 50, f"Expected 50 evaluated frames, got {len(rows)}"
        assert aggregate["mean_PSNR"] >= 18.0, f"Mean PSNR {aggregate['mean_PSNR']:.2f} dB below 18"
        assert aggregate["mean_SSIM"] >= 0.6, f"Mean SSIM {aggregate['mean_SSIM']:.3f} below 0.6"
        assert aggregate["mean_readback_LD"] <= 0.05, \
            f"Read-back landmark distance {aggregate['mean_readback_LD']:.4f} above 0.05"
