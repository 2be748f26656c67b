"""
Run Artifact Tests (manifests, training reports, images)
"""
import logging
import os

import numpy as np
import pytest

from difftalk.exceptions import ShapeError, ValidationError
from difftalk.utils.image_io import landmark_overlay, load_pgm, save_pgm, save_png
from difftalk.utils.manifest import MANIFEST_NAME, read_manifest, run_name, write_manifest
from difftalk.utils.training_report import TrainingReport, plain, save_loss_curve

logger = logging.getLogger(__name__)


class TestManifest:
    """Test suite for run manifests"""

    def test_run_name_slug(self):
        """Test run names are lowercase slugs"""
        name = run_name("train_landmarks", 7, "ablate AM")
        logger.info(f"Run name: {name}")
        assert name == "train-landmarks-seed-7-ablate-am", f"Unexpected slug {name}"

    def test_deterministic(self, tmp_path, tiny_config):
        """Test writing the same manifest twice gives identical bytes"""
        first = write_manifest(str(tmp_path / "a"), "gen-data", 7, tiny_config.to_dict(), {"frames": 24})
        second = write_manifest(str(tmp_path / "b"), "gen-data", 7, tiny_config.to_dict(), {"frames": 24})
        with open(first, "rb") as a, open(second, "rb") as b:
            assert a.read() == b.read(), "Manifests should be byte-identical"

    def test_contents(self, tmp_path, tiny_config):
        """Test the manifest records command, seed, config and versions"""
        write_manifest(str(tmp_path), "sample", 7, tiny_config.to_dict(), {"frames": [0, 1]})
        assert os.path.isfile(tmp_path / MANIFEST_NAME)
        data = read_manifest(str(tmp_path))
        assert data["command"] == "sample" and data["seed"] == 7
        assert data["config"]["schedule"]["T"] == 5
        assert data["frames"] == [0, 1]
        assert {"python", "numpy", "difftalk"} <= set(data["versions"]), "Versions missing"


class TestTrainingReport:
    """Test suite for stage training reports"""

    def test_save_and_load(self, tmp_path):
        """Test numpy values are stored as plain YAML and read back"""
        report = TrainingReport("base", losses=[np.float64(2.0), 1.5], converged=False,
                                extra={"val_losses": np.array([2.5, 2.0]), "best_val": np.float64(2.0)})
        path = report.save(str(tmp_path / "base_report.yaml"))
        loaded = TrainingReport.load(path)
        assert loaded.stage == "base" and loaded.losses == [2.0, 1.5]
        assert loaded.extra["val_losses"] == [2.5, 2.0]
        assert loaded.converged is False
        assert loaded.final_loss == 1.5

    def test_empty_report(self):
        """Test an empty loss curve has a NaN final loss"""
        assert np.isnan(TrainingReport("x").final_loss)

    def test_plain(self):
        """Test nested numpy values become builtins"""
        converted = plain({"a": np.int64(3), "b": (np.float32(0.5),), "c": np.eye(2)})
        assert converted == {"a": 3, "b": [0.5], "c": [[1.0, 0.0], [0.0, 1.0]]}
        assert type(converted["a"]) is int

    def test_loss_curve(self, tmp_path):
        """Test the loss curve table has one line per epoch"""
        path = save_loss_curve(str(tmp_path / "loss.txt"), [3.0, 2.0, 1.0])
        with open(path) as handle:
            lines = handle.read().splitlines()
        assert lines == ["# epoch loss", "1 3.0", "2 2.0", "3 1.0"], f"Unexpected table {lines}"


class TestImageIO:
    """Test suite for grayscale image files and overlays"""

    def test_pgm_exact(self, tmp_path, rng):
        """Test PGM files reproduce the uint8 pixels exactly"""
        image = rng.integers(0, 256, (16, 24)).astype(np.uint8)
        path = save_pgm(str(tmp_path / "img" / "000001.pgm"), image)
        assert np.array_equal(load_pgm(path), image), "PGM pixels should be preserved"

    def test_pgm_rejects(self, tmp_path):
        """Test non-uint8 or non-2D arrays are rejected"""
        with pytest.raises(ValidationError):
            save_pgm(str(tmp_path / "a.pgm"), np.zeros((4, 4)))
        with pytest.raises(ShapeError):
            save_pgm(str(tmp_path / "b.pgm"), np.zeros((4, 4, 3), dtype=np.uint8))

    def test_overlay(self, tmp_path, tiny_dataset):
        """Test the side-by-side overlay panel shape and PNG output"""
        image = tiny_dataset.images[0]
        points = tiny_dataset.landmarks[0]
        panel = landmark_overlay(image, image, points, points, scale=2)
        assert panel.shape == (32, 64, 3), f"Unexpected panel shape {panel.shape}"
        assert panel.dtype == np.uint8
        save_png(str(tmp_path / "overlay.png"), panel)
        assert os.path.getsize(tmp_path / "overlay.png") > 0, "Overlay should be written"
        with pytest.raises(ShapeError):
            landmark_overlay(image, image[:8], points, points)
