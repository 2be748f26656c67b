"""
Synthetic Dataset Tests

- analytic geometry (mouth gap, canvas bounds)
- renderer determinism and locality of the mouth
- sequence generation, loading and the train/test split
- analysis-by-synthesis read-back
"""
import logging
import os

import numpy as np
import pytest

from difftalk.audio import recover_mouth_signal
from difftalk.dataset import (
    FaceParams,
    gen_sequence,
    image_path,
    landmarks_from_params,
    load_dataset,
    load_params_file,
    mouth_box,
    mouth_gap,
    read_back_landmarks,
    render,
    save_params_file,
    sequence_params,
    train_test_split,
)
from difftalk.dataset.generate import LANDMARK_FILE, PARAMS_FILE
from difftalk.dataset.inverse import fit_mouth_openness
from difftalk.exceptions import ParseError, ValidationError
from difftalk.landmarks import inner_lip_gap, load_landmark_file
from difftalk.utils.manifest import read_manifest

logger = logging.getLogger(__name__)


class TestGeometry:
    """Test suite for FaceParams -> landmarks"""

    @pytest.mark.smoke
    def test_closed_mouth_has_no_gap(self):
        """Test m=0 makes facing inner-lip points coincide vertically"""
        lm = landmarks_from_params(FaceParams(m=0.0))
        assert inner_lip_gap(lm.points) == pytest.approx(0.0, abs=1e-15), "Closed mouth should have zero gap"

    def test_open_mouth_gap(self):
        """Test m=1, ry=0.3 gives a gap of 0.054"""
        params = FaceParams(m=1.0, ry=0.3)
        assert mouth_gap(params) == pytest.approx(0.054), "Gap should be 0.18 * 1 * 0.3"
        assert inner_lip_gap(landmarks_from_params(params).points) == pytest.approx(0.054), "Geometry should match"

    def test_points_inside_canvas(self):
        """Test every frame of a sequence keeps all 68 points in [0, 1]"""
        for params in sequence_params(50, seed=3):
            points = landmarks_from_params(params).points
            assert points.min() >= 0.0 and points.max() <= 1.0, "Landmarks must stay on the canvas"

    def test_parameter_range_checked(self):
        """Test an out-of-range mouth openness raises ValidationError"""
        with pytest.raises(ValidationError):
            FaceParams(m=1.5)

    def test_sequences_are_seeded(self):
        """Test the same seed gives the same parameter sequence"""
        assert sequence_params(10, seed=4) == sequence_params(10, seed=4), "Same seed, same sequence"
        assert sequence_params(10, seed=4) != sequence_params(10, seed=5), "Different seed, different sequence"


class TestRender:
    """Test suite for the renderer"""

    def test_render_is_deterministic(self):
        """Test the same params twice give bit-identical images"""
        params = FaceParams(m=0.4)
        assert np.array_equal(render(params, 64), render(params, 64)), "Rendering should be deterministic"

    @pytest.mark.critical
    def test_mouth_only_changes_mouth_box(self):
        """Test m=0 vs m=1 differ only inside the mouth bounding box"""
        closed, opened = FaceParams(m=0.0), FaceParams(m=1.0)
        diff = render(closed, 64).astype(int) != render(opened, 64).astype(int)
        x0, y0, x1, y1 = mouth_box([closed, opened], 64)
        outside = diff.copy()
        outside[y0:y1, x0:x1] = False
        assert diff.any(), "Opening the mouth should change some pixels"
        assert not outside.any(), "No pixel outside the mouth box may change"

    def test_mean_intensity_in_range(self):
        """Test frames are neither blank nor saturated"""
        mean = float(render(FaceParams(), 64).mean())
        logger.info(f"mean intensity {mean:.1f}")
        assert 20.0 <= mean <= 235.0, f"Mean intensity {mean} outside [20, 235]"

    def test_small_size_rejected(self):
        """Test sizes below 16 raise ValidationError"""
        with pytest.raises(ValidationError):
            render(FaceParams(), 8)


class TestReadBack:
    """Test suite for the analysis-by-synthesis inverse"""

    @pytest.mark.parametrize("m", [0.0, 0.37, 0.8])
    def test_recovers_mouth_openness(self, m):
        """Test a rendered frame gives back its mouth openness"""
        params = FaceParams(m=m, ry=0.34)
        fitted = fit_mouth_openness(render(params, 64), params)
        assert abs(fitted - m) <= 0.05, f"Fitted openness {fitted} too far from {m}"

    def test_read_back_landmarks_close(self):
        """Test read-back landmarks stay within a small distance of the truth"""
        params = FaceParams(m=0.6)
        readback = read_back_landmarks(render(params, 64), params)
        distance = np.linalg.norm(readback.points - landmarks_from_params(params).points, axis=1).mean()
        assert distance <= 0.01, f"Mean read-back distance {distance} too large"


class TestGenSequence:
    """Test suite for sequence generation and loading"""

    @pytest.mark.smoke
    def test_file_counts(self, tiny_dataset_dir):
        """Test one image, landmark line, audio frame and params row per frame"""
        images = os.listdir(os.path.join(tiny_dataset_dir, "images"))
        assert len(images) == 24, "24 images expected"
        assert len(load_landmark_file(os.path.join(tiny_dataset_dir, LANDMARK_FILE))) == 24, "24 landmark lines"
        assert len(load_params_file(os.path.join(tiny_dataset_dir, PARAMS_FILE))) == 24, "24 params rows"
        manifest = read_manifest(tiny_dataset_dir)
        assert manifest["command"] == "gen-data" and manifest["frames"] == 24, "Manifest should describe the run"

    @pytest.mark.critical
    def test_landmarks_match_params(self, tiny_dataset):
        """Test stored landmarks equal the analytic formula on the stored params"""
        for stored, params in zip(tiny_dataset.landmarks, tiny_dataset.params):
            expected = landmarks_from_params(params).points
            assert np.max(np.abs(stored - expected)) <= 1e-9, "Landmarks must follow from params"

    def test_audio_encodes_mouth(self, tiny_dataset):
        """Test the mouth signal is recoverable from the stored audio"""
        recovered = recover_mouth_signal(tiny_dataset.audio, seed=tiny_dataset.seed)
        truth = np.array([p.m for p in tiny_dataset.params])
        assert np.max(np.abs(recovered - truth)) < 0.1, "Audio should carry the mouth openness"

    def test_same_seed_bit_identical(self, tmp_path):
        """Test two generations with one seed match file for file"""
        first = gen_sequence(str(tmp_path / "a"), 5, seed=9, size=16)
        second = gen_sequence(str(tmp_path / "b"), 5, seed=9, size=16)
        for name in ("landmarks.txt", "audio.txt", "params.txt", "manifest.yaml", "images/000004.pgm"):
            with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
                assert a.read() == b.read(), f"{name} should be bit-identical"

    def test_zero_frames_rejected(self, tmp_path):
        """Test n_frames=0 raises ValidationError"""
        with pytest.raises(ValidationError):
            gen_sequence(str(tmp_path), 0, seed=1, size=16)

    def test_missing_image_detected(self, tmp_path):
        """Test loading fails when an image file is gone"""
        root = gen_sequence(str(tmp_path / "data"), 3, seed=2, size=16)
        os.remove(image_path(root, 1))
        with pytest.raises(ValidationError, match="images missing"):
            load_dataset(root)

    def test_params_file_round_trip(self, tmp_path):
        """Test params survive the sidecar format"""
        params = sequence_params(4, seed=6)
        assert load_params_file(save_params_file(str(tmp_path / "p.txt"), params)) == params, "Params should round-trip"

    def test_params_out_of_range_is_parse_error(self, tmp_path):
        """Test an out-of-range value is reported with its line"""
        path = tmp_path / "p.txt"
        path.write_text("0 0.5 0.52 0.28 0.33 0.0 1.0 1.7 0\n")
        with pytest.raises(ParseError):
            load_params_file(str(path))


class TestSplit:
    """Test suite for the deterministic train/test split"""

    def test_last_frames_held_out(self):
        """Test the held-out frames are the final ones"""
        train, test = train_test_split(10, 3)
        assert list(train) == list(range(7)), "Training frames come first"
        assert list(test) == [7, 8, 9], "The last three frames are held out"

    def test_cannot_hold_out_everything(self):
        """Test holding out all frames raises ValidationError"""
        with pytest.raises(ValidationError):
            train_test_split(5, 5)
