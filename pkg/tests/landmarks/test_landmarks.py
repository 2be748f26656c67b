"""
Landmark Domain Tests

- normalisation and range validation
- region split/merge
- rasterisation
- landmark text files
"""
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from difftalk.dataset import FaceParams, landmarks_from_params
from difftalk.exceptions import ParseError, ShapeError, ValidationError
from difftalk.landmarks import (
    DEFAULT_PARTITION,
    Landmark68,
    RegionPartition,
    denormalize,
    inner_lip_gap,
    inside_jaw_hull,
    load_landmark_file,
    merge,
    mouth_centroid,
    normalize,
    rasterize,
    rasterize_batch,
    read_indexed_landmarks,
    save_landmark_file,
    split,
)
from difftalk.landmarks.partition import N_LOWER, N_MOUTH, N_PREDICTED, N_UPPER

logger = logging.getLogger(__name__)


@pytest.fixture
def face():
    return landmarks_from_params(FaceParams(m=0.6))


class TestNormalization:
    """Test suite for pixel <-> normalised conversion"""

    @pytest.mark.smoke
    def test_pixel_to_unit_square(self):
        """Test (256, 128) in a 512x512 image maps to (0.5, 0.25)"""
        points = np.full((68, 2), 256.0)
        points[0] = [256.0, 128.0]
        lm = normalize(points, 512, 512)
        assert np.allclose(lm.points[0], [0.5, 0.25]), "Point 0 should map to (0.5, 0.25)"

    def test_point_outside_image_named(self):
        """Test the offending point index appears in the error"""
        points = np.full((68, 2), 10.0)
        points[17] = [600.0, 10.0]
        with pytest.raises(ValidationError, match="point 17"):
            normalize(points, 512, 512)

    def test_wrong_shape(self):
        """Test a point count other than 68 raises ShapeError"""
        with pytest.raises(ShapeError):
            Landmark68(np.zeros((67, 2)))

    def test_out_of_range_constructor(self):
        """Test a negative coordinate is rejected with its index"""
        points = np.full((68, 2), 0.5)
        points[3, 1] = -0.01
        with pytest.raises(ValidationError, match="point 3"):
            Landmark68(points)

    def test_points_are_read_only(self, face):
        """Test the point array cannot be modified in place"""
        with pytest.raises(ValueError):
            face.points[0, 0] = 0.1

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=16, max_value=1024), st.integers(min_value=16, max_value=1024))
    def test_denormalize_inverts_normalize(self, width, height):
        """Test pixel coordinates survive normalise then denormalise"""
        rng = np.random.default_rng(width * 7919 + height)
        points = rng.uniform(0, 1, size=(68, 2)) * np.array([width, height])
        back = denormalize(normalize(points, width, height), width, height)
        assert np.allclose(back, points, atol=1e-9), "Round trip should be exact up to float error"


class TestRegions:
    """Test suite for the region partition"""

    @pytest.mark.smoke
    def test_partition_sizes(self):
        """Test 39 upper, 9 lower contour, 20 mouth points"""
        assert (N_UPPER, N_LOWER, N_MOUTH, N_PREDICTED) == (39, 9, 20, 29), "Partition sizes are fixed"
        assert DEFAULT_PARTITION.lower_contour == tuple(range(4, 13)), "Lower contour is jaw points 4..12"

    def test_split_then_merge_is_identity(self, face):
        """Test merge(split(lm)) == lm"""
        upper, lower, mouth = split(face)
        assert upper.shape == (39, 2) and lower.shape == (9, 2) and mouth.shape == (20, 2), "Split shapes"
        assert merge(upper, lower, mouth) == face, "Merging the parts should give back the input"

    def test_merge_rejects_wrong_shape(self, face):
        """Test a short mouth array raises ShapeError"""
        upper, lower, mouth = split(face)
        with pytest.raises(ShapeError):
            merge(upper, lower, mouth[:19])

    def test_overlapping_partition_rejected(self):
        """Test overlapping index sets fail validation"""
        bad = RegionPartition(tuple(range(0, 40)), tuple(range(39, 48)), tuple(range(48, 68)))
        with pytest.raises(ValidationError):
            bad.validate()

    def test_geometry_helpers(self, face):
        """Test lip gap, mouth centroid and jaw hull membership"""
        assert inner_lip_gap(face.points) == pytest.approx(0.18 * 0.6 * 0.33), "Gap follows 0.18*m*ry"
        centroid = mouth_centroid(face)
        assert inside_jaw_hull(face.points, centroid), "Mouth centroid should lie inside the jaw"
        assert not inside_jaw_hull(face.points, np.array([0.01, 0.01])), "Canvas corner lies outside"


class TestRasterize:
    """Test suite for landmark rasterisation"""

    def test_integer_position_hits_one_pixel(self):
        """Test (0.5, 0.5) at size 64 puts its mass in pixel (32, 32)"""
        canvas = rasterize(Landmark68(np.full((68, 2), 0.5)), 64)
        assert canvas[32, 32] == pytest.approx(68.0), "All 68 coincident points land on (32, 32)"
        assert canvas.sum() == pytest.approx(68.0), "No mass elsewhere"

    def test_total_mass(self, face):
        """Test the canvas always carries mass 68"""
        assert rasterize(face, 16).sum() == pytest.approx(68.0), "Bilinear splats conserve mass"

    def test_shift_by_one_pixel_moves_one_column(self, rng):
        """Test shifting interior points by 1/size in x moves the raster exactly one column right"""
        size = 32
        quarters = rng.integers(6, 22, size=(68, 2)) + rng.choice([0.0, 0.25, 0.5, 0.75], size=(68, 2))
        lm = Landmark68(quarters / size)
        before = rasterize(lm, size)
        after = rasterize(lm.shifted(1.0 / size, 0.0), size)
        assert np.max(np.abs(after[:, 1:] - before[:, :-1])) <= 1e-12, "Raster should move by one column"
        assert np.all(after[:, 0] == 0.0), "Vacated column should be empty"

    def test_small_size_rejected(self, face):
        """Test sizes below 16 raise ValidationError"""
        with pytest.raises(ValidationError):
            rasterize(face, 8)

    def test_batch_layout(self, face):
        """Test batch output is [B, 1, s, s]"""
        batch = rasterize_batch(np.stack([face.points, face.points]), 16)
        assert batch.shape == (2, 1, 16, 16), "Batch raster should carry a channel axis"


class TestLandmarkFile:
    """Test suite for landmark text files"""

    def test_save_and_load(self, face, tmp_path):
        """Test values survive the text format exactly"""
        path = save_landmark_file(str(tmp_path / "lm.txt"), [face, face.shifted(0.01, 0.0)],
                                  indices=[5, 9], comment="test")
        frames = read_indexed_landmarks(path)
        assert [i for i, _ in frames] == [5, 9], "Frame indices should be preserved"
        assert frames[0][1] == face, "Values should be bit-identical"
        assert len(load_landmark_file(path)) == 2, "Comment line is skipped"

    def test_wrong_point_count(self, tmp_path):
        """Test a short line raises ParseError naming the line"""
        path = tmp_path / "bad.txt"
        path.write_text("0 " + " ".join(["0.5"] * 134) + "\n")
        with pytest.raises(ParseError, match=":1:"):
            load_landmark_file(str(path))

    def test_index_count_mismatch(self, face, tmp_path):
        """Test more indices than frames raises ValidationError"""
        with pytest.raises(ValidationError):
            save_landmark_file(str(tmp_path / "lm.txt"), [face], indices=[0, 1])
