"""
Audio Feature Tests

- window extraction and edge clamping
- synthetic track generator and its inverse
- temporal encoder shapes and determinism
- audio track files
"""
import logging

import numpy as np
import pytest

from difftalk.audio import (
    AUDIO_EMBED_DIM,
    COMPLETION_AUDIO_PREFIX,
    FEATURE_DIM,
    WINDOW,
    AudioTrack,
    TemporalEncoder,
    load_audio_file,
    recover_mouth_signal,
    save_audio_file,
    synth_track,
    temporal_encode,
    window,
    windows,
)
from difftalk.autodiff import ParamStore
from difftalk.exceptions import ContractViolation, ParseError, ShapeError, ValidationError

logger = logging.getLogger(__name__)


@pytest.fixture
def track():
    """Track whose frame i is the constant i, so rows reveal their source frame"""
    frames = np.repeat(np.arange(40.0)[:, None], FEATURE_DIM, axis=1)
    return AudioTrack(frames)


class TestWindow:
    """Test suite for 16-frame windows"""

    @pytest.mark.smoke
    def test_centre_row_is_the_frame(self, track):
        """Test row 8 of the window is the requested frame"""
        block = window(track, 20).block
        assert block.shape == (WINDOW, FEATURE_DIM), "Window is 16 x 29"
        assert np.all(block[8] == 20.0), "Row 8 should be frame 20"
        assert np.all(block[0] == 12.0) and np.all(block[15] == 27.0), "Window spans frames 12..27"

    def test_start_of_track_is_clamped(self, track):
        """Test frame 0 repeats itself in the rows before it"""
        block = window(track, 0).block
        assert np.all(block[:9] == 0.0), "Rows 0..8 should all equal frame 0"
        assert np.all(block[9] == 1.0), "Row 9 should be frame 1"

    def test_end_of_track_is_clamped(self, track):
        """Test the last frame repeats after the end"""
        block = window(track, 39).block
        assert np.all(block[8:] == 39.0), "Rows from the centre on should equal the last frame"

    def test_consecutive_windows_overlap(self, rng):
        """Test window(i + 1) is window(i) moved up one row wherever neither is clamped"""
        track = AudioTrack(rng.standard_normal((40, FEATURE_DIM)))
        for i in range(8, len(track) - 8):
            current, following = window(track, i).block, window(track, i + 1).block
            assert np.array_equal(following[:-1], current[1:]), f"Windows {i} and {i + 1} should share 15 rows"

    def test_index_out_of_range(self, track):
        """Test an index past the end raises ValidationError"""
        with pytest.raises(ValidationError):
            window(track, 40)

    def test_stacked_windows(self, track):
        """Test several windows stack on a leading axis"""
        assert windows(track, [0, 5, 39]).shape == (3, WINDOW, FEATURE_DIM), "Stacked window shape"

    def test_wrong_feature_width(self):
        """Test a track with 28 features is rejected"""
        with pytest.raises(ShapeError):
            AudioTrack(np.zeros((10, 28)))


class TestSynthTrack:
    """Test suite for the synthetic feature generator"""

    def test_noise_free_constant_signal(self):
        """Test sigma=0 and constant openness give identical frames"""
        frames = synth_track(np.full(12, 0.4), seed=3, sigma=0.0).frames
        assert np.all(frames == frames[0]), "Every frame should be identical"

    @pytest.mark.smoke
    def test_same_seed_same_track(self):
        """Test determinism under a fixed seed"""
        signal = np.linspace(0.0, 1.0, 30)
        a = synth_track(signal, seed=11).frames
        b = synth_track(signal, seed=11).frames
        assert np.array_equal(a, b), "Same seed should give a bit-identical track"
        assert not np.array_equal(a, synth_track(signal, seed=12).frames), "Different seed should differ"

    def test_mouth_signal_is_recoverable(self):
        """Test the least-squares inverse returns the openness signal"""
        signal = np.linspace(0.0, 1.0, 25)
        exact = recover_mouth_signal(synth_track(signal, seed=5, sigma=0.0), seed=5)
        assert np.allclose(exact, signal, atol=1e-9), "Noise-free inverse should be exact"
        noisy = recover_mouth_signal(synth_track(signal, seed=5, sigma=0.01), seed=5)
        assert np.max(np.abs(noisy - signal)) < 0.1, "Small noise should only perturb the estimate slightly"


class TestTemporalEncoder:
    """Test suite for the temporal convolutional encoder"""

    def test_embedding_shape_and_determinism(self, track, rng):
        """Test one window maps to a 64-dim vector, the same each call"""
        encoder = TemporalEncoder(ParamStore(), "audio", rng)
        first = temporal_encode(window(track, 10), encoder)
        second = temporal_encode(window(track, 10), encoder)
        assert first.shape == (AUDIO_EMBED_DIM,), "Embedding should have 64 components"
        assert np.array_equal(first, second), "Encoding should be deterministic"

    def test_encode_from_parameter_store(self, track, rng):
        """Test encoding straight from a parameter store matches the built encoder"""
        store = ParamStore()
        encoder = TemporalEncoder(store, COMPLETION_AUDIO_PREFIX, rng)
        from_store = temporal_encode(window(track, 10), store)
        assert np.array_equal(from_store, temporal_encode(window(track, 10), encoder)), \
            "Store and encoder forms should agree"

    def test_store_without_encoder(self, track):
        """Test an empty store raises ContractViolation"""
        with pytest.raises(ContractViolation):
            temporal_encode(window(track, 10), ParamStore())

    def test_bad_window_shape(self, rng):
        """Test a window of the wrong length raises ShapeError"""
        encoder = TemporalEncoder(ParamStore(), "audio", rng, embed_dim=8)
        with pytest.raises(ShapeError):
            encoder(np.zeros((1, 15, FEATURE_DIM)))


class TestAudioFile:
    """Test suite for audio track files"""

    def test_save_and_load(self, tmp_path):
        """Test frames and frame rate survive the text format"""
        original = synth_track(np.linspace(0, 1, 8), seed=2, frame_rate=30.0)
        loaded = load_audio_file(save_audio_file(str(tmp_path / "audio.txt"), original))
        assert np.array_equal(loaded.frames, original.frames), "Features should be bit-identical"
        assert loaded.frame_rate == 30.0, "Frame rate header should be read back"

    def test_missing_component(self, tmp_path):
        """Test a 28-component line raises ParseError"""
        path = tmp_path / "audio.txt"
        path.write_text("# rate=25.0\n0 " + " ".join(["0.0"] * 28) + "\n")
        with pytest.raises(ParseError):
            load_audio_file(str(path))
