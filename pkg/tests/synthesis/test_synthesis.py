"""
Face Synthesis Tests
"""
import logging
from dataclasses import replace

import numpy as np
import pytest

from difftalk.audio import AudioWindow
from difftalk.autodiff import ParamStore, Tensor, gradcheck, no_grad
from difftalk.diffusion import upper_rows
from difftalk.exceptions import FrozenParameterError, ShapeError, ValidationError
from difftalk.landmarks import Landmark68, rasterize_batch
from difftalk.synthesis import (
    AudioConditionEncoder,
    CondUNet,
    DualBranchModel,
    LandmarkEncoder,
    ToyAutoencoder,
    build_base,
    generate_face,
    landmark_encoder_forward,
    train_synthesis,
    verify_frozen,
)

logger = logging.getLogger(__name__)


def _randomize_fusion(model: DualBranchModel, seed: int = 0):
    """Give every zero-initialised fusion output projection random weights"""
    rng = np.random.default_rng(seed)
    for module in model.branch.fusion.values():
        weight = module.attn.out_proj.weight
        weight.data = rng.normal(0.0, 0.3, weight.shape)


@pytest.mark.smoke
class TestCondUNet:
    """Test suite for the conditional UNet"""

    def test_output_matches_input_shape(self, rng):
        """Test predicted noise has the latent's shape"""
        unet = CondUNet(ParamStore(), "net", rng, 4, 4, 8, 8)
        z = rng.standard_normal((2, 4, 4, 4))
        out = unet(z, 3)
        logger.info(f"UNet output shape {out.shape}")
        assert out.shape == z.shape, f"Expected {z.shape}, got {out.shape}"

    def test_timestep_changes_output(self, rng):
        """Test the time embedding reaches the output"""
        unet = CondUNet(ParamStore(), "net", rng, 4, 4, 8, 8)
        z = rng.standard_normal((1, 4, 4, 4))
        with no_grad():
            diff = np.abs(unet(z, 1).data - unet(z, 50).data).max()
        assert diff > 0, "Output should depend on t"

    def test_conditioning_tokens_change_output(self, rng):
        """Test cross-attention conditioning reaches the output"""
        unet = CondUNet(ParamStore(), "net", rng, 4, 4, 8, 8)
        z = rng.standard_normal((1, 4, 4, 4))
        tokens = rng.standard_normal((1, 3, 8))
        with no_grad():
            diff = np.abs(unet(z, 2, tokens).data - unet(z, 2).data).max()
        assert diff > 0, "Tokens should change the prediction"

    def test_rejects_bad_inputs(self, rng):
        """Test odd spatial sizes, wrong channels and malformed tokens raise ShapeError"""
        unet = CondUNet(ParamStore(), "net", rng, 4, 4, 8, 8)
        with pytest.raises(ShapeError):
            unet(np.zeros((1, 4, 3, 4)), 1)
        with pytest.raises(ShapeError):
            unet(np.zeros((1, 3, 4, 4)), 1)
        with pytest.raises(ShapeError):
            unet(np.zeros((1, 4, 4, 4)), 1, np.zeros((1, 2, 7)))
        with pytest.raises(ShapeError):
            unet(np.zeros((1, 4, 4, 4)), 1, np.zeros((1, 0, 8)))

    @pytest.mark.critical
    def test_cross_attention_gradients(self, rng):
        """Test analytic gradients through a cross-attention layer match finite differences"""
        store = ParamStore()
        unet = CondUNet(store, "net", rng, 2, 4, 8, 8)
        z = rng.standard_normal((1, 2, 4, 4))
        tokens = Tensor(rng.standard_normal((1, 3, 8)), requires_grad=True)
        query = store["net.mid_attn.attn.q.weight"]

        def loss():
            return (unet(z, 2, tokens) ** 2).sum()

        err = gradcheck(loss, [query, tokens])
        logger.info(f"Cross-attention gradcheck relative error {err:.2e}")
        assert err <= 1e-4, f"Gradient mismatch {err:.2e}"


class TestDualBranch:
    """Test suite for the dual-branch model and its landmark encoder"""

    def test_encoder_copy_starts_from_base(self, untrained):
        """Test the landmark encoder copy is initialised with the base encoder weights"""
        store = untrained.store
        assert isinstance(untrained.branch, LandmarkEncoder), "Expected the landmark branch"
        for name in ("conv_in.weight", "down1.conv1.weight", "downsample.weight", "down2.skip.weight"):
            copy_value = store[f"synth.lmenc.encoder.{name}"].data
            assert np.array_equal(copy_value, store[f"synth.base.{name}"].data), f"{name} not copied"

    @pytest.mark.critical
    def test_fresh_model_equals_base(self, untrained, rng):
        """Test zero-initialised fusion leaves the base prediction untouched"""
        z = rng.standard_normal((2, 4, 4, 4))
        raster = rng.random((2, 1, 32, 32))
        with no_grad():
            fused = untrained(z, 3, raster).data
        assert np.array_equal(fused, untrained.base_eps(z, 3)), "Fresh fusion should add exactly zero"

    @pytest.mark.critical
    def test_zero_tokens_reduce_to_base(self, untrained, rng):
        """Test all-zero guidance tokens give exactly the base prediction"""
        _randomize_fusion(untrained)
        z = rng.standard_normal((2, 4, 4, 4))
        raster = rng.random((2, 1, 32, 32))
        with no_grad():
            tokens = untrained.tokens(raster)
            guided = untrained.eps_from_tokens(z, 3, tokens).data
            zeroed = untrained.eps_from_tokens(z, 3, untrained.branch.zero_tokens(tokens)).data
        base = untrained.base_eps(z, 3)
        assert np.array_equal(zeroed, base), "Zero tokens should reproduce the base output"
        assert np.abs(guided - base).max() > 0, "Real tokens should change the output once fusion is active"

    def test_token_shapes_per_site(self, untrained, rng):
        """Test the landmark encoder emits one token per latent cell at each fusion site"""
        with no_grad():
            tokens = landmark_encoder_forward(untrained, rng.random((3, 1, 32, 32)))
        c = untrained.cfg.base_channels
        logger.info(f"Token shapes: { {k: v.shape for k, v in tokens.items()} }")
        assert tokens["up1"].shape == (3, 16, c), f"up1 tokens {tokens['up1'].shape}"
        assert tokens["up2"].shape == (3, 4, 2 * c), f"up2 tokens {tokens['up2'].shape}"

    def test_tokens_depend_on_landmarks(self, untrained, tiny_dataset):
        """Test different landmark rasters give different tokens"""
        first = Landmark68(tiny_dataset.landmarks[0])
        rasters = rasterize_batch(np.stack([first.points, first.shifted(0.02, 0.03).points]), 32)
        with no_grad():
            tokens = landmark_encoder_forward(untrained, rasters)
        assert np.abs(tokens["up1"].data[0] - tokens["up1"].data[1]).max() > 0, "Tokens should differ"

    def test_blank_raster_is_not_null_guidance(self, untrained):
        """Test an all-zero raster yields bias-driven tokens rather than zero tokens"""
        bias = untrained.branch.hint[0].bias
        bias.data = np.ones(bias.shape)
        with no_grad():
            tokens = landmark_encoder_forward(untrained, np.zeros((1, 1, 32, 32)))
        largest = max(float(np.abs(t.data).max()) for t in tokens.values())
        logger.info(f"largest blank-raster token magnitude {largest:.4f}")
        assert largest > 0.0, "Blank raster tokens come from the biases, not from zero_tokens"

    def test_rejects_bad_raster(self, untrained):
        """Test a raster without the channel axis raises ShapeError"""
        with pytest.raises(ShapeError):
            landmark_encoder_forward(untrained, np.zeros((1, 32, 32)))

    def test_audio_variant(self, small_cfg, rng):
        """Test the audio-conditioned branch emits a fixed token set per site"""
        store = ParamStore()
        cfg = replace(small_cfg, condition="audio")
        ae = ToyAutoencoder(store, rng, cfg.latent_channels)
        model = DualBranchModel(store, ae, build_base(store, cfg), cfg)
        assert isinstance(model.branch, AudioConditionEncoder), "Expected the audio branch"
        assert model.branch_prefix == "synth.audenc", f"Unexpected prefix {model.branch_prefix}"
        with no_grad():
            tokens = model.tokens(rng.standard_normal((2, 16, 29)))
        assert tokens["up1"].shape == (2, 4, cfg.base_channels), f"up1 tokens {tokens['up1'].shape}"
        assert tokens["up2"].shape == (2, 4, 2 * cfg.base_channels), f"up2 tokens {tokens['up2'].shape}"
        with pytest.raises(ValidationError):
            landmark_encoder_forward(model, np.zeros((1, 1, 32, 32)))

    def test_unknown_condition_rejected(self, small_cfg, rng):
        """Test an unknown condition name raises ValidationError"""
        store = ParamStore()
        cfg = replace(small_cfg, condition="text")
        with pytest.raises(ValidationError):
            DualBranchModel(store, ToyAutoencoder(store, rng, 4), build_base(store, cfg), cfg)


class TestAutoencoder:
    """Test suite for the pre-trained latent codec"""

    def test_latent_shape(self, pretrained, tiny_dataset):
        """Test latents are [n, 4, s/8, s/8]"""
        latents = pretrained["latents"]
        s = tiny_dataset.size
        assert latents.shape == (len(tiny_dataset), 4, s // 8, s // 8), f"Got {latents.shape}"

    def test_encode_deterministic(self, pretrained, tiny_dataset):
        """Test encoding twice gives identical latents"""
        ae = pretrained["ae"]
        assert np.array_equal(ae.encode(tiny_dataset.images[:4]), ae.encode(tiny_dataset.images[:4]))

    def test_frozen_with_unit_latent_scale(self, pretrained):
        """Test the codec is frozen and its latents are scaled to unit spread"""
        store = pretrained["store"]
        assert not any(store.is_trainable(p) for p in store.paths("synth.ae")), "Autoencoder should be frozen"
        std = float(pretrained["latents"].std())
        logger.info(f"Scaled latent std {std:.4f}")
        assert abs(std - 1.0) < 1e-6, f"Scaled latents should have unit std, got {std}"

    def test_decode_shape(self, pretrained, tiny_dataset):
        """Test decoding returns uint8 images of the input size"""
        images = pretrained["ae"].decode(pretrained["latents"][:2])
        assert images.dtype == np.uint8, f"Expected uint8, got {images.dtype}"
        assert images.shape == (2, tiny_dataset.size, tiny_dataset.size), f"Got {images.shape}"

    def test_rejects_unaligned_size(self, pretrained):
        """Test image sides that are not multiples of 8 raise ShapeError"""
        with pytest.raises(ShapeError):
            pretrained["ae"].encode(np.zeros((1, 12, 12), dtype=np.uint8))


@pytest.mark.regression
class TestTraining:
    """Test suite for base pre-training and guidance-branch training"""

    def test_base_frozen_after_pretraining(self, pretrained):
        """Test every base parameter is frozen after pre-training"""
        store = pretrained["store"]
        assert store.paths("synth.base"), "Base should have parameters"
        assert not any(store.is_trainable(p) for p in store.paths("synth.base")), "Base should be frozen"
        assert pretrained["base_report"].losses, "Base report should record losses"

    @pytest.mark.critical
    def test_base_untouched_by_synthesis_training(self, pretrained, small_cfg):
        """Test the base checksum survives guidance training and tampering is detected"""
        store = pretrained["store"]
        model = DualBranchModel(store, pretrained["ae"], pretrained["base"], small_cfg)
        before = store.checksum("synth.base")
        branch_before = store.checksum("synth.lmenc")
        report = train_synthesis(model, pretrained["latents"], pretrained["rasters"], pretrained["sched"], small_cfg)
        logger.info(f"Synthesis losses {report.losses}")
        assert store.checksum("synth.base") == before, "Frozen base changed during training"
        assert report.extra["base_checksum"] == before, "Report should record the base checksum"
        assert store.checksum("synth.lmenc") != branch_before, "Guidance branch should be updated"
        assert report.extra["steps"] == small_cfg.synth_epochs * 3, f"Unexpected step count {report.extra['steps']}"
        assert all(np.isfinite(report.losses)), "Losses should be finite"

        weight = store["synth.base.conv_out.weight"]
        weight.data = weight.data + 1e-3
        try:
            with pytest.raises(FrozenParameterError):
                verify_frozen(store, before)
        finally:
            weight.data = weight.data - 1e-3

    def test_mismatched_inputs_rejected(self, untrained, sched, small_cfg):
        """Test latents and conditioning inputs of different lengths raise ShapeError"""
        with pytest.raises(ShapeError):
            train_synthesis(untrained, np.zeros((3, 4, 4, 4)), np.zeros((2, 1, 32, 32)), sched, small_cfg)


class TestGenerateFace:
    """Test suite for frame generation"""

    def test_upper_half_preserved(self, untrained, sched, tiny_dataset):
        """Test the upper half pixels and upper latent rows come from the input"""
        image = tiny_dataset.images[0]
        face = generate_face(untrained, image, Landmark68(tiny_dataset.landmarks[0]), sched, seed=11)
        half = image.shape[0] // 2
        rows = upper_rows(face.latent.shape[-2])
        assert face.image.shape == image.shape, f"Got {face.image.shape}"
        assert np.array_equal(face.image[:half], image[:half]), "Upper half should be copied bit-exactly"
        assert np.array_equal(face.latent[:, :rows], face.z0_upper[:, :rows]), "Upper latent rows must stay clamped"

    def test_same_seed_same_frame(self, untrained, sched, tiny_dataset):
        """Test generation is deterministic for a fixed seed"""
        image = tiny_dataset.images[1]
        guidance = Landmark68(tiny_dataset.landmarks[1])
        first = generate_face(untrained, image, guidance, sched, seed=4)
        second = generate_face(untrained, image, guidance, sched, seed=4)
        assert np.array_equal(first.image, second.image), "Same seed should give the same frame"
        assert np.array_equal(first.latent, second.latent), "Same seed should give the same latent"

    def test_wrong_guidance_type(self, untrained, sched, tiny_dataset):
        """Test an audio window given to a landmark model raises ValidationError"""
        with pytest.raises(ValidationError):
            generate_face(untrained, tiny_dataset.images[0], AudioWindow(np.zeros((16, 29))), sched, seed=0)

    def test_rejects_non_square_image(self, untrained, sched, tiny_dataset):
        """Test a non-square input image raises ShapeError"""
        with pytest.raises(ShapeError):
            generate_face(untrained, np.zeros((16, 24), dtype=np.uint8),
                          Landmark68(tiny_dataset.landmarks[0]), sched, seed=0)

    def test_audio_model_generates(self, small_cfg, sched, tiny_dataset, rng):
        """Test the audio-conditioned variant generates from an audio window"""
        store = ParamStore()
        cfg = replace(small_cfg, condition="audio")
        model = DualBranchModel(store, ToyAutoencoder(store, rng, 4), build_base(store, cfg), cfg)
        image = tiny_dataset.images[2]
        face = generate_face(model, image, AudioWindow(rng.standard_normal((16, 29))), sched, seed=1)
        assert np.array_equal(face.image[:8], image[:8]), "Upper half should be copied bit-exactly"
