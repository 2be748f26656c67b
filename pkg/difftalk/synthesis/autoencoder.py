"""
Toy convolutional autoencoder standing in for a pre-trained image VAE

Fully convolutional with three stride-2 stages, so a 64×64 image maps to a
4×8×8 latent and latent row i covers image rows [8i, 8i+8). No KL term.
After pre-training, `synth.ae.latent_scale` (frozen) holds the inverse
standard deviation of the training latents; `encode`/`decode` work on the
scaled, unit-variance latents the diffusion stages see.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from difftalk.autodiff import functional as fn
from difftalk.autodiff.nn import Conv2d, Module
from difftalk.autodiff.optim import Adam
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, no_grad
from difftalk.exceptions import ConvergenceError, ShapeError, ValidationError
from difftalk.synthesis.config import SynthesisConfig
from difftalk.utils.training_report import TrainingReport

logger = logging.getLogger(__name__)

AE_PREFIX = "synth.ae"
ENCODER_CHANNELS = (16, 32, 32)
DECODER_CHANNELS = (32, 32, 16)


def images_to_unit(images: np.ndarray) -> np.ndarray:
    """uint8 [.., H, W] -> float in [-1, 1] with a channel axis, [B, 1, H, W]"""
    x = np.asarray(images, dtype=np.float64) / 127.5 - 1.0
    if x.ndim == 2:
        x = x[None]
    return x[:, None]


def unit_to_images(x: np.ndarray) -> np.ndarray:
    """[B, 1, H, W] in [-1, 1] -> uint8 [B, H, W]"""
    return np.clip(np.round((np.asarray(x)[:, 0] + 1.0) * 127.5), 0, 255).astype(np.uint8)


class ToyAutoencoder(Module):
    """
    Image <-> latent codec

    Attributes:
        latent_scale: Frozen (1,) parameter multiplying raw latents
    """

    def __init__(self, store: ParamStore, rng: np.random.Generator, latent_channels: int = 4):
        super().__init__(store, AE_PREFIX, rng)
        self.latent_channels = latent_channels
        channels = (1,) + ENCODER_CHANNELS
        self.down = [
            Conv2d(store, self.path(f"enc{i}"), rng, channels[i], channels[i + 1], kernel=3, stride=2)
            for i in range(len(ENCODER_CHANNELS))
        ]
        self.to_latent = Conv2d(store, self.path("enc_out"), rng, ENCODER_CHANNELS[-1], latent_channels, kernel=1)
        self.from_latent = Conv2d(store, self.path("dec_in"), rng, latent_channels, DECODER_CHANNELS[0], kernel=3)
        dec = DECODER_CHANNELS + (DECODER_CHANNELS[-1],)
        self.up = [
            Conv2d(store, self.path(f"dec{i}"), rng, dec[i], dec[i + 1], kernel=3)
            for i in range(len(DECODER_CHANNELS))
        ]
        self.to_image = Conv2d(store, self.path("dec_out"), rng, dec[-1], 1, kernel=3)
        self.latent_scale = store.add(self.path("latent_scale"), np.ones(1), trainable=False)

    @property
    def scale(self) -> float:
        return float(self.latent_scale.data[0])

    def encode_tensor(self, x: Tensor) -> Tensor:
        """[B, 1, H, W] in [-1, 1] -> raw latent [B, c, H/8, W/8]"""
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2] % 8 or x.shape[3] % 8:
            raise ShapeError(f"autoencoder input must be [B, 1, H, W] with H, W multiples of 8, got {x.shape}")
        h = x
        for conv in self.down:
            h = conv(h).leaky_relu()
        return self.to_latent(h)

    def decode_tensor(self, z: Tensor) -> Tensor:
        """Raw latent -> image in [-1, 1] (unbounded output)"""
        h = self.from_latent(z).leaky_relu()
        for conv in self.up:
            h = conv(fn.upsample(h)).leaky_relu()
        return self.to_image(h)

    def forward(self, x: Tensor) -> Tensor:
        return self.decode_tensor(self.encode_tensor(x))

    def encode(self, images: np.ndarray) -> np.ndarray:
        """uint8 images [B, H, W] (or one [H, W]) -> scaled latents [B, c, h, w]"""
        with no_grad():
            return self.encode_tensor(Tensor(images_to_unit(images))).data * self.scale

    def decode(self, latents: np.ndarray) -> np.ndarray:
        """Scaled latents [B, c, h, w] -> uint8 images [B, H, W]"""
        latents = np.asarray(latents, dtype=np.float64)
        if latents.ndim == 3:
            latents = latents[None]
        with no_grad():
            return unit_to_images(self.decode_tensor(Tensor(latents / self.scale)).data)


def reconstruction_mse(ae: ToyAutoencoder, images: np.ndarray, batch_size: int = 64) -> float:
    """Mean squared reconstruction error on the [0, 1] pixel scale"""
    total = 0.0
    for start in range(0, len(images), batch_size):
        x = images_to_unit(images[start:start + batch_size])
        with no_grad():
            recon = ae(Tensor(x)).data
        total += float(np.sum(((recon - x) / 2.0) ** 2))
    return total / images.size


def encode_all(ae: ToyAutoencoder, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
    return np.concatenate([ae.encode(images[s:s + batch_size]) for s in range(0, len(images), batch_size)])


def pretrain_autoencoder(images: np.ndarray, cfg: SynthesisConfig, val_images: Optional[np.ndarray] = None,
                         store: Optional[ParamStore] = None) -> Tuple[ToyAutoencoder, TrainingReport]:
    """
    Train the autoencoder on plain reconstruction MSE, set the latent scale and freeze it

    Args:
        images: uint8 training images [n, H, W]
        cfg: Synthesis settings (ae_* fields, batch_size, seed)
        val_images: Held-out images for the MSE target (training images when absent)
        store: Parameter store to build into

    Returns:
        (frozen autoencoder, report with held-out MSE and the converged flag)

    Raises:
        ValidationError: No images
        ConvergenceError: Non-finite loss, or target missed with strict_convergence
    """
    images = np.asarray(images)
    if len(images) == 0:
        raise ValidationError("autoencoder pre-training needs images")
    store = store if store is not None else ParamStore()
    ae = ToyAutoencoder(store, np.random.default_rng([cfg.seed, 10]), cfg.latent_channels)
    optimizer = Adam(store, lr=cfg.ae_lr, prefix=AE_PREFIX)
    rng = np.random.default_rng([cfg.seed, 11])
    report = TrainingReport(stage="autoencoder")
    logger.info(f"Pre-training autoencoder on {len(images)} images for {cfg.ae_epochs} epochs")

    trainable = [p for p in store.paths(AE_PREFIX) if store.is_trainable(p)]
    for epoch in range(1, cfg.ae_epochs + 1):
        total = 0.0
        order = rng.permutation(len(images))
        for start in range(0, len(order), cfg.batch_size):
            rows = order[start:start + cfg.batch_size]
            store.zero_grad()
            x = images_to_unit(images[rows])
            loss = fn.mse(ae(Tensor(x)), x)
            loss.backward()
            optimizer.step()
            total += loss.item() * len(rows)
        epoch_loss = total / len(images) / 4.0
        if not np.isfinite(epoch_loss):
            raise ConvergenceError("autoencoder", epoch_loss, f"non-finite loss at epoch {epoch}")
        report.losses.append(epoch_loss)
        logger.info(f"autoencoder epoch {epoch}/{cfg.ae_epochs}: mse={epoch_loss:.6g}")

    held_out = reconstruction_mse(ae, val_images if val_images is not None and len(val_images) else images)
    report.extra["heldout_mse"] = held_out
    report.converged = held_out <= cfg.ae_target_mse
    if not report.converged:
        message = f"held-out reconstruction MSE {held_out:.3g} above target {cfg.ae_target_mse:.3g}"
        if cfg.strict_convergence:
            raise ConvergenceError("autoencoder", held_out, message)
        logger.warning(f"Autoencoder: {message}")

    latents = encode_all(ae, images)
    std = float(latents.std())
    ae.latent_scale.data = np.array([1.0 / std if std > 0 else 1.0])
    report.extra["latent_scale"] = float(ae.latent_scale.data[0])
    store.freeze(AE_PREFIX)
    logger.info(f"Autoencoder frozen ({len(trainable)} tensors), held-out mse={held_out:.4g}, "
                f"latent scale={ae.scale:.4g}")
    return ae, report
