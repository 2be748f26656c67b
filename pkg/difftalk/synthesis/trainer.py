"""
Synthesis training stages: unconditional base pre-training and guidance-branch training
"""
import logging
from typing import Optional, Tuple

import numpy as np

from difftalk.autodiff.optim import Adam
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, no_grad
from difftalk.diffusion.noising import forward_noise, masked_noise_loss, noise_loss, partial_forward_noise
from difftalk.diffusion.schedule import NoiseSchedule
from difftalk.exceptions import ConvergenceError, FrozenParameterError, ShapeError, ValidationError
from difftalk.synthesis.config import SynthesisConfig
from difftalk.synthesis.dual_branch import BASE_PREFIX, DualBranchModel
from difftalk.synthesis.unet import CondUNet
from difftalk.utils.training_report import TrainingReport

logger = logging.getLogger(__name__)

MIN_IMPROVEMENT = 0.30


def build_base(store: ParamStore, cfg: SynthesisConfig) -> CondUNet:
    return CondUNet(store, BASE_PREFIX, np.random.default_rng([cfg.seed, 20]), cfg.latent_channels,
                    cfg.base_channels, cfg.d_time, cfg.d_cond, cfg.n_heads)


def _draw(rng: np.random.Generator, sched: NoiseSchedule, shape) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform steps in 1..T (one per batch element) and standard-normal noise"""
    t = rng.integers(1, sched.T + 1, size=shape[0])
    return t, rng.standard_normal(shape)


def validation_loss(base: CondUNet, latents: np.ndarray, sched: NoiseSchedule, seed: int,
                    batch_size: int = 64) -> float:
    """Unmasked denoising loss on fixed (seeded) steps and noise"""
    rng = np.random.default_rng([seed, 21])
    total = 0.0
    for start in range(0, len(latents), batch_size):
        z0 = latents[start:start + batch_size]
        t, eps = _draw(rng, sched, z0.shape)
        with no_grad():
            pred = base(forward_noise(z0, t, eps, sched), t)
        total += noise_loss(eps, pred).item() * len(z0)
    return total / len(latents)


def pretrain_base(latents: np.ndarray, sched: NoiseSchedule, cfg: SynthesisConfig, store: ParamStore,
                  val_latents: Optional[np.ndarray] = None) -> Tuple[CondUNet, TrainingReport]:
    """
    Unconditional denoising pre-training of the base UNet (null token, full-grid noise)

    Stops early once the validation loss has not improved for `base_patience`
    epochs, restores the best epoch and freezes every `synth.base` parameter.

    Raises:
        ValidationError: No latents
        ConvergenceError: Non-finite loss, or too little improvement with strict_convergence
    """
    latents = np.asarray(latents, dtype=np.float64)
    if len(latents) == 0:
        raise ValidationError("base pre-training needs latents")
    val_latents = latents if val_latents is None or len(val_latents) == 0 else np.asarray(val_latents)
    base = build_base(store, cfg)
    optimizer = Adam(store, lr=cfg.base_lr, prefix=BASE_PREFIX)
    rng = np.random.default_rng([cfg.seed, 22])
    report = TrainingReport(stage="base")
    val_curve = []
    best, best_state, stale = np.inf, store.state(BASE_PREFIX), 0
    logger.info(f"Pre-training base UNet on {len(latents)} latents for up to {cfg.base_epochs} epochs")

    for epoch in range(1, cfg.base_epochs + 1):
        total = 0.0
        order = rng.permutation(len(latents))
        for start in range(0, len(order), cfg.batch_size):
            z0 = latents[order[start:start + cfg.batch_size]]
            t, eps = _draw(rng, sched, z0.shape)
            store.zero_grad()
            loss = noise_loss(eps, base(forward_noise(z0, t, eps, sched), t))
            loss.backward()
            optimizer.step()
            total += loss.item() * len(z0)
        train_loss = total / len(latents)
        val = validation_loss(base, val_latents, sched, cfg.seed)
        if not (np.isfinite(train_loss) and np.isfinite(val)):
            raise ConvergenceError("base", train_loss, f"non-finite loss at epoch {epoch}")
        report.losses.append(train_loss)
        val_curve.append(val)
        logger.info(f"base epoch {epoch}/{cfg.base_epochs}: loss={train_loss:.5g} val={val:.5g}")
        if val < best:
            best, best_state, stale = val, store.state(BASE_PREFIX), 0
        else:
            stale += 1
            if stale >= cfg.base_patience:
                logger.info(f"Validation loss plateaued for {stale} epochs, stopping at epoch {epoch}")
                break

    store.load_state(best_state, keep_flags=True)
    store.freeze(BASE_PREFIX)
    improvement = 1.0 - best / val_curve[0]
    report.extra.update(val_losses=val_curve, best_val=best, improvement=improvement)
    report.converged = improvement >= MIN_IMPROVEMENT
    if not report.converged:
        message = f"validation loss improved by {improvement:.1%}, below {MIN_IMPROVEMENT:.0%}"
        if cfg.strict_convergence:
            raise ConvergenceError("base", best, message)
        logger.warning(f"Base UNet: {message}")
    return base, report


def train_synthesis(model: DualBranchModel, latents: np.ndarray, cond_inputs: np.ndarray,
                    sched: NoiseSchedule, cfg: SynthesisConfig) -> TrainingReport:
    """
    Train only the guidance branch on the lower-region masked noise loss

    Each step: t and ε drawn per sample, z_t from region-split noising,
    ε′ from the dual-branch model, loss over the lower latent rows.

    Args:
        model: Dual-branch model with a frozen base
        latents: Scaled clean latents [n, c, h, w]
        cond_inputs: Landmark rasters [n, 1, s, s] or audio windows [n, 16, 29]
        sched: Noise schedule
        cfg: Synthesis settings (synth_* fields, batch_size, seed)

    Raises:
        FrozenParameterError: Base parameters changed
        ConvergenceError: Non-finite loss
    """
    latents = np.asarray(latents, dtype=np.float64)
    if len(latents) != len(cond_inputs):
        raise ShapeError(f"{len(latents)} latents for {len(cond_inputs)} conditioning inputs")
    if len(latents) == 0:
        raise ValidationError("synthesis training needs latents")
    store = model.store
    store.freeze(BASE_PREFIX)
    base_checksum = store.checksum(BASE_PREFIX)
    optimizer = Adam(store, lr=cfg.synth_lr, prefix=model.branch_prefix)
    rng = np.random.default_rng([cfg.seed, 31])
    report = TrainingReport(stage="synthesis")
    logger.info(f"Training {model.branch_prefix} on {len(latents)} frames for {cfg.synth_epochs} epochs "
                f"(condition={cfg.condition})")

    steps = 0
    for epoch in range(1, cfg.synth_epochs + 1):
        total = 0.0
        order = rng.permutation(len(latents))
        for start in range(0, len(order), cfg.batch_size):
            rows = order[start:start + cfg.batch_size]
            z0 = latents[rows]
            t, eps = _draw(rng, sched, z0.shape)
            store.zero_grad()
            pred = model(Tensor(partial_forward_noise(z0, t, eps, sched)), t, cond_inputs[rows])
            loss = masked_noise_loss(eps, pred, latents.shape[-2:])
            loss.backward()
            optimizer.step()
            total += loss.item() * len(rows)
            steps += 1
        epoch_loss = total / len(latents)
        if not np.isfinite(epoch_loss):
            raise ConvergenceError("synthesis", epoch_loss, f"non-finite loss at epoch {epoch}")
        verify_frozen(store, base_checksum)
        report.losses.append(epoch_loss)
        logger.info(f"synthesis epoch {epoch}/{cfg.synth_epochs}: masked loss={epoch_loss:.5g}")

    report.extra.update(steps=steps, base_checksum=base_checksum)
    if len(report.losses) > 1:
        report.extra["improvement"] = 1.0 - report.final_loss / report.losses[0]
        report.converged = report.extra["improvement"] >= MIN_IMPROVEMENT
    return report


def verify_frozen(store: ParamStore, expected: str) -> None:
    """
    Raises:
        FrozenParameterError: The base checksum differs from expected
    """
    actual = store.checksum(BASE_PREFIX)
    if actual != expected:
        raise FrozenParameterError(f"frozen base parameters changed (checksum {expected[:12]} -> {actual[:12]})")
