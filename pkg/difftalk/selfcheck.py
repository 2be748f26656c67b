"""
Invariant self-check suite run by `difftalk selfcheck`

Every check builds tiny random instances, so the whole suite runs in seconds
without any trained checkpoint:
- finite-difference gradient checks of the differentiable operations
- forward-noising, region-split noising and DDIM algebra
- upper-row clamping of the sampling loop
- frozen-base checksum and the zero-guidance identity
- audio locality of the completion agent
- landmark split/merge and schedule file round trips
"""
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from difftalk.audio.encoder import TemporalEncoder
from difftalk.audio.track import FEATURE_DIM, WINDOW
from difftalk.autodiff import functional as fn
from difftalk.autodiff.gradcheck import gradcheck
from difftalk.autodiff.nn import MultiHeadAttention
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor, no_grad
from difftalk.completion.model import CompletionConfig, CompletionModel, complete_points
from difftalk.dataset.geometry import FaceParams, landmarks_from_params
from difftalk.diffusion.noising import (
    ddim_step,
    forward_noise,
    masked_noise_loss,
    partial_forward_noise,
    upper_rows,
)
from difftalk.diffusion.sampler import sample_loop
from difftalk.diffusion.schedule import load_schedule, make_schedule, save_schedule
from difftalk.landmarks.landmark import merge, split
from difftalk.landmarks.partition import DEFAULT_PARTITION
from difftalk.landmarks.raster import rasterize_batch
from difftalk.synthesis.autoencoder import ToyAutoencoder
from difftalk.synthesis.config import SynthesisConfig
from difftalk.synthesis.dual_branch import BASE_PREFIX, DualBranchModel
from difftalk.synthesis.trainer import build_base, train_synthesis

logger = logging.getLogger(__name__)

GRAD_TOLERANCE = 1e-4


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class SelfCheckResult:
    """Outcome of the whole suite"""
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def lines(self) -> List[str]:
        out = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in self.checks]
        failed = sum(not c.passed for c in self.checks)
        out.append(f"{len(self.checks) - failed}/{len(self.checks)} checks passed")
        return out

    def write(self, path: str) -> str:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as handle:
            handle.write("\n".join(self.lines()) + "\n")
        return path


Check = Callable[[np.random.Generator], Tuple[bool, str]]


# ============== GRADIENTS ==============

def _leaf(rng: np.random.Generator, *shape) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=True)


def _within(error: float) -> Tuple[bool, str]:
    return error <= GRAD_TOLERANCE, f"max relative error {error:.2e}"


def check_grad_matmul(rng):
    a, b = _leaf(rng, 2, 3, 4), _leaf(rng, 4, 5)
    return _within(gradcheck(lambda: fn.matmul(a, b).sum(), [a, b]))


def check_grad_softmax(rng):
    x, w = _leaf(rng, 3, 5), rng.standard_normal((3, 5))
    return _within(gradcheck(lambda: (fn.softmax(x) * w).sum(), [x]))


def check_grad_attention(rng):
    q, k, v = _leaf(rng, 2, 3, 4), _leaf(rng, 2, 5, 4), _leaf(rng, 2, 5, 3)
    w = rng.standard_normal((2, 3, 3))
    return _within(gradcheck(lambda: (fn.attention(q, k, v) * w).sum(), [q, k, v]))


def check_grad_conv(rng):
    x1, w1 = _leaf(rng, 2, 3, 9), _leaf(rng, 4, 3, 3)
    x2, w2 = _leaf(rng, 1, 2, 6, 6), _leaf(rng, 3, 2, 3, 3)
    e1 = gradcheck(lambda: (fn.conv1d(x1, w1, stride=2, padding=1) ** 2).sum(), [x1, w1])
    e2 = gradcheck(lambda: (fn.upsample(fn.conv2d(x2, w2, stride=2, padding=1)) ** 2).sum(), [x2, w2])
    return _within(max(e1, e2))


def check_grad_layer_norm(rng):
    x, gain, bias = _leaf(rng, 3, 6), _leaf(rng, 6), _leaf(rng, 6)
    w = rng.standard_normal((3, 6))
    return _within(gradcheck(lambda: (fn.layer_norm(x, gain, bias) * w).sum(), [x, gain, bias]))


def check_grad_multihead(rng):
    store = ParamStore()
    attn = MultiHeadAttention(store, "attn", rng, 4, 6, 4, n_heads=2)
    x, memory = _leaf(rng, 1, 3, 4), _leaf(rng, 1, 5, 6)
    w = rng.standard_normal((1, 3, 4))
    tensors = [x, memory, store["attn.q.weight"], store["attn.v.weight"]]
    return _within(gradcheck(lambda: (attn(x, memory) * w).sum(), tensors))


def check_grad_temporal_conv(rng):
    store = ParamStore()
    encoder = TemporalEncoder(store, "audio", rng, embed_dim=8)
    windows = _leaf(rng, 1, WINDOW, FEATURE_DIM)
    tensors = [windows, store["audio.conv0.weight"]]
    return _within(gradcheck(lambda: (encoder(windows) ** 2).sum(), tensors))


def check_grad_unet_fusion(rng):
    store = ParamStore()
    unet = build_base(store, SynthesisConfig(base_channels=4, d_time=8, d_cond=8))
    model = DualBranchModel(store, None, unet, SynthesisConfig(base_channels=4, d_time=8, d_cond=8))
    fusion = model.branch.fusion["up1"]
    # non-zero output projection, otherwise nothing upstream of it receives gradient
    fusion.attn.out_proj.weight.data = rng.standard_normal(fusion.attn.out_proj.weight.shape) * 0.5
    z = _leaf(rng, 1, 4, 2, 2)
    raster = rng.random((1, 1, 16, 16))
    tensors = [z, fusion.attn.v_proj.weight, fusion.attn.out_proj.weight]
    return _within(gradcheck(lambda: (model(z, 3, raster) ** 2).sum(), tensors))


# ============== DIFFUSION ALGEBRA ==============

def check_noise_zero_eps(rng):
    sched = make_schedule(20)
    z0 = rng.standard_normal((4, 8, 8))
    worst = max(float(np.max(np.abs(forward_noise(z0, t, np.zeros_like(z0), sched)
                                    - np.sqrt(sched.alpha_bar_at(t)) * z0))) for t in (1, 10, 20))
    return worst == 0.0, f"max deviation {worst:.1e}"


def check_upper_rows_preserved(rng):
    sched = make_schedule(20)
    z0 = rng.standard_normal((2, 4, 8, 8))
    rows = upper_rows(8)
    ok = all(np.array_equal(partial_forward_noise(z0, t, rng.standard_normal(z0.shape), sched)[..., :rows, :],
                            z0[..., :rows, :]) for t in (1, 10, 20))
    return ok, "upper rows bit-identical at t in {1, T/2, T}"


def check_masked_loss_upper_insensitive(rng):
    eps = rng.standard_normal((2, 4, 8, 8))
    pred = rng.standard_normal(eps.shape)
    changed = pred.copy()
    changed[..., :4, :] += 100.0
    a, b = masked_noise_loss(eps, pred).item(), masked_noise_loss(eps, changed).item()
    return a == b, f"loss {a:.6g} unchanged under upper-row edits"


def check_ddim_inversion(rng):
    sched = make_schedule(20)
    z0, eps = rng.standard_normal((4, 8, 8)), rng.standard_normal((4, 8, 8))
    error = float(np.max(np.abs(ddim_step(forward_noise(z0, 1, eps, sched), eps, 1, sched) - z0)))
    return error <= 1e-10, f"one-step inversion error {error:.1e}"


def check_alpha_bar_product(rng):
    sched = make_schedule(50)
    error = float(np.max(np.abs(np.cumprod(1.0 - sched.beta) - sched.alpha_bar)))
    with tempfile.TemporaryDirectory() as tmp:
        reloaded = load_schedule(save_schedule(os.path.join(tmp, "schedule.txt"), sched))
    drift = float(np.max(np.abs(reloaded.alpha_bar - sched.alpha_bar)))
    return error <= 1e-12 and drift <= 1e-10, f"product error {error:.1e}, file round trip {drift:.1e}"


def check_sampler_clamp(rng):
    sched = make_schedule(10)
    z0 = rng.standard_normal((4, 8, 8))
    out = sample_loop(lambda z, t, c: np.random.default_rng(t).standard_normal(z.shape), z0, None, sched, seed=3)
    return np.array_equal(out[:, :4], z0[:, :4]), "sampled upper rows equal the input's"


# ============== MODEL CONTRACTS ==============

def check_frozen_base(rng):
    cfg = SynthesisConfig(base_channels=4, d_time=8, d_cond=8, synth_epochs=2, batch_size=2)
    store = ParamStore()
    ae = ToyAutoencoder(store, rng, cfg.latent_channels)
    model = DualBranchModel(store, ae, build_base(store, cfg), cfg)
    store.freeze(BASE_PREFIX)
    before = store.checksum(BASE_PREFIX)
    latents = rng.standard_normal((4, 4, 2, 2))
    points = np.stack([landmarks_from_params(FaceParams(m=m)).points for m in (0.1, 0.4, 0.7, 1.0)])
    rasters = rasterize_batch(points, 16)
    train_synthesis(model, latents, rasters, make_schedule(10), cfg)
    unchanged = store.checksum(BASE_PREFIX) == before

    z = rng.standard_normal((1, 4, 2, 2))
    with no_grad():
        zeroed = model.branch.zero_tokens(model.tokens(rasters[:1]))
        guided = model.eps_from_tokens(z, 5, zeroed).data
    gap = float(np.max(np.abs(guided - model.base_eps(z, 5))))
    return unchanged and gap <= 1e-9, f"checksum {'unchanged' if unchanged else 'CHANGED'}, zero-guidance gap {gap:.1e}"


def check_audio_locality(rng):
    model = CompletionModel(ParamStore(), CompletionConfig(d_model=16, n_layers=1), rng)
    # the offset head starts at zero; give it weights so audio actually moves the mouth
    model.am.coord_out.fc2.weight.data = rng.standard_normal(model.am.coord_out.fc2.weight.shape)
    upper = landmarks_from_params(FaceParams()).points[list(DEFAULT_PARTITION.upper_input)]
    emb = rng.standard_normal((2, model.cfg.audio_dim))
    own = complete_points(model, upper[None], emb[:1])[0]
    swapped = complete_points(model, upper[None], emb[1:])[0]
    outside = [i for i in range(68) if i not in DEFAULT_PARTITION.mouth]
    identical = np.array_equal(own[outside], swapped[outside])
    moved = not np.array_equal(own[list(DEFAULT_PARTITION.mouth)], swapped[list(DEFAULT_PARTITION.mouth)])
    return identical and moved, "only mouth points depend on audio"


def check_split_merge(rng):
    lm = landmarks_from_params(FaceParams(m=float(rng.random())))
    return merge(*split(lm)) == lm, "merge(split(lm)) == lm"


CHECKS: List[Tuple[str, Check]] = [
    ("grad.matmul", check_grad_matmul),
    ("grad.softmax", check_grad_softmax),
    ("grad.attention", check_grad_attention),
    ("grad.conv", check_grad_conv),
    ("grad.layer_norm", check_grad_layer_norm),
    ("grad.multihead_attention", check_grad_multihead),
    ("grad.temporal_conv", check_grad_temporal_conv),
    ("grad.unet_fusion", check_grad_unet_fusion),
    ("diffusion.zero_noise", check_noise_zero_eps),
    ("diffusion.upper_rows", check_upper_rows_preserved),
    ("diffusion.masked_loss", check_masked_loss_upper_insensitive),
    ("diffusion.ddim_inversion", check_ddim_inversion),
    ("diffusion.alpha_bar", check_alpha_bar_product),
    ("diffusion.sampler_clamp", check_sampler_clamp),
    ("synthesis.frozen_base", check_frozen_base),
    ("completion.audio_locality", check_audio_locality),
    ("landmarks.split_merge", check_split_merge),
]


def run_selfcheck(seed: int = 0) -> SelfCheckResult:
    """Run every check; a raising check counts as a failure"""
    result = SelfCheckResult()
    for position, (name, check) in enumerate(CHECKS):
        rng = np.random.default_rng([seed, 100 + position])
        start = time.perf_counter()
        try:
            passed, detail = check(rng)
        except Exception as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        result.checks.append(CheckResult(name, bool(passed), detail, elapsed))
        log = logger.info if passed else logger.error
        log(f"{'PASS' if passed else 'FAIL'} {name}: {detail} ({elapsed:.2f}s)")
    logger.info(f"Self-check: {sum(c.passed for c in result.checks)}/{len(result.checks)} passed")
    return result
