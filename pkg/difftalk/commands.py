"""
Pipeline commands behind the CLI

Each command takes a RunConfig, writes its artifacts plus a manifest and
returns the produced paths. Artifact layout:

    <paths.dataset>/                        gen-data
    <paths.checkpoints>/landmarks[-ablate-am]/  train-landmarks
    <paths.checkpoints>/face[-audio]/       train-face (ae, base, guidance branch, schedule)
    <paths.outputs>/                        sample (images, landmarks.txt, overlays/)
    <paths.outputs>/eval/                   eval
    <paths.outputs>/selfcheck/              selfcheck
"""
import logging
import os
from typing import Dict, Optional, Tuple

import numpy as np

from difftalk.audio.track import window, windows
from difftalk.autodiff.checkpoint import load_checkpoint, save_checkpoint
from difftalk.autodiff.params import ParamStore
from difftalk.completion.data import CompletionDataset
from difftalk.completion.model import CompletionModel, clip_to_canvas, complete_points, embed_audio
from difftalk.completion.trainer import train_completion
from difftalk.dataset.generate import LANDMARK_FILE, gen_sequence, image_path
from difftalk.dataset.loader import FaceDataset, load_dataset, train_test_split
from difftalk.diffusion.schedule import NoiseSchedule, load_schedule, make_schedule, save_schedule
from difftalk.exceptions import StageMissingError, ValidationError
from difftalk.landmarks.io import save_landmark_file
from difftalk.landmarks.landmark import Landmark68
from difftalk.landmarks.partition import DEFAULT_PARTITION
from difftalk.landmarks.raster import rasterize_batch
from difftalk.metrics.evaluate import REPORT_NAME, evaluate
from difftalk.selfcheck import run_selfcheck
from difftalk.synthesis.autoencoder import AE_PREFIX, ToyAutoencoder, encode_all, pretrain_autoencoder
from difftalk.synthesis.config import CONDITION_AUDIO
from difftalk.synthesis.dual_branch import BASE_PREFIX, DualBranchModel
from difftalk.synthesis.generate import generate_face
from difftalk.synthesis.trainer import build_base, pretrain_base, train_synthesis
from difftalk.utils.config_reader import RunConfig
from difftalk.utils.image_io import landmark_overlay, save_png, save_pgm
from difftalk.utils.manifest import write_manifest
from difftalk.utils.training_report import save_loss_curve

logger = logging.getLogger(__name__)

COMPLETION_CHECKPOINT = "completion.npz"
AE_CHECKPOINT = "ae.npz"
BASE_CHECKPOINT = "base.npz"
BRANCH_CHECKPOINT = "branch.npz"
SCHEDULE_FILE = "schedule.txt"
OVERLAY_DIR = "overlays"

Paths = Dict[str, str]


# ============== ARTIFACT LOCATIONS ==============

def landmarks_dir(cfg: RunConfig) -> str:
    name = "landmarks-ablate-am" if cfg.completion.ablate_am else "landmarks"
    return os.path.join(cfg.paths.checkpoints, name)


def face_dir(cfg: RunConfig) -> str:
    name = "face-audio" if cfg.synthesis.condition == CONDITION_AUDIO else "face"
    return os.path.join(cfg.paths.checkpoints, name)


def _require(path: str, stage: str, command: str) -> str:
    if not os.path.exists(path):
        raise StageMissingError(stage, path, command)
    return path


def _dataset(cfg: RunConfig) -> FaceDataset:
    _require(os.path.join(cfg.paths.dataset, LANDMARK_FILE), "gen-data", "gen-data")
    return load_dataset(cfg.paths.dataset)


def _split(cfg: RunConfig, dataset: FaceDataset) -> Tuple[np.ndarray, np.ndarray]:
    return train_test_split(len(dataset), cfg.data.test_frames)


def _schedule(cfg: RunConfig) -> NoiseSchedule:
    return make_schedule(cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end)


# ============== GEN-DATA ==============

def gen_data(cfg: RunConfig) -> Paths:
    out_dir = gen_sequence(cfg.paths.dataset, cfg.data.n_frames, cfg.seed, cfg.data.image_size,
                           cfg.data.audio_noise, config=cfg.to_dict())
    return {"dataset": out_dir}


# ============== TRAIN-LANDMARKS ==============

def train_landmarks(cfg: RunConfig) -> Paths:
    """Train the completion agent on the training split and record its held-out distance"""
    dataset = _dataset(cfg)
    train_idx, test_idx = _split(cfg, dataset)
    train = CompletionDataset.from_face_dataset(dataset, train_idx)
    holdout = CompletionDataset.from_face_dataset(dataset, test_idx)
    store = ParamStore()
    _, report = train_completion(train, cfg.completion, holdout=holdout, store=store)

    out_dir = landmarks_dir(cfg)
    paths = {
        "checkpoint": save_checkpoint(store, os.path.join(out_dir, COMPLETION_CHECKPOINT), "completion"),
        "report": report.save(os.path.join(out_dir, "completion_report.yaml")),
        "loss_curve": save_loss_curve(os.path.join(out_dir, "completion_loss.txt"), report.losses),
    }
    extra = {"train_frames": len(train), "test_frames": len(holdout), "files": sorted(paths.values())}
    if "holdout_distance" in report.extra:
        extra["holdout_distance"] = float(report.extra["holdout_distance"])
    paths["manifest"] = write_manifest(out_dir, "train-landmarks", cfg.seed, cfg.to_dict(), extra)
    return paths


def load_completion(cfg: RunConfig, store: ParamStore) -> CompletionModel:
    path = _require(os.path.join(landmarks_dir(cfg), COMPLETION_CHECKPOINT), "train-landmarks", "train-landmarks")
    model = CompletionModel(store, cfg.completion)
    load_checkpoint(store, path)
    return model


# ============== TRAIN-FACE ==============

def train_face(cfg: RunConfig) -> Paths:
    """
    Autoencoder, base UNet and guidance branch in order

    A stage whose checkpoint already exists is loaded instead of retrained, as
    long as every earlier stage was loaded too.
    """
    dataset = _dataset(cfg)
    train_idx, test_idx = _split(cfg, dataset)
    out_dir = face_dir(cfg)
    scfg = cfg.synthesis
    sched = _schedule(cfg)
    store = ParamStore()
    paths: Paths = {"schedule": save_schedule(os.path.join(out_dir, SCHEDULE_FILE), sched)}
    reused = []
    fresh = False

    ae_path = os.path.join(out_dir, AE_CHECKPOINT)
    if os.path.isfile(ae_path):
        ae = ToyAutoencoder(store, np.random.default_rng([scfg.seed, 10]), scfg.latent_channels)
        load_checkpoint(store, ae_path)
        store.freeze(AE_PREFIX)
        reused.append("autoencoder")
    else:
        ae, report = pretrain_autoencoder(dataset.images[train_idx], scfg, dataset.images[test_idx], store)
        save_checkpoint(store, ae_path, AE_PREFIX)
        paths["ae_report"] = report.save(os.path.join(out_dir, "ae_report.yaml"))
        fresh = True
    paths["ae"] = ae_path

    latents = encode_all(ae, dataset.images[train_idx])
    val_latents = encode_all(ae, dataset.images[test_idx]) if len(test_idx) else None
    base_path = os.path.join(out_dir, BASE_CHECKPOINT)
    if os.path.isfile(base_path) and not fresh:
        base = build_base(store, scfg)
        load_checkpoint(store, base_path)
        store.freeze(BASE_PREFIX)
        reused.append("base")
    else:
        base, report = pretrain_base(latents, sched, scfg, store, val_latents)
        save_checkpoint(store, base_path, BASE_PREFIX)
        paths["base_report"] = report.save(os.path.join(out_dir, "base_report.yaml"))
        fresh = True
    paths["base"] = base_path

    model = DualBranchModel(store, ae, base, scfg)
    branch_path = os.path.join(out_dir, BRANCH_CHECKPOINT)
    if os.path.isfile(branch_path) and not fresh:
        reused.append("synthesis")
    else:
        report = train_synthesis(model, latents, _condition_inputs(cfg, dataset, train_idx), sched, scfg)
        save_checkpoint(store, branch_path, model.branch_prefix)
        paths["synth_report"] = report.save(os.path.join(out_dir, "synth_report.yaml"))
    paths["branch"] = branch_path

    if reused:
        logger.info(f"Reused existing checkpoints for: {', '.join(reused)}")
    paths["manifest"] = write_manifest(out_dir, "train-face", cfg.seed, cfg.to_dict(), {
        "train_frames": int(len(train_idx)),
        "reused_stages": reused,
        "files": sorted(paths.values()),
    })
    return paths


def _condition_inputs(cfg: RunConfig, dataset: FaceDataset, indices: np.ndarray) -> np.ndarray:
    """Ground-truth landmark rasters (or audio windows) used as guidance during training"""
    if cfg.synthesis.condition == CONDITION_AUDIO:
        return windows(dataset.audio, indices)
    return rasterize_batch(dataset.landmarks[indices], dataset.size)


def load_face(cfg: RunConfig, store: ParamStore) -> Tuple[DualBranchModel, NoiseSchedule]:
    out_dir = face_dir(cfg)
    scfg = cfg.synthesis
    paths = [_require(os.path.join(out_dir, name), "train-face", "train-face")
             for name in (AE_CHECKPOINT, BASE_CHECKPOINT, BRANCH_CHECKPOINT, SCHEDULE_FILE)]
    ae = ToyAutoencoder(store, np.random.default_rng([scfg.seed, 10]), scfg.latent_channels)
    base = build_base(store, scfg)
    model = DualBranchModel(store, ae, base, scfg)
    for path in paths[:3]:
        load_checkpoint(store, path)
    return model, load_schedule(paths[3])


# ============== SAMPLE ==============

def select_frames(cfg: RunConfig, test_idx: np.ndarray, frames: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """
    Dataset frame indices for an inclusive range relative to the held-out split

    Raises:
        ValidationError: Range outside the held-out split
    """
    if len(test_idx) == 0:
        raise ValidationError("no held-out frames to sample (data.test_frames is 0)")
    if frames is None:
        return test_idx[:cfg.sample.n_frames]
    start, end = frames
    if end >= len(test_idx):
        raise ValidationError(f"--frames {start}..{end} exceeds the {len(test_idx)} held-out frames")
    return test_idx[start:end + 1]


def sample(cfg: RunConfig, frames: Optional[Tuple[int, int]] = None) -> Paths:
    """
    Complete landmarks from upper points plus audio, then generate each frame

    Frame i is sampled with seed `cfg.seed ^ i`.
    """
    dataset = _dataset(cfg)
    _, test_idx = _split(cfg, dataset)
    selected = select_frames(cfg, test_idx, frames)
    store = ParamStore()
    completion = load_completion(cfg, store)
    model, sched = load_face(cfg, store)
    out_dir = cfg.paths.outputs
    logger.info(f"Sampling {len(selected)} frames ({selected[0]}..{selected[-1]}) into {out_dir}")

    upper_idx = list(DEFAULT_PARTITION.upper_input)
    audio = windows(dataset.audio, selected)
    completed = clip_to_canvas(
        complete_points(completion, dataset.landmarks[selected][:, upper_idx], embed_audio(completion, audio)))

    for row, index in enumerate(selected):
        index = int(index)
        predicted = Landmark68(completed[row])
        guidance = window(dataset.audio, index) if cfg.synthesis.condition == CONDITION_AUDIO else predicted
        face = generate_face(model, dataset.images[index], guidance, sched, cfg.seed ^ index)
        save_pgm(image_path(out_dir, index), face.image)
        if cfg.sample.overlays:
            overlay = landmark_overlay(dataset.images[index], face.image, dataset.landmarks[index], completed[row])
            save_png(os.path.join(out_dir, OVERLAY_DIR, f"{index:06d}.png"), overlay)
        logger.debug(f"frame {index} sampled (seed {cfg.seed ^ index})")

    landmark_path = save_landmark_file(os.path.join(out_dir, LANDMARK_FILE),
                                       [Landmark68(p) for p in completed], indices=[int(i) for i in selected],
                                       comment=f"completed landmarks, seed {cfg.seed}")
    manifest = write_manifest(out_dir, "sample", cfg.seed, cfg.to_dict(), {
        "frames": [int(i) for i in selected],
        "condition": cfg.synthesis.condition,
    })
    logger.info(f"Sampled {len(selected)} frames")
    return {"outputs": out_dir, "landmarks": landmark_path, "manifest": manifest}


# ============== EVAL ==============

def eval_run(cfg: RunConfig) -> Paths:
    run_dir = cfg.paths.outputs
    _require(os.path.join(run_dir, LANDMARK_FILE), "sample", "sample")
    out_dir = os.path.join(run_dir, "eval")
    report = evaluate(run_dir, cfg.paths.dataset, seed=cfg.seed, config=cfg.to_dict(),
                      report_path=os.path.join(out_dir, REPORT_NAME))
    extra = {"frames": len(report.rows), "mean_ld": report.mean_ld, "mean_psnr": report.mean_psnr,
             "mean_ssim": report.mean_ssim}
    if report.mean_readback_ld is not None:
        extra["mean_readback_ld"] = report.mean_readback_ld
    manifest = write_manifest(out_dir, "eval", cfg.seed, cfg.to_dict(), extra)
    return {"report": os.path.join(out_dir, REPORT_NAME), "manifest": manifest}


# ============== SELFCHECK ==============

def selfcheck(cfg: RunConfig) -> Tuple[bool, Paths]:
    """Run the invariant suite; returns (all passed, produced paths)"""
    out_dir = os.path.join(cfg.paths.outputs, "selfcheck")
    result = run_selfcheck(cfg.seed)
    report_path = result.write(os.path.join(out_dir, "selfcheck.txt"))
    manifest = write_manifest(out_dir, "selfcheck", cfg.seed, cfg.to_dict(), {
        "passed": result.passed,
        "checks": {check.name: check.passed for check in result.checks},
    })
    return result.passed, {"report": report_path, "manifest": manifest}
