"""
Completion agent training and held-out evaluation
"""
import logging
from typing import Optional, Tuple

import numpy as np

from difftalk.autodiff.optim import Adam
from difftalk.autodiff.params import ParamStore
from difftalk.autodiff.tensor import Tensor
from difftalk.completion.data import CompletionDataset
from difftalk.completion.loss import region_loss
from difftalk.completion.model import CompletionConfig, CompletionModel, complete_points, embed_audio
from difftalk.exceptions import ConvergenceError, ValidationError
from difftalk.landmarks.partition import DEFAULT_PARTITION
from difftalk.utils.training_report import TrainingReport

logger = logging.getLogger(__name__)


def train_completion(data: CompletionDataset, cfg: CompletionConfig,
                     holdout: Optional[CompletionDataset] = None,
                     store: Optional[ParamStore] = None) -> Tuple[CompletionModel, TrainingReport]:
    """
    Train LF/BM/AM transformers and the audio encoder jointly with Adam

    Args:
        data: Training frames
        cfg: Architecture and optimisation settings (seed included)
        holdout: Optional held-out frames evaluated after training
        store: Parameter store to build into (fresh one by default)

    Returns:
        (trained model, report with the per-epoch mean loss)

    Raises:
        ValidationError: Fewer frames than cfg.min_frames, or none at all
        ConvergenceError: Loss became non-finite
    """
    if len(data) == 0:
        raise ValidationError("completion training needs a non-empty dataset")
    if len(data) < cfg.min_frames:
        raise ValidationError(f"completion training needs at least {cfg.min_frames} frames, got {len(data)}")

    store = store if store is not None else ParamStore()
    model = CompletionModel(store, cfg)
    optimizer = Adam(store, lr=cfg.lr, prefix="completion")
    shuffle_rng = np.random.default_rng([cfg.seed, 1])
    region = data.region
    mode = "ablation (audio into BM-Trans)" if cfg.ablate_am else "default"
    logger.info(f"Training completion: {len(data)} frames, {cfg.epochs} epochs, lr={cfg.lr}, mode={mode}")

    report = TrainingReport(stage="completion")
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for rows in data.batches(cfg.batch_size, shuffle_rng):
            store.zero_grad()
            pred = model.predict_region(Tensor(data.upper[rows]), data.windows[rows])
            loss = region_loss(pred, region[rows])
            loss.backward()
            optimizer.step()
            total += loss.item() * len(rows)
        epoch_loss = total / len(data)
        if not np.isfinite(epoch_loss):
            raise ConvergenceError("completion", epoch_loss, f"non-finite loss at epoch {epoch}")
        report.losses.append(epoch_loss)
        logger.info(f"completion epoch {epoch}/{cfg.epochs}: loss={epoch_loss:.6g}")

    report.converged = len(report.losses) < 2 or report.final_loss < report.losses[0]
    report.extra["ablate_am"] = cfg.ablate_am
    if holdout is not None and len(holdout):
        report.extra["holdout_distance"] = evaluate_completion(model, holdout)
        logger.info(f"Held-out mean distance: {report.extra['holdout_distance']:.5f}")
    return model, report


def evaluate_completion(model: CompletionModel, data: CompletionDataset) -> float:
    """Mean Euclidean distance over R, averaged over points and frames"""
    predicted = predict_landmarks(model, data)
    region_idx = list(DEFAULT_PARTITION.predicted)
    distances = np.linalg.norm(predicted[:, region_idx] - data.region, axis=-1)
    return float(distances.mean())


def predict_landmarks(model: CompletionModel, data: CompletionDataset, batch_size: int = 256) -> np.ndarray:
    """Completed landmarks for every row of data, [n, 68, 2]"""
    out = []
    for start in range(0, len(data), batch_size):
        rows = slice(start, start + batch_size)
        emb = embed_audio(model, data.windows[rows])
        out.append(complete_points(model, data.upper[rows], emb))
    return np.concatenate(out) if out else np.zeros((0, 68, 2))
