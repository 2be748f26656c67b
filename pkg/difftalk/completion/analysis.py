"""
Analyses of a trained completion agent: mouth sweep, mismatched audio, base-mouth placement
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr

from difftalk.audio.track import WINDOW, WINDOW_PAST, synth_track, window
from difftalk.completion.data import CompletionDataset
from difftalk.completion.model import CompletionModel, bm_forward, complete, embed_audio, lf_forward
from difftalk.dataset.geometry import FaceParams, landmark_points
from difftalk.landmarks.landmark import Landmark68, inner_lip_gap, inside_jaw_hull, mouth_centroid
from difftalk.landmarks.partition import DEFAULT_PARTITION

logger = logging.getLogger(__name__)

SWEEP_VALUES = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass(frozen=True)
class MouthSweep:
    m_values: Tuple[float, ...]
    gaps: Tuple[float, ...]
    rho: float


def mouth_sweep(model: CompletionModel, params: FaceParams, m_values: Sequence[float] = SWEEP_VALUES,
                seed: int = 0) -> MouthSweep:
    """
    Complete one face under constant-openness audio for each m and measure the inner-lip gap

    Args:
        model: Completion model
        params: Reference face; only its upper points are used
        m_values: Controlled mouth openness values
        seed: Audio code seed (the dataset's seed)

    Returns:
        Gaps per m and their Spearman rank correlation with m
    """
    upper_idx = list(DEFAULT_PARTITION.upper_input)
    gaps = []
    for m in m_values:
        upper = landmark_points(params.with_mouth(m))[upper_idx]
        track = synth_track(np.full(WINDOW, float(m)), seed, sigma=0.0)
        emb = embed_audio(model, window(track, WINDOW_PAST).block[None])[0]
        gaps.append(float(inner_lip_gap(complete(model, upper, emb))))
    rho, _ = spearmanr(m_values, gaps)
    rho = float(rho) if np.isfinite(rho) else 0.0
    logger.info(f"Mouth sweep gaps {[round(g, 4) for g in gaps]} (rho={rho:.3f})")
    return MouthSweep(tuple(float(m) for m in m_values), tuple(gaps), rho)


def swap_audio(model: CompletionModel, data: CompletionDataset, row_a: int, row_b: int) -> Tuple[Landmark68, Landmark68]:
    """
    Complete frame a with its own audio and with frame b's audio

    Returns:
        (own-audio landmarks, swapped-audio landmarks)
    """
    emb = embed_audio(model, data.windows[[row_a, row_b]])
    upper = data.upper[row_a]
    return complete(model, upper, emb[0]), complete(model, upper, emb[1])


def base_mouth_containment(model: CompletionModel, data: CompletionDataset) -> float:
    """Fraction of frames whose base-mouth centroid lies inside the predicted jaw hull"""
    if len(data) == 0:
        return 0.0
    inside = 0
    for row in range(len(data)):
        upper = data.upper[row]
        lower = lf_forward(model, upper)
        contour = np.concatenate([upper, lower])
        base = bm_forward(model, contour)
        full = np.zeros((68, 2))
        upper_idx, lower_idx, mouth_idx = DEFAULT_PARTITION.index_arrays()
        full[upper_idx], full[lower_idx], full[mouth_idx] = upper, lower, base
        inside += inside_jaw_hull(full, mouth_centroid(full))
    return inside / len(data)
