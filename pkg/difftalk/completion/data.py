"""
Training arrays for the completion agent
"""
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from difftalk.audio.track import windows
from difftalk.dataset.loader import FaceDataset
from difftalk.exceptions import ShapeError
from difftalk.landmarks.partition import DEFAULT_PARTITION, RegionPartition


@dataclass
class CompletionDataset:
    """
    Attributes:
        upper: [n, 39, 2]
        lower: [n, 9, 2]
        mouth: [n, 20, 2]
        windows: [n, 16, 29] audio windows centred on each frame
        frame_indices: Source frame index of each row
    """
    upper: np.ndarray
    lower: np.ndarray
    mouth: np.ndarray
    windows: np.ndarray
    frame_indices: np.ndarray

    def __post_init__(self):
        n = self.upper.shape[0]
        for name in ("lower", "mouth", "windows", "frame_indices"):
            if getattr(self, name).shape[0] != n:
                raise ShapeError(f"completion dataset: {name} has {getattr(self, name).shape[0]} rows, upper has {n}")

    def __len__(self) -> int:
        return self.upper.shape[0]

    @property
    def region(self) -> np.ndarray:
        """Ground truth for R: lower contour then mouth, [n, 29, 2]"""
        return np.concatenate([self.lower, self.mouth], axis=1)

    def batches(self, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
        """Row indices of one shuffled epoch"""
        order = rng.permutation(len(self))
        for start in range(0, len(order), batch_size):
            yield order[start:start + batch_size]

    @classmethod
    def from_face_dataset(cls, dataset: FaceDataset, indices: Optional[Sequence[int]] = None,
                          part: RegionPartition = DEFAULT_PARTITION) -> "CompletionDataset":
        indices = np.arange(len(dataset)) if indices is None else np.asarray(indices, dtype=int)
        upper_idx, lower_idx, mouth_idx = part.index_arrays()
        points = dataset.landmarks[indices]
        return cls(
            upper=points[:, upper_idx],
            lower=points[:, lower_idx],
            mouth=points[:, mouth_idx],
            windows=windows(dataset.audio, indices) if len(indices) else np.zeros((0, 16, 29)),
            frame_indices=indices,
        )
