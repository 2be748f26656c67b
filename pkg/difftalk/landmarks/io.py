"""
Landmark text files

One frame per line: `frame_index x0 y0 x1 y1 ... x67 y67`; lines starting
with `#` are comments. Values are written with shortest round-trip repr.
"""
import logging
import os
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from difftalk.exceptions import ParseError, ValidationError
from difftalk.landmarks.landmark import Landmark68
from difftalk.landmarks.partition import N_POINTS

logger = logging.getLogger(__name__)


def save_landmark_file(path: str, frames: Sequence[Landmark68], indices: Optional[Iterable[int]] = None,
                       comment: Optional[str] = None) -> str:
    """
    Write landmark frames to path

    Args:
        path: Output file
        frames: Landmarks in frame order
        indices: Frame indices (default 0..n-1)
        comment: Optional header comment

    Returns:
        The written path
    """
    indices = list(range(len(frames))) if indices is None else list(indices)
    if len(indices) != len(frames):
        raise ValidationError(f"{len(indices)} indices for {len(frames)} frames")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as handle:
        if comment:
            handle.write(f"# {comment}\n")
        for index, lm in zip(indices, frames):
            values = " ".join(repr(float(v)) for v in lm.points.reshape(-1))
            handle.write(f"{index} {values}\n")
    logger.debug(f"Wrote {len(frames)} landmark frames to {path}")
    return path


def read_indexed_landmarks(path: str) -> List[Tuple[int, Landmark68]]:
    """
    Parse a landmark file into (frame_index, landmarks) pairs

    Raises:
        ParseError: Malformed line (wrong count, non-numeric, out of range)
    """
    frames: List[Tuple[int, Landmark68]] = []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) != 1 + 2 * N_POINTS:
                raise ParseError(path, line_no, f"expected {N_POINTS} points, found {(len(fields) - 1) / 2:g}")
            try:
                index = int(fields[0])
                values = [float(v) for v in fields[1:]]
                lm = Landmark68([values[i:i + 2] for i in range(0, len(values), 2)])
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            frames.append((index, lm))
    return frames


def load_landmark_file(path: str) -> List[Landmark68]:
    return [lm for _, lm in read_indexed_landmarks(path)]


def load_landmark_map(path: str) -> Dict[int, Landmark68]:
    return dict(read_indexed_landmarks(path))
