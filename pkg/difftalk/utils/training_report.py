"""
Per-stage training reports, stored as YAML next to the checkpoints
"""
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

import numpy as np
import yaml

logger = logging.getLogger(__name__)


@dataclass
class TrainingReport:
    """
    Loss curve and outcome of one training stage

    Attributes:
        stage: Stage name ('completion', 'autoencoder', 'base', 'synthesis')
        losses: Mean training loss per epoch
        converged: Whether the stage met its target
        extra: Stage-specific numbers (validation curve, held-out metrics)
    """
    stage: str
    losses: List[float] = field(default_factory=list)
    converged: bool = True
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        data = plain(asdict(self))
        data["final_loss"] = float(self.final_loss)
        return data

    def save(self, path: str) -> str:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as handle:
            yaml.safe_dump(self.to_dict(), handle, sort_keys=True, default_flow_style=False)
        logger.debug(f"Training report written: {path}")
        return path

    @classmethod
    def load(cls, path: str) -> "TrainingReport":
        with open(path) as handle:
            data = yaml.safe_load(handle) or {}
        data.pop("final_loss", None)
        return cls(**data)


def save_loss_curve(path: str, losses: List[float]) -> str:
    """Plain-text `epoch loss` table"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as handle:
        handle.write("# epoch loss\n")
        for epoch, loss in enumerate(losses, start=1):
            handle.write(f"{epoch} {float(loss)!r}\n")
    return path


def plain(value: Any) -> Any:
    """Convert numpy scalars/arrays inside value to YAML-safe builtins"""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value
