"""
ParamStore - named, flat registry of every trainable or frozen tensor

Paths are dot-separated (`completion.lf.query`, `synth.base.down1.conv1.weight`),
which lets whole sub-networks be frozen, checksummed or saved by prefix.
"""
import hashlib
import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from difftalk.autodiff.tensor import DTYPE, Tensor
from difftalk.exceptions import ShapeError, ValidationError

logger = logging.getLogger(__name__)


@dataclass
class ParamEntry:
    """One registered parameter"""
    tensor: Tensor
    trainable: bool = True


class ParamStore:
    """
    Ordered map from parameter path to tensor plus a trainable flag

    Usage:
        store = ParamStore()
        w = store.add("completion.lf.query", np.zeros((9, 64)))
        store.freeze("synth.base")
    """

    def __init__(self):
        self._entries: Dict[str, ParamEntry] = {}

    # ============== REGISTRATION ==============

    def add(self, path: str, value: np.ndarray, trainable: bool = True) -> Tensor:
        """
        Register a new parameter

        Raises:
            ValidationError: If the path is already taken
        """
        if path in self._entries:
            raise ValidationError(f"parameter path already registered: {path}")
        tensor = Tensor(np.array(value, dtype=DTYPE), requires_grad=trainable)
        self._entries[path] = ParamEntry(tensor, trainable)
        return tensor

    def __contains__(self, path: str) -> bool:
        return path in self._entries

    def __getitem__(self, path: str) -> Tensor:
        return self._entries[path].tensor

    def __len__(self) -> int:
        return len(self._entries)

    def paths(self, prefix: str = "") -> List[str]:
        return [p for p in self._entries if under_prefix(p, prefix)]

    def items(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for path, entry in self._entries.items():
            if under_prefix(path, prefix):
                yield path, entry.tensor

    def trainable_items(self) -> Iterator[Tuple[str, Tensor]]:
        for path, entry in self._entries.items():
            if entry.trainable:
                yield path, entry.tensor

    def is_trainable(self, path: str) -> bool:
        return self._entries[path].trainable

    def count(self, prefix: str = "") -> int:
        """Number of scalar values under prefix"""
        return sum(t.size for _, t in self.items(prefix))

    # ============== TRAINING STATE ==============

    def set_trainable(self, prefix: str, trainable: bool) -> int:
        changed = 0
        for path, entry in self._entries.items():
            if under_prefix(path, prefix):
                entry.trainable = trainable
                entry.tensor.requires_grad = trainable
                if not trainable:
                    entry.tensor.grad = None
                changed += 1
        logger.debug(f"set trainable={trainable} on {changed} parameters under '{prefix}'")
        return changed

    def freeze(self, prefix: str = "") -> int:
        return self.set_trainable(prefix, False)

    def unfreeze(self, prefix: str = "") -> int:
        return self.set_trainable(prefix, True)

    def zero_grad(self) -> None:
        """Reset every trainable gradient to exact zeros"""
        for entry in self._entries.values():
            if entry.trainable:
                entry.tensor.zero_grad()

    def checksum(self, prefix: str = "") -> str:
        """SHA-256 over path, shape and raw bytes of every parameter under prefix"""
        digest = hashlib.sha256()
        for path in sorted(self.paths(prefix)):
            data = self._entries[path].tensor.data
            digest.update(path.encode())
            digest.update(str(data.shape).encode())
            digest.update(np.ascontiguousarray(data).tobytes())
        return digest.hexdigest()

    # ============== STATE TRANSFER ==============

    def state(self, prefix: str = "") -> Dict[str, Tuple[np.ndarray, bool]]:
        return {p: (e.tensor.data.copy(), e.trainable) for p, e in self._entries.items() if under_prefix(p, prefix)}

    def load_state(self, state: Dict[str, Tuple[np.ndarray, bool]], strict: bool = True,
                   keep_flags: bool = False) -> None:
        """
        Copy values into already-registered parameters

        Args:
            state: path -> (values, trainable)
            strict: Require the state to cover exactly the registered paths it touches
            keep_flags: Keep the current trainable flags instead of the stored ones

        Raises:
            ValidationError: Unknown path (strict)
            ShapeError: Stored shape differs from the registered one
        """
        for path, (values, trainable) in state.items():
            if path not in self._entries:
                if strict:
                    raise ValidationError(f"checkpoint path not registered in model: {path}")
                continue
            entry = self._entries[path]
            if entry.tensor.shape != values.shape:
                raise ShapeError(f"{path}: checkpoint shape {values.shape} vs model shape {entry.tensor.shape}")
            entry.tensor.data = np.array(values, dtype=DTYPE)
            entry.tensor.grad = None
            if not keep_flags:
                entry.trainable = trainable
                entry.tensor.requires_grad = trainable

    def copy_values(self, source_prefix: str, target_prefix: str) -> int:
        """Copy values between two sub-trees with identical relative layout"""
        copied = 0
        for path, tensor in list(self.items(source_prefix)):
            target = target_prefix + path[len(source_prefix):]
            if target in self._entries and self._entries[target].tensor.shape == tensor.shape:
                self._entries[target].tensor.data = tensor.data.copy()
                copied += 1
        return copied

    def get(self, path: str) -> Optional[Tensor]:
        entry = self._entries.get(path)
        return entry.tensor if entry else None


def under_prefix(path: str, prefix: str) -> bool:
    return not prefix or path == prefix or path.startswith(prefix + ".")
