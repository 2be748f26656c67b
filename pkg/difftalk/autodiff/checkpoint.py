"""
Checkpoint container: .npz with a format-version header and trainable flags
"""
import json
import logging
import os
import zipfile
from typing import Dict, Tuple

import numpy as np

from difftalk.autodiff.params import ParamStore
from difftalk.exceptions import ValidationError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_VERSION_KEY = "__format_version__"
_META_KEY = "__meta__"
_EPOCH = (1980, 1, 1, 0, 0, 0)


def save_checkpoint(store: ParamStore, path: str, prefix: str = "") -> str:
    """
    Write every parameter under prefix to path

    Returns:
        The written path
    """
    state = store.state(prefix)
    arrays = {name: values for name, (values, _) in state.items()}
    meta = {"trainable": {name: flag for name, (_, flag) in state.items()}}
    entries = {_VERSION_KEY: np.array(FORMAT_VERSION), _META_KEY: np.array(json.dumps(meta, sort_keys=True))}
    entries.update(arrays)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    # fixed member timestamps keep identical parameters byte-identical on disk
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as archive:
        for name, values in entries.items():
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            with archive.open(info, "w", force_zip64=True) as member:
                np.lib.format.write_array(member, np.asarray(values), allow_pickle=False)
    logger.info(f"Saved {len(arrays)} tensors ({sum(a.size for a in arrays.values())} values) to {path}")
    return path


def read_checkpoint(path: str) -> Dict[str, Tuple[np.ndarray, bool]]:
    """
    Read a checkpoint into path -> (values, trainable)

    Raises:
        ValidationError: Missing header or unsupported version
    """
    with np.load(path, allow_pickle=False) as archive:
        if _VERSION_KEY not in archive.files:
            raise ValidationError(f"{path}: not a difftalk checkpoint (no format header)")
        version = int(archive[_VERSION_KEY])
        if version != FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported checkpoint version {version}")
        meta = json.loads(str(archive[_META_KEY]))
        flags = meta.get("trainable", {})
        return {
            name: (archive[name].copy(), bool(flags.get(name, True)))
            for name in archive.files
            if name not in (_VERSION_KEY, _META_KEY)
        }


def load_checkpoint(store: ParamStore, path: str, strict: bool = True, keep_flags: bool = False) -> int:
    """Load a checkpoint into a store whose modules are already built"""
    state = read_checkpoint(path)
    store.load_state(state, strict=strict, keep_flags=keep_flags)
    logger.info(f"Loaded {len(state)} tensors from {path}")
    return len(state)
