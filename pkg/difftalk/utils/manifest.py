"""
Run manifests: `manifest.yaml` written next to every command's artifacts

Manifests hold the command, the effective configuration, the seed and the
package versions. They carry no timestamps, so reruns stay hash-identical.
"""
import logging
import os
import platform
from typing import Any, Dict, Optional

import numpy as np
import yaml
from slugify import slugify

import difftalk

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.yaml"


def run_name(command: str, seed: int, *tags: str) -> str:
    """Slug such as `train-landmarks-seed-7-ablate-am`"""
    return slugify(" ".join([command, "seed", str(seed), *tags]))


def versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "difftalk": difftalk.__version__,
    }


def write_manifest(out_dir: str, command: str, seed: int, config: Optional[Dict[str, Any]] = None,
                   extra: Optional[Dict[str, Any]] = None) -> str:
    """
    Write out_dir/manifest.yaml

    Args:
        out_dir: Artifact directory (created if needed)
        command: Command name
        seed: Run seed
        config: Effective configuration as plain data
        extra: Command-specific fields (counts, produced files)

    Returns:
        Path of the manifest file
    """
    os.makedirs(out_dir, exist_ok=True)
    document = {
        "command": command,
        "run": run_name(command, seed),
        "seed": int(seed),
        "versions": versions(),
    }
    if config is not None:
        document["config"] = config
    if extra:
        document.update(extra)
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, "w") as handle:
        yaml.safe_dump(document, handle, sort_keys=True, default_flow_style=False)
    logger.debug(f"Manifest written: {path}")
    return path


def read_manifest(out_dir: str) -> Dict[str, Any]:
    with open(os.path.join(out_dir, MANIFEST_NAME)) as handle:
        return yaml.safe_load(handle) or {}
