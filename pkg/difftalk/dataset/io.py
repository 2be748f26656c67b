"""
Params sidecar: one `frame_index cx cy rx ry yaw eye m seed` line per frame
"""
import logging
import os
from dataclasses import fields
from typing import List, Sequence

from difftalk.dataset.geometry import FaceParams
from difftalk.exceptions import ParseError, ValidationError

logger = logging.getLogger(__name__)

PARAM_FIELDS = tuple(f.name for f in fields(FaceParams))


def save_params_file(path: str, params: Sequence[FaceParams]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as handle:
        handle.write("# frame_index " + " ".join(PARAM_FIELDS) + "\n")
        for index, p in enumerate(params):
            values = [repr(float(getattr(p, name))) for name in PARAM_FIELDS[:-1]]
            handle.write(f"{index} " + " ".join(values) + f" {p.seed}\n")
    return path


def load_params_file(path: str) -> List[FaceParams]:
    """
    Raises:
        ParseError: Wrong field count, non-numeric value, out-of-order frame or out-of-range parameter
    """
    params: List[FaceParams] = []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            items = stripped.split()
            if len(items) != 1 + len(PARAM_FIELDS):
                raise ParseError(path, line_no, f"expected {len(PARAM_FIELDS)} fields, found {len(items) - 1}")
            try:
                index = int(items[0])
                values = [float(v) for v in items[1:-1]]
                seed = int(items[-1])
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            if index != len(params):
                raise ParseError(path, line_no, f"expected frame {len(params)}, found {index}")
            try:
                params.append(FaceParams(*values, seed=seed))
            except ValidationError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
    return params
