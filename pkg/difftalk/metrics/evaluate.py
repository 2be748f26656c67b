"""
Run evaluation: per-frame LD / PSNR / SSIM against a ground-truth dataset

A run directory holds `landmarks.txt` (completed landmarks, indexed by source
frame) and `images/%06d.pgm`; a dataset directory has the same layout, so a
dataset can be evaluated against itself.
"""
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from jinja2 import Environment, FileSystemLoader

from difftalk.dataset.generate import LANDMARK_FILE, PARAMS_FILE, image_path
from difftalk.dataset.inverse import read_back_landmarks
from difftalk.dataset.io import load_params_file
from difftalk.exceptions import MissingFramesError, ParseError
from difftalk.landmarks.io import load_landmark_map
from difftalk.metrics.measures import landmark_distance, psnr, ssim
from difftalk.utils.image_io import load_pgm

logger = logging.getLogger(__name__)

REPORT_NAME = "eval_report.txt"
TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates")


@dataclass
class FrameScore:
    frame: int
    ld: float
    psnr: float
    ssim: float
    readback_ld: Optional[float] = None


@dataclass
class EvalReport:
    """
    Per-frame scores plus their means

    Attributes:
        rows: One FrameScore per evaluated frame, in frame order
        seed: Seed of the evaluated run
        config: Effective configuration echoed into the report
    """
    run_dir: str
    gt_dir: str
    rows: List[FrameScore] = field(default_factory=list)
    seed: Optional[int] = None
    config: Dict[str, Any] = field(default_factory=dict)

    def _mean(self, name: str) -> float:
        values = [getattr(r, name) for r in self.rows]
        return float(np.mean(values)) if values else float("nan")

    @property
    def mean_ld(self) -> float:
        return self._mean("ld")

    @property
    def mean_psnr(self) -> float:
        """math.inf as soon as one frame is identical to its ground truth"""
        return self._mean("psnr")

    @property
    def mean_ssim(self) -> float:
        return self._mean("ssim")

    @property
    def mean_readback_ld(self) -> Optional[float]:
        if not self.rows or any(r.readback_ld is None for r in self.rows):
            return None
        return self._mean("readback_ld")

    def render(self) -> str:
        env = Environment(loader=FileSystemLoader(TEMPLATE_DIR), trim_blocks=True, lstrip_blocks=True,
                          keep_trailing_newline=True, autoescape=False)
        env.filters["num"] = format_number
        return env.get_template("eval_report.txt.j2").render(
            run_dir=self.run_dir,
            gt_dir=self.gt_dir,
            seed=self.seed,
            config_items=sorted(flatten(self.config).items()),
            rows=self.rows,
            mean_ld=self.mean_ld,
            mean_psnr=self.mean_psnr,
            mean_ssim=self.mean_ssim,
            mean_readback_ld=self.mean_readback_ld,
        )

    def write(self, path: str) -> str:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as handle:
            handle.write(self.render())
        logger.info(f"Evaluation report written: {path}")
        return path


def format_number(value: float) -> str:
    """`inf` spelled literally; everything else with 10 significant digits"""
    if value is None:
        return "-"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.10g}"


def flatten(config: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in config.items():
        dotted = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            out.update(flatten(value, dotted))
        else:
            out[dotted] = value
    return out


def evaluate(run_dir: str, gt_dir: str, seed: Optional[int] = None, config: Optional[Dict[str, Any]] = None,
             readback: bool = True, report_path: Optional[str] = None) -> EvalReport:
    """
    Score every frame of run_dir against gt_dir and write the report

    Args:
        run_dir: Directory with generated images and completed landmarks
        gt_dir: Ground-truth dataset directory
        seed: Run seed recorded in the report
        config: Effective configuration echoed into the report
        readback: Also fit landmarks back from generated images when gt_dir has a params sidecar
        report_path: Output file (default run_dir/eval_report.txt)

    Raises:
        MissingFramesError: Frames of the run absent from the ground truth, or images missing
    """
    pred = load_landmark_map(os.path.join(run_dir, LANDMARK_FILE))
    gt = load_landmark_map(os.path.join(gt_dir, LANDMARK_FILE))
    frames = sorted(pred)
    missing_gt = [i for i in frames if i not in gt or not os.path.isfile(image_path(gt_dir, i))]
    if missing_gt:
        raise MissingFramesError(missing_gt, gt_dir)
    missing_run = [i for i in frames if not os.path.isfile(image_path(run_dir, i))]
    if missing_run:
        raise MissingFramesError(missing_run, run_dir)

    params_path = os.path.join(gt_dir, PARAMS_FILE)
    params = load_params_file(params_path) if readback and os.path.isfile(params_path) else None

    report = EvalReport(run_dir, gt_dir, seed=seed, config=config or {})
    for index in frames:
        generated = load_pgm(image_path(run_dir, index))
        reference = load_pgm(image_path(gt_dir, index))
        row = FrameScore(
            frame=index,
            ld=landmark_distance(pred[index], gt[index]),
            psnr=psnr(generated, reference),
            ssim=ssim(generated, reference),
        )
        if params is not None and index < len(params):
            row.readback_ld = landmark_distance(pred[index], read_back_landmarks(generated, params[index]))
        report.rows.append(row)
        logger.debug(f"frame {index}: LD={row.ld:.5f} PSNR={row.psnr:.3f} SSIM={row.ssim:.4f}")

    logger.info(f"Evaluated {len(report.rows)} frames: LD={report.mean_ld:.5f} "
                f"PSNR={report.mean_psnr:.3f} SSIM={report.mean_ssim:.4f}")
    report.write(report_path or os.path.join(run_dir, REPORT_NAME))
    return report


def parse_report(path: str) -> Tuple[List[Tuple[int, float, float, float]], Dict[str, float]]:
    """
    Read a report back

    Returns:
        (per-frame (frame, LD, PSNR, SSIM) tuples, aggregate name -> value)
    """
    rows: List[Tuple[int, float, float, float]] = []
    aggregate: Dict[str, float] = {}
    in_aggregate = False
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if stripped == "# aggregate":
                in_aggregate = True
                continue
            if not stripped or stripped.startswith("#"):
                continue
            items = stripped.split()
            try:
                if in_aggregate:
                    aggregate[items[0]] = float(items[1])
                else:
                    rows.append((int(items[0]), float(items[1]), float(items[2]), float(items[3])))
            except (ValueError, IndexError) as exc:
                raise ParseError(path, line_no, str(exc)) from exc
    return rows, aggregate
