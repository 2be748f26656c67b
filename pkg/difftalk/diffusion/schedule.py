"""
Noise schedules

Index convention: arrays are stored 0-based (position t-1 holds step t);
every public accessor takes the 1-based step t, and ᾱ_0 is defined as 1.
"""
import logging
import os
from dataclasses import dataclass

import numpy as np

from difftalk.exceptions import ParseError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseSchedule:
    """
    Attributes:
        beta: β_t for t = 1..T
        alpha: α_t = 1 − β_t
        alpha_bar: ᾱ_t = Π_{s≤t} α_s
    """
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(self.beta), np.shape(self.alpha), np.shape(self.alpha_bar)}
        if len(shapes) != 1 or np.ndim(self.beta) != 1 or len(self.beta) == 0:
            raise ValidationError(f"schedule arrays must be equal-length 1-D, got shapes {sorted(shapes)}")

    @property
    def T(self) -> int:
        return len(self.beta)

    def check_t(self, t) -> np.ndarray:
        """
        Validate one step or an array of steps

        Raises:
            ValidationError: Any t outside 1..T
        """
        steps = np.asarray(t)
        if not np.issubdtype(steps.dtype, np.integer) or np.any(steps < 1) or np.any(steps > self.T):
            raise ValidationError(f"diffusion step {t} outside 1..{self.T}")
        return steps

    def alpha_bar_at(self, t) -> np.ndarray:
        """ᾱ_t for t in 0..T (ᾱ_0 = 1)"""
        steps = np.asarray(t)
        padded = np.concatenate([[1.0], self.alpha_bar])
        return padded[steps]

    def validate(self) -> "NoiseSchedule":
        """
        Raises:
            ValidationError: β outside (0, 1) or decreasing, ᾱ not the running product of α
        """
        if np.any(self.beta <= 0) or np.any(self.beta >= 1):
            raise ValidationError("beta values must lie strictly inside (0, 1)")
        if np.any(np.diff(self.beta) < 0):
            raise ValidationError("beta must be non-decreasing in t")
        if not np.allclose(self.alpha, 1.0 - self.beta, rtol=0, atol=1e-12):
            raise ValidationError("alpha must equal 1 - beta")
        if np.max(np.abs(np.cumprod(self.alpha) - self.alpha_bar)) > 1e-12:
            raise ValidationError("alpha_bar is not the cumulative product of alpha")
        return self


def schedule_from_betas(beta: np.ndarray) -> NoiseSchedule:
    beta = np.asarray(beta, dtype=np.float64)
    alpha = 1.0 - beta
    return NoiseSchedule(beta, alpha, np.cumprod(alpha)).validate()


def make_schedule(T: int = 50, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """
    Linear β schedule

    Raises:
        ValidationError: T < 1 or not 0 < beta_start ≤ beta_end < 1
    """
    if T < 1:
        raise ValidationError(f"schedule needs T ≥ 1, got {T}")
    if not 0 < beta_start <= beta_end < 1:
        raise ValidationError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    beta = np.array([beta_start]) if T == 1 else np.linspace(beta_start, beta_end, T)
    return schedule_from_betas(beta)


def save_schedule(path: str, sched: NoiseSchedule) -> str:
    """Text table `t beta alpha alpha_bar`, 12 significant digits"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as handle:
        handle.write("# t beta alpha alpha_bar\n")
        for t in range(1, sched.T + 1):
            handle.write(f"{t} {sched.beta[t - 1]:.12g} {sched.alpha[t - 1]:.12g} {sched.alpha_bar[t - 1]:.12g}\n")
    return path


def load_schedule(path: str) -> NoiseSchedule:
    """
    Rebuild a schedule from its β column; the stored α/ᾱ columns are cross-checked

    Raises:
        ParseError: Malformed line, steps out of order, or columns inconsistent with β
    """
    rows = []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) != 4:
                raise ParseError(path, line_no, f"expected 4 columns, found {len(fields)}")
            try:
                t = int(fields[0])
                values = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            if t != len(rows) + 1:
                raise ParseError(path, line_no, f"expected step {len(rows) + 1}, found {t}")
            rows.append((line_no, values))
    if not rows:
        raise ParseError(path, 0, "empty schedule table")
    try:
        sched = schedule_from_betas([values[0] for _, values in rows])
    except ValidationError as exc:
        raise ParseError(path, rows[0][0], str(exc)) from exc
    for (line_no, (_, alpha, alpha_bar)), t in zip(rows, range(sched.T)):
        if abs(alpha - sched.alpha[t]) > 1e-10 or abs(alpha_bar - sched.alpha_bar[t]) > 1e-10:
            raise ParseError(path, line_no, "alpha/alpha_bar columns disagree with beta")
    logger.debug(f"Loaded schedule with T={sched.T} from {path}")
    return sched
