"""
Diffusion core: schedules, region-split noising, masked loss and the DDIM sampler
"""
from difftalk.diffusion.noising import (
    ddim_step,
    forward_noise,
    masked_noise_loss,
    noise_loss,
    partial_forward_noise,
    predict_z0,
    upper_mask,
    upper_rows,
)
from difftalk.diffusion.sampler import sample_loop
from difftalk.diffusion.schedule import NoiseSchedule, load_schedule, make_schedule, save_schedule, schedule_from_betas

__all__ = [
    "NoiseSchedule",
    "ddim_step",
    "forward_noise",
    "load_schedule",
    "make_schedule",
    "masked_noise_loss",
    "noise_loss",
    "partial_forward_noise",
    "predict_z0",
    "sample_loop",
    "save_schedule",
    "schedule_from_betas",
    "upper_mask",
    "upper_rows",
]
