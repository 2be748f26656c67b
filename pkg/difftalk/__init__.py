"""
difftalk - audio and landmark co-driven talking-face generation at desk scale

Two cooperating agents:
- landmark completion (three transformers over 68-point landmarks + audio)
- face synthesis (landmark-conditioned latent diffusion with a frozen base UNet)
"""

__version__ = "1.0.0"
