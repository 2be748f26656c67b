"""
Audio features: tracks, windows, synthetic generator and temporal encoder
"""
from difftalk.audio.encoder import (
    AUDIO_EMBED_DIM,
    COMPLETION_AUDIO_PREFIX,
    TemporalEncoder,
    encode_windows,
    temporal_encode,
)
from difftalk.audio.io import load_audio_file, save_audio_file
from difftalk.audio.track import (
    FEATURE_DIM,
    WINDOW,
    AudioTrack,
    AudioWindow,
    audio_code,
    mouth_basis,
    recover_mouth_signal,
    synth_track,
    window,
    windows,
)

__all__ = [
    "AUDIO_EMBED_DIM",
    "COMPLETION_AUDIO_PREFIX",
    "FEATURE_DIM",
    "WINDOW",
    "AudioTrack",
    "AudioWindow",
    "TemporalEncoder",
    "audio_code",
    "encode_windows",
    "load_audio_file",
    "mouth_basis",
    "recover_mouth_signal",
    "save_audio_file",
    "synth_track",
    "temporal_encode",
    "window",
    "windows",
]
