"""
Audio track files: `# rate=<fps>` header, then `frame_index f0 ... f28` per line
"""
import logging
import os

from difftalk.audio.track import DEFAULT_FRAME_RATE, FEATURE_DIM, AudioTrack
from difftalk.exceptions import ParseError

logger = logging.getLogger(__name__)


def save_audio_file(path: str, track: AudioTrack) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as handle:
        handle.write(f"# rate={track.frame_rate!r}\n")
        for index, frame in enumerate(track.frames):
            handle.write(f"{index} " + " ".join(repr(float(v)) for v in frame) + "\n")
    logger.debug(f"Wrote {len(track)} audio frames to {path}")
    return path


def load_audio_file(path: str) -> AudioTrack:
    """
    Parse an audio track file

    Raises:
        ParseError: Wrong component count, bad header or out-of-order frames
    """
    rate = DEFAULT_FRAME_RATE
    rows = []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                body = stripped[1:].strip()
                if body.startswith("rate="):
                    try:
                        rate = float(body[len("rate="):])
                    except ValueError as exc:
                        raise ParseError(path, line_no, f"bad rate header: {body}") from exc
                continue
            fields = stripped.split()
            if len(fields) != 1 + FEATURE_DIM:
                raise ParseError(path, line_no, f"expected {FEATURE_DIM} features, found {len(fields) - 1}")
            try:
                index = int(fields[0])
                values = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
            if index != len(rows):
                raise ParseError(path, line_no, f"expected frame {len(rows)}, found {index}")
            rows.append(values)
    return AudioTrack(rows, rate)
