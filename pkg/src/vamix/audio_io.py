"""RIFF/WAVE reading and writing, normalized to mono float64 in [-1, 1].

Only uncompressed payloads are handled: PCM 16/24/32 bit and IEEE float32.
Multichannel files are downmixed to mono on read (channel mean). The engine
never resamples; the rate found in the header is carried on the clip and
checked by downstream spectral operations.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyClip, InvalidClip, IoError, MalformedFile, UnsupportedFormat

CANONICAL_RATE = 44100

_FMT_PCM = 0x0001
_FMT_IEEE_FLOAT = 0x0003
# codes we can name in errors; anything else is reported numerically
_KNOWN_COMPRESSED = {
    0x0002: "ADPCM",
    0x0006: "A-law",
    0x0007: "mu-law",
    0x0011: "IMA ADPCM",
    0x0055: "MP3",
    0xFFFE: "WAVE_FORMAT_EXTENSIBLE",
}


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer plus its rate.

    samples: float64 array, values nominally in [-1, 1] and always finite.
    """

    samples: np.ndarray
    sample_rate: int
    source_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidClip(f"expected mono 1-D samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidClip("samples contain NaN or Inf")
        if self.sample_rate <= 0:
            raise InvalidClip(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self.samples) else 0.0


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise MalformedFile(f"truncated file while reading {what}")
    return data


def _decode(fh, origin: str | None) -> AudioClip:
    header = _read_exact(fh, 12, "RIFF header")
    if header[:4] != b"RIFF" or header[8:12] != b"WAVE":
        raise MalformedFile(f"{origin or 'input'} is not a RIFF/WAVE file")

    fmt = None
    data = None
    while True:
        chunk_hdr = fh.read(8)
        if len(chunk_hdr) == 0:
            break
        if len(chunk_hdr) < 8:
            raise MalformedFile("truncated chunk header")
        cid, size = struct.unpack("<4sI", chunk_hdr)
        if cid == b"fmt ":
            if size < 16:
                raise MalformedFile(f"fmt chunk too small ({size} bytes)")
            fmt = struct.unpack("<HHIIHH", _read_exact(fh, 16, "fmt chunk"))
            fh.seek(size - 16 + (size & 1), 1)
        elif cid == b"data":
            if fmt is None:
                raise MalformedFile("data chunk appears before fmt chunk")
            data = _read_exact(fh, size, "data chunk")
            if size & 1:
                fh.seek(1, 1)
        else:
            fh.seek(size + (size & 1), 1)

    if fmt is None:
        raise MalformedFile("missing fmt chunk")
    if data is None:
        raise MalformedFile("missing data chunk")

    code, channels, rate, _, block_align, bits = fmt
    if code not in (_FMT_PCM, _FMT_IEEE_FLOAT):
        name = _KNOWN_COMPRESSED.get(code, f"0x{code:04x}")
        raise UnsupportedFormat(f"unsupported WAVE format {name}; only PCM and IEEE float")
    if channels < 1:
        raise MalformedFile("fmt chunk declares zero channels")
    if rate <= 0:
        raise MalformedFile(f"fmt chunk declares sample rate {rate}")

    if code == _FMT_PCM:
        if bits not in (16, 24, 32):
            raise UnsupportedFormat(f"PCM bit depth {bits} not supported (16/24/32 only)")
    elif bits != 32:
        raise UnsupportedFormat(f"IEEE float bit depth {bits} not supported (32 only)")

    bytes_per_sample = bits // 8
    frame_size = bytes_per_sample * channels
    if block_align not in (0, frame_size):
        raise MalformedFile(f"block align {block_align} inconsistent with {frame_size}")
    if len(data) % frame_size:
        raise MalformedFile("data chunk size is not a whole number of frames")
    n_frames = len(data) // frame_size

    if code == _FMT_IEEE_FLOAT:
        raw = np.frombuffer(data, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(raw)):
            raise MalformedFile("float payload contains NaN or Inf")
    elif bits == 16:
        raw = np.frombuffer(data, dtype="<i2").astype(np.float64) / 2.0**15
    elif bits == 32:
        raw = np.frombuffer(data, dtype="<i4").astype(np.float64) / 2.0**31
    else:  # 24-bit: widen each 3-byte group to int32 with sign extension
        b = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3)
        as32 = (
            b[:, 0].astype(np.uint32)
            | (b[:, 1].astype(np.uint32) << 8)
            | (b[:, 2].astype(np.uint32) << 16)
        )
        raw = (as32.astype(np.int32) << 8 >> 8).astype(np.float64) / 2.0**23

    samples = raw.reshape(n_frames, channels).mean(axis=1) if channels > 1 else raw
    return AudioClip(samples=samples, sample_rate=rate, source_path=origin)


def _encode(clip: AudioClip, format: str) -> bytes:
    if format not in ("pcm16", "float32"):
        raise ValueError(f"format must be 'pcm16' or 'float32', got {format!r}")
    samples = clip.samples
    if not np.all(np.isfinite(samples)):
        raise InvalidClip("refusing to write NaN/Inf samples")

    if format == "pcm16":
        scaled = np.rint(samples * 2.0**15)
        payload = np.clip(scaled, -(2.0**15), 2.0**15 - 1).astype("<i2").tobytes()
        code, bits = _FMT_PCM, 16
    else:
        payload = samples.astype("<f4").tobytes()
        code, bits = _FMT_IEEE_FLOAT, 32

    byte_rate = clip.sample_rate * bits // 8
    parts = [
        struct.pack(
            "<4sIHHIIHH", b"fmt ", 16, code, 1, clip.sample_rate, byte_rate, bits // 8, bits
        )
    ]
    if code == _FMT_IEEE_FLOAT:
        parts.append(struct.pack("<4sII", b"fact", 4, len(samples)))
    parts.append(struct.pack("<4sI", b"data", len(payload)))
    parts.append(payload)
    body = b"".join(parts)
    return struct.pack("<4sI4s", b"RIFF", 4 + len(body), b"WAVE") + body


def read_wav(path: str | Path) -> AudioClip:
    """Read a RIFF/WAVE file into a mono AudioClip.

    Integer PCM is scaled by 1 / 2^(bits-1); float payloads pass through.
    Multichannel data is averaged across channels, which keeps any common
    signal at its original level.
    """
    path = Path(path)
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoError(f"cannot open {path}: {exc}") from exc
    with fh:
        return _decode(fh, str(path))


def read_wav_bytes(data: bytes) -> AudioClip:
    """Parse in-memory WAV bytes (service ingest)."""
    return _decode(io.BytesIO(data), None)


def write_wav(path: str | Path, clip: AudioClip, format: str = "float32") -> None:
    """Write a clip as PCM16 or IEEE float32.

    pcm16 rounds to nearest and clips at full scale; float32 is lossless for
    any sample already representable in single precision.
    """
    encoded = _encode(clip, format)
    try:
        with open(path, "wb") as fh:
            fh.write(encoded)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def wav_bytes(clip: AudioClip, format: str = "float32") -> bytes:
    """Serialize a clip to in-memory WAV bytes (service responses)."""
    return _encode(clip, format)


def require_length(clip: AudioClip, minimum: int) -> None:
    if len(clip) < minimum:
        raise EmptyClip(f"clip has {len(clip)} samples, need at least {minimum}")
