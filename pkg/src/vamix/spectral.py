"""Short-time Fourier analysis at the engine's canonical parameters.

The analysis grid is a 1022-sample periodic Hann window hopped by 512 at
44.1 kHz, which yields 512 frequency bins and, for a ~6 s clip, a roughly
square magnitude matrix. Frames are centered via reflect padding so that
frame t sits at sample t*hop, keeping masks phase-aligned with the signal.

Inversion is weighted overlap-add with squared-window normalization, exact
to rounding error wherever the window-energy denominator is healthy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .audio_io import AudioClip
from .errors import DegenerateWindowSum, DimensionMismatch, EmptyClip, SampleRateMismatch

DEFAULT_WINDOW_SIZE = 1022
DEFAULT_HOP = 512

# Incremented on every forward transform; lets tests pin down how many
# forward transforms a code path performs (the render path must do none).
_stft_calls = 0


def stft_call_count() -> int:
    return _stft_calls


@dataclass(frozen=True)
class StftParams:
    """Analysis grid: window/hop/FFT sizes plus the rate they assume.

    fft_size defaults to window_size. Values above window_size zero-pad each
    frame (more bins, still invertible); the canonical 1022/512 grid keeps
    fft_size == window_size so exactly 512 bins are produced.
    """

    window_size: int = DEFAULT_WINDOW_SIZE
    hop: int = DEFAULT_HOP
    window: str = "hann"
    fft_size: int | None = None
    sample_rate: int = 44100
    center_pad: bool = True

    def __post_init__(self):
        if self.fft_size is None:
            object.__setattr__(self, "fft_size", self.window_size)
        if self.window_size < 2:
            raise ValueError(f"window_size must be >= 2, got {self.window_size}")
        if not 0 < self.hop <= self.window_size:
            raise ValueError(f"hop must be in (0, window_size], got {self.hop}")
        if self.fft_size < self.window_size:
            raise ValueError("fft_size must be >= window_size")
        if self.window != "hann":
            raise ValueError(f"unknown window taper {self.window!r}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        return self.window_size // 2 if self.center_pad else 0

    def frame_count(self, n_samples: int) -> int:
        padded = n_samples + 2 * self.pad
        if padded < self.window_size:
            return 0
        return (padded - self.window_size) // self.hop + 1

    def bin_frequency(self, k: int) -> float:
        return k * self.sample_rate / self.fft_size

    def with_rate(self, sample_rate: int) -> "StftParams":
        return replace(self, sample_rate=sample_rate)


@lru_cache(maxsize=8)
def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class ComplexSpectrogram:
    data: np.ndarray  # bins x frames, complex128
    params: StftParams
    original_length: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or data.shape[0] != self.params.bins:
            raise DimensionMismatch(
                f"spectrogram shape {data.shape} inconsistent with {self.params.bins} bins"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("spectrogram contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def bins(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    def scaled(self, factor: complex) -> "ComplexSpectrogram":
        return ComplexSpectrogram(self.data * factor, self.params, self.original_length)


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    data: np.ndarray  # bins x frames, nonnegative float64
    params: StftParams

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionMismatch(f"magnitude must be 2-D, got shape {data.shape}")
        if np.any(data < 0) or not np.all(np.isfinite(data)):
            raise ValueError("magnitude entries must be finite and nonnegative")
        object.__setattr__(self, "data", data)

    @property
    def bins(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]


def stft(clip: AudioClip, params: StftParams | None = None) -> ComplexSpectrogram:
    """Forward transform. Linear in the input; 512 bins at defaults."""
    global _stft_calls
    params = params or StftParams()
    if clip.sample_rate != params.sample_rate:
        raise SampleRateMismatch(
            f"clip at {clip.sample_rate} Hz, analysis configured for {params.sample_rate} Hz"
        )
    x = clip.samples
    if len(x) == 0:
        raise EmptyClip("cannot transform an empty clip")
    if params.center_pad:
        if len(x) < params.pad + 1:
            raise EmptyClip(
                f"clip of {len(x)} samples too short for centered analysis "
                f"(needs at least {params.pad + 1})"
            )
        x = np.pad(x, (params.pad, params.pad), mode="reflect")
    elif len(x) < params.window_size:
        raise EmptyClip(f"clip shorter than one window ({params.window_size} samples)")

    n_frames = (len(x) - params.window_size) // params.hop + 1
    frames = np.lib.stride_tricks.sliding_window_view(x, params.window_size)
    frames = frames[:: params.hop][:n_frames]
    window = _hann_periodic(params.window_size)
    _stft_calls += 1
    data = np.fft.rfft(frames * window, n=params.fft_size, axis=1).T
    return ComplexSpectrogram(data=data, params=params, original_length=len(clip))


def istft(spec: ComplexSpectrogram, target_length: int | None = None) -> AudioClip:
    """Weighted overlap-add inverse with window-sum-squared compensation.

    The output is trimmed (or zero-extended) to target_length, defaulting to
    the forward transform's original length.
    """
    params = spec.params
    if target_length is None:
        target_length = spec.original_length
    if target_length < 0:
        raise ValueError("target_length must be nonnegative")

    window = _hann_periodic(params.window_size)
    n_frames = spec.frames
    overlap_len = params.window_size + (n_frames - 1) * params.hop
    acc = np.zeros(overlap_len)
    wsum = np.zeros(overlap_len)

    frames = np.fft.irfft(spec.data.T, n=params.fft_size, axis=1)[:, : params.window_size]
    frames *= window
    for t in range(n_frames):
        start = t * params.hop
        acc[start : start + params.window_size] += frames[t]
        wsum[start : start + params.window_size] += window * window

    pad = params.pad
    covered = max(0, overlap_len - pad)
    valid = min(target_length, covered)
    denom = wsum[pad : pad + valid]
    if np.any(denom < 1e-10):
        raise DegenerateWindowSum(
            "window-energy normalization vanished inside the valid region "
            "(hop/window combination leaves gaps)"
        )
    out = np.zeros(target_length)
    out[:valid] = acc[pad : pad + valid] / denom
    return AudioClip(samples=out, sample_rate=params.sample_rate)


def magnitude(spec: ComplexSpectrogram) -> MagnitudeSpectrogram:
    """Elementwise modulus of a complex spectrogram."""
    return MagnitudeSpectrogram(data=np.abs(spec.data), params=spec.params)
