"""vamix: continuous per-source remixing of mixed audio via time-frequency masks.

The pipeline in one breath: transform the mixture (1022-sample Hann window,
512 hop, 44.1 kHz), fold per-source masks and gain offsets into a single
nonnegative gain field, scale the mixture spectrogram by it, and invert.
Sources are never rendered individually on the way to a remix.

Modules:

* audio_io    -- WAV reading/writing and the AudioClip container
* spectral    -- STFT/ISTFT at the engine's canonical parameters
* masking     -- oracle masks, smoothing operators, and the mask-set format
* remix       -- the gain-field engine and the classic separate route
* evaluation  -- delay-projected SDR/SIR/SAR, NSDR, and SNR helpers
* harness     -- mix-and-separate benchmarks, tuning, and gain sweeps
* cli         -- the `vamix` command-line front end
* service     -- a small HTTP remixing service with precomputed sessions
"""

from __future__ import annotations

from .audio_io import AudioClip, read_wav, read_wav_bytes, wav_bytes, write_wav
from .errors import VamixError
from .evaluation import EvalReport, SourceMetrics, bss_eval, nsdr, smoothing_gain, snr_to_reference
from .harness import (
    BoundsReport,
    StemPair,
    SweepReport,
    TuneResult,
    bounds_benchmark,
    corrupt_mask_set,
    make_pair,
    pairs_from_manifest,
    sweep_gains,
    synthetic_pairs,
    synthetic_stem_pair,
    tune_smoothing,
)
from .masking import (
    DEFAULT_ALPHA,
    Mask,
    MaskSet,
    ideal_binary_masks,
    ideal_ratio_masks,
    random_binary_mask,
    read_mask_set,
    smooth_cbm,
    smooth_mask_set,
    smooth_zlbm,
    write_mask_set,
)
from .remix import (
    RemixSpec,
    gain_field,
    gain_to_db,
    gain_to_slider,
    remix,
    separate_and_add,
    separate_source,
    slider_to_gain,
)
from .spectral import ComplexSpectrogram, MagnitudeSpectrogram, StftParams, istft, magnitude, stft

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "BoundsReport",
    "ComplexSpectrogram",
    "DEFAULT_ALPHA",
    "EvalReport",
    "MagnitudeSpectrogram",
    "Mask",
    "MaskSet",
    "RemixSpec",
    "SourceMetrics",
    "StemPair",
    "StftParams",
    "SweepReport",
    "TuneResult",
    "VamixError",
    "bounds_benchmark",
    "corrupt_mask_set",
    "bss_eval",
    "gain_field",
    "gain_to_db",
    "gain_to_slider",
    "ideal_binary_masks",
    "ideal_ratio_masks",
    "istft",
    "magnitude",
    "make_pair",
    "nsdr",
    "pairs_from_manifest",
    "random_binary_mask",
    "read_mask_set",
    "read_wav",
    "read_wav_bytes",
    "remix",
    "separate_and_add",
    "separate_source",
    "slider_to_gain",
    "smooth_cbm",
    "smooth_mask_set",
    "smooth_zlbm",
    "smoothing_gain",
    "snr_to_reference",
    "stft",
    "sweep_gains",
    "synthetic_pairs",
    "synthetic_stem_pair",
    "tune_smoothing",
    "wav_bytes",
    "write_mask_set",
    "write_wav",
    "__version__",
]
