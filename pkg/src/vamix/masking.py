"""Time-frequency masks: oracle construction, smoothing, and a disk format.

A mask is a bins-by-frames matrix in [0, 1] tagged with a kind:

* ``binary``  -- hard partition entries, exactly 0 or 1
* ``ratio``   -- magnitude-ratio soft entries
* ``smoothed``-- output of one of the smoothing operators below
* ``external``-- anything imported from outside the library

Mask sets group one mask per source over a common analysis grid and are
serialized to a little-endian container (magic ``TFMK``) with a JSON sidecar
duplicating the metadata for tools that cannot parse the binary layout.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.fft import dct, idct
from scipy.signal import lfilter

from .errors import (
    DimensionMismatch,
    InvalidAlpha,
    InvalidParams,
    MalformedFile,
    VersionUnsupported,
)
from .spectral import MagnitudeSpectrogram, StftParams

MASK_KIND_CODES = {"binary": 0, "ratio": 1, "smoothed": 2, "external": 3}
_CODE_TO_KIND = {v: k for k, v in MASK_KIND_CODES.items()}

_MAGIC = b"TFMK"
_FORMAT_VERSION = 1
_RATIO_EPS = 1e-12

# Default time-smoothing coefficient; the middle of the plateau the bundled
# tuning harness finds on synthetic material.
DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class Mask:
    data: np.ndarray  # bins x frames, float64 in [0, 1]
    kind: str
    label: str = ""

    def __post_init__(self):
        if self.kind not in MASK_KIND_CODES:
            raise InvalidParams(f"unknown mask kind {self.kind!r}")
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionMismatch(f"mask must be 2-D, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("mask entries must be finite")
        if data.min(initial=0.0) < 0.0 or data.max(initial=0.0) > 1.0:
            raise ValueError("mask entries must lie in [0, 1]")
        if self.kind == "binary" and not np.array_equal(data, data.astype(bool)):
            raise ValueError("binary mask entries must be exactly 0 or 1")
        object.__setattr__(self, "data", data)

    @property
    def bins(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    def complement(self) -> "Mask":
        return Mask(1.0 - self.data, kind=self.kind, label=self.label)


@dataclass(frozen=True)
class MaskSet:
    """One mask per source over a shared analysis grid."""

    masks: tuple[Mask, ...]
    params: StftParams

    def __post_init__(self):
        masks = tuple(self.masks)
        if not masks:
            raise InvalidParams("a mask set needs at least one mask")
        bins, frames = masks[0].bins, masks[0].frames
        for m in masks:
            if (m.bins, m.frames) != (bins, frames):
                raise DimensionMismatch("all masks in a set must share one shape")
        if bins != self.params.bins:
            raise DimensionMismatch(
                f"masks have {bins} bins but the analysis grid produces {self.params.bins}"
            )
        if all(m.kind in ("binary", "ratio") for m in masks):
            # Tolerance covers float32 storage: a soft partition written to
            # file and read back can overshoot 1 by a few f32 ulps per source.
            total = np.sum([m.data for m in masks], axis=0)
            if total.max(initial=0.0) > 1.0 + 1e-6:
                raise ValueError("binary/ratio masks in a set must sum to at most 1 per bin")
        object.__setattr__(self, "masks", masks)

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self):
        return iter(self.masks)

    def __getitem__(self, i: int) -> Mask:
        return self.masks[i]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.masks)

    @property
    def bins(self) -> int:
        return self.masks[0].bins

    @property
    def frames(self) -> int:
        return self.masks[0].frames


def _default_labels(n: int, labels: list[str] | None) -> list[str]:
    if labels is None:
        return [f"source_{i}" for i in range(n)]
    if len(labels) != n:
        raise InvalidParams(f"got {len(labels)} labels for {n} sources")
    return list(labels)


def ideal_binary_masks(
    stem_mags: list[MagnitudeSpectrogram], labels: list[str] | None = None
) -> MaskSet:
    """Hard assignment of each bin to its loudest stem.

    Ties go to the lowest source index, so the masks always partition the
    grid: they are pairwise disjoint and sum to exactly one everywhere.
    """
    if not stem_mags:
        raise InvalidParams("need at least one stem magnitude")
    params = stem_mags[0].params
    shape = stem_mags[0].data.shape
    for mag in stem_mags:
        if mag.data.shape != shape:
            raise DimensionMismatch("stem magnitudes must share one shape")
    stack = np.stack([m.data for m in stem_mags], axis=0)
    winner = np.argmax(stack, axis=0)  # ties resolve to the lowest index
    names = _default_labels(len(stem_mags), labels)
    masks = [
        Mask((winner == i).astype(np.float64), kind="binary", label=names[i])
        for i in range(len(stem_mags))
    ]
    return MaskSet(masks=tuple(masks), params=params)


def ideal_ratio_masks(
    stem_mags: list[MagnitudeSpectrogram], labels: list[str] | None = None
) -> MaskSet:
    """Soft assignment by magnitude share, regularized for silent bins."""
    if not stem_mags:
        raise InvalidParams("need at least one stem magnitude")
    params = stem_mags[0].params
    shape = stem_mags[0].data.shape
    for mag in stem_mags:
        if mag.data.shape != shape:
            raise DimensionMismatch("stem magnitudes must share one shape")
    stack = np.stack([m.data for m in stem_mags], axis=0)
    denom = stack.sum(axis=0) + _RATIO_EPS
    names = _default_labels(len(stem_mags), labels)
    masks = [
        Mask(stack[i] / denom, kind="ratio", label=names[i]) for i in range(len(stem_mags))
    ]
    return MaskSet(masks=tuple(masks), params=params)


def random_binary_mask(
    bins: int, frames: int, seed: int, density: float = 0.5, label: str = ""
) -> Mask:
    """Seeded Bernoulli mask; the chance-level floor for benchmarks."""
    if not 0.0 <= density <= 1.0:
        raise InvalidParams(f"density must lie in [0, 1], got {density}")
    if bins <= 0 or frames <= 0:
        raise InvalidParams("mask dimensions must be positive")
    rng = np.random.default_rng(seed)
    data = (rng.random((bins, frames)) < density).astype(np.float64)
    return Mask(data, kind="binary", label=label)


def random_binary_partition(
    params: StftParams,
    frames: int,
    n_sources: int,
    seed: int,
    labels: list[str] | None = None,
) -> MaskSet:
    """One-hot masks from a uniform random winner per bin: the chance floor.

    Unlike independent Bernoulli draws, the result is a partition, so it can
    live in a MaskSet and be compared against oracle masks on equal terms.
    """
    if n_sources < 1:
        raise InvalidParams("need at least one source")
    if frames <= 0:
        raise InvalidParams("frame count must be positive")
    names = _default_labels(n_sources, labels)
    rng = np.random.default_rng(seed)
    winner = rng.integers(0, n_sources, size=(params.bins, frames))
    masks = [
        Mask((winner == i).astype(np.float64), kind="binary", label=names[i])
        for i in range(n_sources)
    ]
    return MaskSet(masks=tuple(masks), params=params)


def flip_mask(mask: Mask, rho: float, rng: np.random.Generator) -> Mask:
    """Flip each entry independently with probability rho.

    Stands in for an imperfect mask predictor: the result no longer
    partitions the grid with its siblings, which is exactly the failure mode
    smoothing is meant to paper over.
    """
    if not 0.0 <= rho <= 1.0:
        raise InvalidParams(f"flip probability must lie in [0, 1], got {rho}")
    flips = rng.random(mask.data.shape) < rho
    data = np.where(flips, 1.0 - mask.data, mask.data)
    return Mask(data, kind=mask.kind, label=mask.label)


def smooth_zlbm(mask: Mask, alpha: float) -> Mask:
    """Zero-lag bidirectional low-pass along time.

    A first-order recursive filter y[t] = (1 - alpha) x[t] + alpha y[t-1]
    with y[-1] = x[0] runs forward over the frames, then the same filter runs
    backward over that output (initialized from its last frame). Two
    single-pole passes in opposite directions cancel each other's group
    delay, so features stay put while transitions relax. alpha = 0 is the
    identity on the data.
    """
    if mask.kind not in ("binary", "external"):
        raise InvalidParams(f"can only smooth binary or external masks, got {mask.kind!r}")
    if not 0.0 <= alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in [0, 1), got {alpha}")
    x = mask.data
    if alpha == 0.0:
        return Mask(x.copy(), kind="smoothed", label=mask.label)
    b = [1.0 - alpha]
    a = [1.0, -alpha]
    fwd, _ = lfilter(b, a, x, axis=1, zi=alpha * x[:, :1])
    rev = fwd[:, ::-1]
    bwd, _ = lfilter(b, a, rev, axis=1, zi=alpha * rev[:, :1])
    out = np.clip(bwd[:, ::-1], 0.0, 1.0)
    return Mask(out, kind="smoothed", label=mask.label)


def smooth_cbm(mask: Mask, lifter_cutoff: int, floor_db: float = -80.0) -> Mask:
    """Cepstral lifter applied frame by frame along frequency.

    Each frame's log-magnitude profile is carried into the cepstral domain
    (DCT-I), truncated above the cutoff quefrency, and mapped back;
    the floor keeps log(0) finite and sets how deep a rejected bin can go.
    """
    if mask.kind not in ("binary", "external"):
        raise InvalidParams(f"can only smooth binary or external masks, got {mask.kind!r}")
    if not 0 < lifter_cutoff < mask.bins:
        raise InvalidParams(
            f"lifter cutoff must lie in (0, {mask.bins}), got {lifter_cutoff}"
        )
    if floor_db >= 0:
        raise InvalidParams(f"floor must be below 0 dB, got {floor_db}")
    floor = 10.0 ** (floor_db / 20.0)
    logm = np.log(np.maximum(mask.data, floor))
    ceps = idct(logm, type=1, axis=0)
    ceps[lifter_cutoff:, :] = 0.0
    data = np.clip(np.exp(dct(ceps, type=1, axis=0)), 0.0, 1.0)
    return Mask(data, kind="smoothed", label=mask.label)


def smooth_mask_set(
    mask_set: MaskSet,
    method: str = "zlbm",
    *,
    alpha: float = DEFAULT_ALPHA,
    lifter_cutoff: int = 24,
    floor_db: float = -80.0,
) -> MaskSet:
    """Smooth every binary/external mask in a set; soft masks pass through."""
    if method not in ("zlbm", "cbm"):
        raise InvalidParams(f"unknown smoothing method {method!r}")
    out = []
    for m in mask_set:
        if m.kind not in ("binary", "external"):
            out.append(m)
        elif method == "zlbm":
            out.append(smooth_zlbm(m, alpha))
        else:
            out.append(smooth_cbm(m, lifter_cutoff, floor_db))
    return MaskSet(masks=tuple(out), params=mask_set.params)


def write_mask_set(mask_set: MaskSet, path: str | Path) -> None:
    """Serialize a mask set plus a JSON sidecar describing it.

    Layout (all integers little-endian): ``TFMK`` magic, u32 version,
    u32 source count, u32 bins, u32 frames, u32 window size, u32 hop,
    u32 sample rate; then per source a u16-length UTF-8 label, a u8 kind
    code, and bins*frames float32 values in frame-major order.
    """
    path = Path(path)
    p = mask_set.params
    header = _MAGIC + struct.pack(
        "<7I",
        _FORMAT_VERSION,
        len(mask_set),
        mask_set.bins,
        mask_set.frames,
        p.window_size,
        p.hop,
        p.sample_rate,
    )
    chunks = [header]
    for m in mask_set:
        raw = m.label.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise InvalidParams(f"label too long to serialize ({len(raw)} bytes)")
        chunks.append(struct.pack("<H", len(raw)) + raw)
        chunks.append(struct.pack("<B", MASK_KIND_CODES[m.kind]))
        chunks.append(m.data.astype("<f4").ravel(order="F").tobytes())
    path.write_bytes(b"".join(chunks))

    sidecar = {
        "format": "tfmk",
        "version": _FORMAT_VERSION,
        "n_sources": len(mask_set),
        "bins": mask_set.bins,
        "frames": mask_set.frames,
        "window_size": p.window_size,
        "hop": p.hop,
        "sample_rate": p.sample_rate,
        "sources": [{"label": m.label, "kind": m.kind} for m in mask_set],
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_mask_set(path: str | Path) -> MaskSet:
    """Parse a mask-set container file, validating structure and value ranges."""
    path = Path(path)
    return read_mask_set_bytes(path.read_bytes(), origin=str(path))


def read_mask_set_bytes(blob: bytes, origin: str = "<memory>") -> MaskSet:
    """Parse an in-memory mask-set container (uploads, tests)."""
    path = origin
    if len(blob) < 32 or blob[:4] != _MAGIC:
        raise MalformedFile(f"{path}: not a TFMK mask container")
    version, n_sources, bins, frames, window_size, hop, rate = struct.unpack_from(
        "<7I", blob, 4
    )
    if version != _FORMAT_VERSION:
        raise VersionUnsupported(f"{path}: container version {version} not supported")
    if n_sources == 0 or bins == 0 or frames == 0:
        raise MalformedFile(f"{path}: degenerate dimensions in header")
    try:
        params = StftParams(window_size=window_size, hop=hop, sample_rate=rate)
    except ValueError as exc:
        raise MalformedFile(f"{path}: bad analysis parameters in header: {exc}") from exc
    if bins != params.bins:
        raise DimensionMismatch(
            f"{path}: header says {bins} bins but window {window_size} produces {params.bins}"
        )

    offset = 32
    masks = []
    for _ in range(n_sources):
        if offset + 2 > len(blob):
            raise MalformedFile(f"{path}: truncated before label length")
        (label_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        if offset + label_len + 1 > len(blob):
            raise MalformedFile(f"{path}: truncated inside source header")
        try:
            label = blob[offset : offset + label_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFile(f"{path}: label is not valid UTF-8") from exc
        offset += label_len
        code = blob[offset]
        offset += 1
        if code not in _CODE_TO_KIND:
            raise MalformedFile(f"{path}: unknown mask kind code {code}")
        n_values = bins * frames
        end = offset + 4 * n_values
        if end > len(blob):
            raise MalformedFile(f"{path}: truncated mask payload")
        flat = np.frombuffer(blob[offset:end], dtype="<f4").astype(np.float64)
        offset = end
        data = flat.reshape((bins, frames), order="F")
        try:
            masks.append(Mask(data, kind=_CODE_TO_KIND[code], label=label))
        except ValueError as exc:
            raise MalformedFile(f"{path}: {exc}") from exc
    if offset != len(blob):
        raise MalformedFile(f"{path}: {len(blob) - offset} trailing bytes")
    try:
        return MaskSet(masks=tuple(masks), params=params)
    except (ValueError, DimensionMismatch) as exc:
        raise MalformedFile(f"{path}: {exc}") from exc
