"""Mix-and-separate experiments: benchmarks, tuning, and gain sweeps.

Everything here follows the same recipe: take two stems, mix them, build
oracle masks from the stems, optionally corrupt those masks to emulate an
imperfect predictor, and measure how well reconstruction or remixing holds
up. Results come back as small report objects that serialize to JSON and
CSV and embed a hash of the configuration that produced them.

Stems come from local WAV files (listed in a manifest) or from the bundled
synthetic generator, which produces a harmonic voice and a percussive one
with mostly disjoint spectra -- enough structure for oracle masks to mean
something.

Work across stem pairs fans out over a thread pool sized by the
VAMIX_THREADS environment variable (all the heavy lifting is FFTs, which
release the interpreter lock). Results are independent of the thread count.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import AudioClip, read_wav
from .errors import EmptyGrid, InvalidParams, SampleRateMismatch, SilentReference, TooShort
from .evaluation import DEFAULT_FILTER_LEN, EvalReport, bss_eval, smoothing_gain, snr_to_reference
from .masking import (
    DEFAULT_ALPHA,
    Mask,
    MaskSet,
    flip_mask,
    ideal_binary_masks,
    random_binary_partition,
    smooth_cbm,
    smooth_zlbm,
)
from .remix import RemixSpec, apply_gain_field, remix  # noqa: F401  (remix re-exported for demos)
from .spectral import ComplexSpectrogram, StftParams, istft, magnitude, stft

DEFAULT_SEGMENT_LEN = 262144  # ~5.94 s at 44.1 kHz; 512 hops + 1 frames
DEFAULT_CORRUPT_RHO = 0.05
DEFAULT_GAIN_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


def thread_count() -> int:
    """Worker cap for pair-level parallelism, from VAMIX_THREADS (0 = auto)."""
    raw = os.environ.get("VAMIX_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def _pmap(fn, items):
    """Order-preserving map over a thread pool; serial when it cannot help."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def config_hash(config: dict) -> str:
    """Stable short digest of a configuration dictionary."""
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Stem pairs


@dataclass(frozen=True)
class StemPair:
    """Two aligned stems and their sum, ready for mask experiments."""

    stem_a: AudioClip
    stem_b: AudioClip
    mixture: AudioClip
    labels: tuple[str, str] = ("a", "b")

    def __post_init__(self):
        if not (len(self.stem_a) == len(self.stem_b) == len(self.mixture)):
            raise InvalidParams("stems and mixture must share one length")

    @property
    def stems(self) -> tuple[AudioClip, AudioClip]:
        return (self.stem_a, self.stem_b)


def _normalized_segment(clip: AudioClip, start: int, length: int, peak: float) -> AudioClip:
    seg = clip.samples[start : start + length].copy()
    top = np.max(np.abs(seg)) if len(seg) else 0.0
    if top > 0.0:
        seg *= peak / top
    return AudioClip(samples=seg, sample_rate=clip.sample_rate)


def make_pair(
    clip_a: AudioClip,
    clip_b: AudioClip,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    seed: int = 0,
    labels: tuple[str, str] = ("a", "b"),
    peak: float = 0.45,
) -> StemPair:
    """Cut one aligned segment from each clip and mix them.

    Segments are drawn at seeded random offsets and peak-normalized to 0.45
    each, so the sum stays comfortably inside [-1, 1]. A silent segment is
    left silent rather than blown up.
    """
    if clip_a.sample_rate != clip_b.sample_rate:
        raise SampleRateMismatch(
            f"stems at {clip_a.sample_rate} Hz and {clip_b.sample_rate} Hz"
        )
    if segment_len <= 0:
        raise InvalidParams("segment_len must be positive")
    if len(clip_a) < segment_len or len(clip_b) < segment_len:
        raise TooShort(
            f"stems of {len(clip_a)} and {len(clip_b)} samples cannot yield "
            f"a {segment_len}-sample segment"
        )
    rng = np.random.default_rng([seed, len(clip_a), len(clip_b)])
    start_a = int(rng.integers(0, len(clip_a) - segment_len + 1))
    start_b = int(rng.integers(0, len(clip_b) - segment_len + 1))
    a = _normalized_segment(clip_a, start_a, segment_len, peak)
    b = _normalized_segment(clip_b, start_b, segment_len, peak)
    mix = AudioClip(samples=a.samples + b.samples, sample_rate=a.sample_rate)
    return StemPair(stem_a=a, stem_b=b, mixture=mix, labels=labels)


# ---------------------------------------------------------------------------
# Stem sources: manifest files and the synthetic generator


@dataclass(frozen=True)
class StemEntry:
    file: Path
    label: str
    instrument: str = ""


def load_manifest(path: str | Path) -> list[StemEntry]:
    """Read a stem manifest: {"stems": [{"file", "label", "instrument"?}]}.

    File paths are resolved relative to the manifest's directory.
    """
    path = Path(path)
    payload = json.loads(path.read_text())
    entries = payload.get("stems")
    if not isinstance(entries, list) or not entries:
        raise InvalidParams(f"{path}: manifest needs a non-empty 'stems' list")
    out = []
    for i, rec in enumerate(entries):
        if not isinstance(rec, dict) or "file" not in rec:
            raise InvalidParams(f"{path}: stem entry {i} lacks a 'file' field")
        file = Path(rec["file"])
        if not file.is_absolute():
            file = path.parent / file
        out.append(
            StemEntry(
                file=file,
                label=str(rec.get("label", file.stem)),
                instrument=str(rec.get("instrument", "")),
            )
        )
    return out


def pairs_from_manifest(
    manifest_path: str | Path,
    n_pairs: int,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    seed: int = 0,
) -> list[StemPair]:
    """Draw seeded random pairs of distinct stems from a manifest."""
    entries = load_manifest(manifest_path)
    if len(entries) < 2:
        raise InvalidParams("need at least two stems to form pairs")
    if n_pairs <= 0:
        raise InvalidParams("n_pairs must be positive")
    clips = [read_wav(e.file) for e in entries]
    rng = np.random.default_rng(seed)
    pairs = []
    for k in range(n_pairs):
        i, j = rng.choice(len(entries), size=2, replace=False)
        pairs.append(
            make_pair(
                clips[i],
                clips[j],
                segment_len=segment_len,
                seed=int(rng.integers(0, 2**31)),
                labels=(entries[i].label, entries[j].label),
            )
        )
    return pairs


def synthetic_stem_pair(
    seed: int, duration_s: float = 6.5, sample_rate: int = 44100
) -> tuple[AudioClip, AudioClip]:
    """A harmonic stem and a percussive stem with mostly disjoint spectra.

    The harmonic stem is a vibrato'd partial stack with slow amplitude
    movement; the percussive one is a train of decaying noise-plus-tone
    bursts. Oracle masks built from these pick up genuine structure, which
    is all the experiments need.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate

    # Harmonic stem: vibrato as phase modulation so the pitch wobbles in
    # place instead of drifting.
    f0 = rng.uniform(150.0, 400.0)
    vib_rate = rng.uniform(4.0, 7.0)
    vib_depth = rng.uniform(0.5, 1.5)  # radians at the fundamental
    vib = vib_depth * np.sin(2.0 * np.pi * vib_rate * t + rng.uniform(0, 2 * np.pi))
    am = 0.6 + 0.4 * np.sin(2.0 * np.pi * rng.uniform(0.2, 0.7) * t + rng.uniform(0, 2 * np.pi))
    harmonic = np.zeros(n)
    for k in range(1, 7):
        amp = k ** -rng.uniform(1.0, 1.6)
        harmonic += amp * np.sin(2.0 * np.pi * k * f0 * t + k * vib + rng.uniform(0, 2 * np.pi))
    harmonic *= am
    ramp = min(n, int(0.05 * sample_rate))
    harmonic[:ramp] *= np.linspace(0.0, 1.0, ramp)
    harmonic[-ramp:] *= np.linspace(1.0, 0.0, ramp)

    # Percussive stem: seeded burst train, each burst an exponentially
    # decaying mix of noise and a high tone.
    percussive = np.zeros(n)
    n_bursts = int(rng.integers(8, 15))
    burst_len = int(0.12 * sample_rate)
    for _ in range(n_bursts):
        start = int(rng.integers(0, max(1, n - burst_len)))
        tau = rng.uniform(0.02, 0.06) * sample_rate
        k = np.arange(burst_len)
        env = np.exp(-k / tau)
        f1 = rng.uniform(500.0, 1200.0)
        tone = np.sin(2.0 * np.pi * f1 * k / sample_rate + rng.uniform(0, 2 * np.pi))
        noise = rng.standard_normal(burst_len)
        percussive[start : start + burst_len] += env * (0.4 * tone + 0.6 * noise)

    def _norm(x: np.ndarray) -> np.ndarray:
        top = np.max(np.abs(x))
        return x * (0.9 / top) if top > 0 else x

    return (
        AudioClip(samples=_norm(harmonic), sample_rate=sample_rate),
        AudioClip(samples=_norm(percussive), sample_rate=sample_rate),
    )


def synthetic_pairs(
    n_pairs: int, segment_len: int = DEFAULT_SEGMENT_LEN, seed: int = 0
) -> list[StemPair]:
    """Seeded synthetic stem pairs sized for the default segment length."""
    duration_s = segment_len / 44100.0 + 0.6

    def one(k: int) -> StemPair:
        a, b = synthetic_stem_pair(seed=int(np.random.default_rng([seed, k]).integers(2**31)),
                                   duration_s=duration_s)
        return make_pair(a, b, segment_len=segment_len, seed=seed + k,
                         labels=("harmonic", "percussive"))

    return [one(k) for k in range(n_pairs)]


# ---------------------------------------------------------------------------
# Shared plumbing


def _oracle_masks(pair: StemPair, params: StftParams) -> tuple[ComplexSpectrogram, MaskSet]:
    """Mixture spectrogram plus ideal binary masks built from the stems."""
    X = stft(pair.mixture, params)
    mags = [magnitude(stft(s, params)) for s in pair.stems]
    return X, ideal_binary_masks(mags, labels=list(pair.labels))


def corrupt_mask_set(mask_set: MaskSet, rho: float, seed: int) -> MaskSet:
    """Flip each source's mask independently; emulates a noisy predictor.

    Because every source is corrupted on its own, the results generally stop
    forming a partition -- bins get claimed by both sources or by none, as a
    real predictor's masks would. The outputs are tagged external.
    """
    masks = []
    for i, m in enumerate(mask_set):
        rng = np.random.default_rng([seed, i])
        flipped = flip_mask(m, rho, rng)
        masks.append(Mask(flipped.data, kind="external", label=m.label))
    return MaskSet(masks=tuple(masks), params=mask_set.params)


def _separate(X: ComplexSpectrogram, mask: Mask, length: int) -> AudioClip:
    masked = ComplexSpectrogram(
        data=X.data * mask.data, params=X.params, original_length=X.original_length
    )
    return istft(masked, target_length=length)


# ---------------------------------------------------------------------------
# Oracle-vs-chance benchmark


@dataclass(frozen=True)
class BenchRow:
    pair_index: int
    system: str  # "ibm" or "rbm"
    report: EvalReport


@dataclass(frozen=True)
class BoundsReport:
    """Per-pair scores for oracle and chance masks, plus aggregate means."""

    rows: tuple[BenchRow, ...]
    config: dict
    config_digest: str

    def system_mean(self, system: str, metric: str) -> float:
        values = []
        for row in self.rows:
            if row.system != system:
                continue
            values.extend(
                getattr(s, metric) for s in row.report.sources if getattr(s, metric) is not None
            )
        if not values:
            raise InvalidParams(f"no defined {metric} values for system {system!r}")
        return float(np.mean(values))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_digest": self.config_digest,
            "rows": [
                {"pair": r.pair_index, "system": r.system, **r.report.to_dict()}
                for r in self.rows
            ],
            "means": {
                system: {m: self.system_mean(system, m) for m in ("nsdr", "sir", "sar")}
                for system in sorted({r.system for r in self.rows})
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        """Aggregate table: one row per metric, one column per system."""
        systems = sorted({r.system for r in self.rows})
        lines = ["metric," + ",".join(systems)]
        for metric in ("nsdr", "sir", "sar"):
            cells = [f"{self.system_mean(sys_, metric):.4f}" for sys_ in systems]
            lines.append(f"{metric}_db," + ",".join(cells))
        return "\n".join(lines) + "\n"


def bounds_benchmark(
    pairs: list[StemPair],
    params: StftParams | None = None,
    filter_len: int = DEFAULT_FILTER_LEN,
    seed: int = 0,
) -> BoundsReport:
    """Score ideal binary masks against random ones over a set of pairs.

    The oracle masks bound what mask-based separation can achieve on this
    material from above; seeded random partitions bound it from below. Every
    separation is mask-and-invert on the mixture spectrogram, scored with
    NSDR/SIR/SAR against the true stems.
    """
    if not pairs:
        raise InvalidParams("need at least one stem pair")
    params = params or StftParams(sample_rate=pairs[0].mixture.sample_rate)

    def run(item: tuple[int, StemPair]) -> list[BenchRow]:
        idx, pair = item
        X, ibm = _oracle_masks(pair, params)
        n = len(pair.mixture)
        rows = []
        estimates = [_separate(X, m, n) for m in ibm]
        rows.append(
            BenchRow(
                pair_index=idx,
                system="ibm",
                report=bss_eval(
                    estimates,
                    list(pair.stems),
                    filter_len=filter_len,
                    mixture=pair.mixture,
                    labels=list(pair.labels),
                ),
            )
        )
        chance = random_binary_partition(
            params,
            ibm.frames,
            len(ibm),
            seed=int(np.random.default_rng([seed, idx]).integers(2**31)),
            labels=list(pair.labels),
        )
        estimates = [_separate(X, m, n) for m in chance]
        rows.append(
            BenchRow(
                pair_index=idx,
                system="rbm",
                report=bss_eval(
                    estimates,
                    list(pair.stems),
                    filter_len=filter_len,
                    mixture=pair.mixture,
                    labels=list(pair.labels),
                ),
            )
        )
        return rows

    nested = _pmap(run, list(enumerate(pairs)))
    rows = tuple(row for group in nested for row in group)
    config = {
        "experiment": "bounds_benchmark",
        "n_pairs": len(pairs),
        "filter_len": filter_len,
        "seed": seed,
        "window_size": params.window_size,
        "hop": params.hop,
        "sample_rate": params.sample_rate,
    }
    return BoundsReport(rows=rows, config=config, config_digest=config_hash(config))


# ---------------------------------------------------------------------------
# Smoothing parameter tuning


@dataclass(frozen=True)
class TuneResult:
    method: str
    rows: tuple[tuple[float, float], ...]  # (parameter, mean gain dB)
    best_param: float
    best_gain: float
    config: dict
    config_digest: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "config": self.config,
            "config_digest": self.config_digest,
            "rows": [{"param": p, "mean_gain_db": g} for p, g in self.rows],
            "best_param": self.best_param,
            "best_gain_db": self.best_gain,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["param,mean_gain_db"]
        lines += [f"{p},{g:.4f}" for p, g in self.rows]
        return "\n".join(lines) + "\n"


def tune_smoothing(
    pairs: list[StemPair],
    method: str = "zlbm",
    param_grid: list[float] | None = None,
    corrupt_rho: float = DEFAULT_CORRUPT_RHO,
    seed: int = 0,
    params: StftParams | None = None,
    floor_db: float = -80.0,
) -> TuneResult:
    """Grid-search a smoothing parameter on corrupted oracle masks.

    For every pair the oracle binary masks are flipped with probability rho
    per bin (independently per source), smoothed at each grid value, and the
    smoothed reconstruction is compared against the unsmoothed one via the
    error-shrinkage gain. The winning parameter maximizes the mean gain; ties
    go to the earliest grid entry.
    """
    if not pairs:
        raise InvalidParams("need at least one stem pair")
    if method not in ("zlbm", "cbm"):
        raise InvalidParams(f"unknown smoothing method {method!r}")
    if param_grid is None:
        param_grid = [0.0, 0.25, 0.5, 0.75, 0.9] if method == "zlbm" else [8, 16, 24, 48, 96]
    grid = list(param_grid)
    if not grid:
        raise EmptyGrid("parameter grid is empty")
    params = params or StftParams(sample_rate=pairs[0].mixture.sample_rate)

    def run(item: tuple[int, StemPair]) -> list[float]:
        idx, pair = item
        X, ibm = _oracle_masks(pair, params)
        corrupted = corrupt_mask_set(ibm, corrupt_rho, seed=int(
            np.random.default_rng([seed, idx]).integers(2**31)
        ))
        n = len(pair.mixture)
        binary_recons = [_separate(X, m, n) for m in corrupted]
        gains = []
        for value in grid:
            total = 0.0
            for src, (mask, bin_recon) in enumerate(zip(corrupted, binary_recons)):
                if method == "zlbm":
                    smooth = smooth_zlbm(mask, alpha=float(value))
                else:
                    smooth = smooth_cbm(mask, lifter_cutoff=int(value), floor_db=floor_db)
                recon = _separate(X, smooth, n)
                total += smoothing_gain(pair.stems[src], bin_recon, recon)
            gains.append(total / len(corrupted))
        return gains

    per_pair = _pmap(run, list(enumerate(pairs)))
    means = np.mean(np.asarray(per_pair), axis=0)
    best_idx = int(np.argmax(means))
    config = {
        "experiment": "tune_smoothing",
        "method": method,
        "grid": list(map(float, grid)),
        "corrupt_rho": corrupt_rho,
        "seed": seed,
        "n_pairs": len(pairs),
        "floor_db": floor_db,
        "window_size": params.window_size,
        "hop": params.hop,
        "sample_rate": params.sample_rate,
    }
    return TuneResult(
        method=method,
        rows=tuple((float(p), float(g)) for p, g in zip(grid, means)),
        best_param=float(grid[best_idx]),
        best_gain=float(means[best_idx]),
        config=config,
        config_digest=config_hash(config),
    )


# ---------------------------------------------------------------------------
# Gain sweep: remix field vs separate-scale-add


@dataclass(frozen=True)
class SweepPoint:
    s_a: float
    s_b: float
    snr_remix: float | None
    snr_sep_add: float | None

    @property
    def delta(self) -> float | None:
        if self.snr_remix is None or self.snr_sep_add is None:
            return None
        return self.snr_remix - self.snr_sep_add


@dataclass(frozen=True)
class SweepReport:
    """SNR of both rendering routes over a grid of gain-offset pairs.

    Points whose ideal reference is silent (both sources fully muted) carry
    None scores and stay out of every aggregate.
    """

    points: tuple[SweepPoint, ...]
    grid: tuple[float, ...]
    config: dict
    config_digest: str

    def point(self, s_a: float, s_b: float) -> SweepPoint:
        for p in self.points:
            if p.s_a == s_a and p.s_b == s_b:
                return p
        raise KeyError(f"no sweep point at ({s_a}, {s_b})")

    def _deltas(self, interior: bool) -> list[float]:
        lo, hi = min(self.grid), max(self.grid)
        out = []
        for p in self.points:
            on_boundary = p.s_a in (lo, hi) or p.s_b in (lo, hi)
            if interior != on_boundary and p.delta is not None:
                out.append(p.delta)
        return out

    def interior_mean(self) -> float:
        values = self._deltas(interior=True)
        if not values:
            raise EmptyGrid("no interior points with defined scores")
        return float(np.mean(values))

    def boundary_mean(self) -> float:
        values = self._deltas(interior=False)
        if not values:
            raise EmptyGrid("no boundary points with defined scores")
        return float(np.mean(values))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_digest": self.config_digest,
            "grid": list(self.grid),
            "points": [
                {
                    "s_a": p.s_a,
                    "s_b": p.s_b,
                    "snr_remix_db": p.snr_remix,
                    "snr_sep_add_db": p.snr_sep_add,
                    "delta_db": p.delta,
                }
                for p in self.points
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["s_a,s_b,snr_remix_db,snr_sep_add_db,delta_db"]
        for p in self.points:
            cells = [f"{p.s_a}", f"{p.s_b}"] + [
                "" if v is None else f"{v:.4f}"
                for v in (p.snr_remix, p.snr_sep_add, p.delta)
            ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def sweep_gains(
    pair: StemPair,
    grid: tuple[float, ...] = DEFAULT_GAIN_GRID,
    alpha: float = DEFAULT_ALPHA,
    corrupt_rho: float = DEFAULT_CORRUPT_RHO,
    seed: int = 0,
    params: StftParams | None = None,
    smoothing: bool = True,
) -> SweepReport:
    """Compare gain-field remixing against separate-scale-add on a gain grid.

    Oracle masks are corrupted to emulate predictions, optionally smoothed,
    and both rendering routes are scored against the ideal remix
    (1+s_a)*stem_a + (1+s_b)*stem_b at every grid point.
    """
    if not grid:
        raise EmptyGrid("gain grid is empty")
    grid = tuple(sorted(float(g) for g in grid))
    if grid[0] < -1.0:
        raise InvalidParams(f"gain offsets cannot go below -1, got {grid[0]}")
    params = params or StftParams(sample_rate=pair.mixture.sample_rate)

    X, ibm = _oracle_masks(pair, params)
    masks = corrupt_mask_set(ibm, corrupt_rho, seed=seed)
    if smoothing:
        masks = MaskSet(
            masks=tuple(smooth_zlbm(m, alpha) for m in masks), params=params
        )
    n = len(pair.mixture)
    separations = [_separate(X, m, n).samples for m in masks]

    points = []
    for s_a in grid:
        for s_b in grid:
            ideal = AudioClip(
                samples=(1.0 + s_a) * pair.stem_a.samples + (1.0 + s_b) * pair.stem_b.samples,
                sample_rate=pair.mixture.sample_rate,
            )
            spec = RemixSpec(mask_set=masks, gains=(s_a, s_b))
            remixed_spec, _ = apply_gain_field(X, spec)
            remixed = istft(remixed_spec, target_length=n)
            sep_add = AudioClip(
                samples=(1.0 + s_a) * separations[0] + (1.0 + s_b) * separations[1],
                sample_rate=pair.mixture.sample_rate,
            )
            try:
                snr_r = snr_to_reference(remixed, ideal)
                snr_s = snr_to_reference(sep_add, ideal)
            except SilentReference:
                snr_r = snr_s = None
            points.append(SweepPoint(s_a=s_a, s_b=s_b, snr_remix=snr_r, snr_sep_add=snr_s))

    config = {
        "experiment": "sweep_gains",
        "grid": list(grid),
        "alpha": alpha,
        "corrupt_rho": corrupt_rho,
        "seed": seed,
        "smoothing": smoothing,
        "window_size": params.window_size,
        "hop": params.hop,
        "sample_rate": params.sample_rate,
    }
    return SweepReport(
        points=tuple(points), grid=grid, config=config, config_digest=config_hash(config)
    )
