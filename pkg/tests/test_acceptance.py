"""End-to-end checks of the headline guarantees, at full working scale.

Every test here runs the canonical analysis grid (44.1 kHz, 1022-sample
window, 512 hop) on realistic segment lengths, asserts the documented
tolerance, and prints one line with the measured numbers.
"""
from __future__ import annotations

import json
import time
import warnings

import numpy as np
import pytest

from test_evaluation import oracle_metrics

from vamix.audio_io import AudioClip, read_wav, write_wav
from vamix.cli import main as cli_main
from vamix.evaluation import bss_eval
from vamix.harness import (
    bounds_benchmark,
    corrupt_mask_set,
    make_pair,
    sweep_gains,
    synthetic_pairs,
    synthetic_stem_pair,
    tune_smoothing,
)
from vamix.masking import (
    Mask,
    MaskSet,
    ideal_binary_masks,
    ideal_ratio_masks,
    random_binary_partition,
    smooth_cbm,
    smooth_mask_set,
    smooth_zlbm,
)
from vamix.remix import RemixSpec, remix, separate_and_add
from vamix.spectral import StftParams, istft, magnitude, stft

PARAMS = StftParams()  # 1022 window, 512 hop, 44.1 kHz
SEGMENT = 262144


def rel_err(got: np.ndarray, want: np.ndarray) -> float:
    return float(np.max(np.abs(got - want)) / np.max(np.abs(want)))


@pytest.fixture(scope="module")
def pair():
    a, b = synthetic_stem_pair(seed=101, duration_s=6.5)
    return make_pair(a, b, segment_len=SEGMENT, seed=101)


@pytest.fixture(scope="module")
def oracle(pair):
    X = stft(pair.mixture, PARAMS)
    mags = [magnitude(stft(s, PARAMS)) for s in pair.stems]
    return X, ideal_binary_masks(mags, labels=list(pair.labels))


def test_transform_round_trip_is_transparent():
    rng = np.random.default_rng(2024)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(100):
        clip = AudioClip(rng.standard_normal(SEGMENT) * 0.3, PARAMS.sample_rate)
        back = istft(stft(clip, PARAMS), target_length=len(clip))
        worst = max(worst, rel_err(back.samples, clip.samples))
    elapsed = time.perf_counter() - start
    assert worst < 1e-6
    assert elapsed < 30.0
    print(f"PASS round trip: worst relative error {worst:.3e} over 100 clips "
          f"in {elapsed:.1f}s")


def test_neutral_gains_leave_any_masked_mixture_untouched(pair, oracle):
    X, ibm = oracle
    rng = np.random.default_rng(7)
    frames = X.frames

    sets: list[MaskSet] = [ibm, ideal_ratio_masks(
        [magnitude(stft(s, PARAMS)) for s in pair.stems]
    )]
    for seed in range(5):
        sets.append(random_binary_partition(PARAMS, frames, 2, seed=seed))
    for alpha in (0.25, 0.5, 0.75):
        sets.append(smooth_mask_set(ibm, "zlbm", alpha=alpha))
    sets.append(smooth_mask_set(ibm, "cbm", lifter_cutoff=24))
    for seed in range(5):
        sets.append(corrupt_mask_set(ibm, rho=0.1, seed=seed))
    for seed in range(4):
        soft = rng.random((PARAMS.bins, frames))
        sets.append(MaskSet(
            masks=(Mask(soft, kind="external", label="a"),
                   Mask(1.0 - soft * rng.random((PARAMS.bins, frames)),
                        kind="external", label="b")),
            params=PARAMS,
        ))
    assert len(sets) == 20

    worst = 0.0
    for ms in sets:
        spec = RemixSpec(mask_set=ms, gains=(0.0,) * len(ms))
        out = remix(pair.mixture, spec, params=PARAMS)
        worst = max(worst, rel_err(out.samples, pair.mixture.samples))
    assert worst < 1e-6
    print(f"PASS neutral remix: worst relative error {worst:.3e} over "
          f"{len(sets)} mask sets")


def test_gain_field_matches_separate_scale_add_on_partitions(pair, oracle):
    _, ibm = oracle
    rng = np.random.default_rng(55)
    worst = 0.0
    for _ in range(100):
        gains = tuple(rng.uniform(-1.0, 1.0, size=2))
        spec = RemixSpec(mask_set=ibm, gains=gains)
        via_field = remix(pair.mixture, spec, params=PARAMS)
        via_stems = separate_and_add(pair.mixture, spec, params=PARAMS)
        denom = max(np.max(np.abs(via_stems.samples)), 1e-12)
        worst = max(worst, float(np.max(np.abs(
            via_field.samples - via_stems.samples)) / denom))
    assert worst < 1e-6
    print(f"PASS route equivalence: worst relative gap {worst:.3e} over "
          f"100 gain vectors")


def test_oracle_masks_beat_chance_by_a_wide_margin():
    pairs = synthetic_pairs(n_pairs=10, segment_len=SEGMENT, seed=40)
    start = time.perf_counter()
    report = bounds_benchmark(pairs, params=PARAMS, filter_len=512, seed=0)
    elapsed = time.perf_counter() - start
    ibm = report.system_mean("ibm", "nsdr")
    rbm = report.system_mean("rbm", "nsdr")
    assert ibm - rbm >= 10.0
    assert rbm < 0.0
    assert elapsed < 300.0
    print(f"PASS bounds: oracle NSDR {ibm:.2f} dB vs chance {rbm:.2f} dB "
          f"(gap {ibm - rbm:.2f}) in {elapsed:.1f}s")


def test_separation_scores_match_first_principles():
    rng = np.random.default_rng(90)

    # a calibrated case: orthogonal error exactly 20 dB down
    ref = rng.standard_normal(8000)
    noise = rng.standard_normal(8000)
    noise -= (np.dot(noise, ref) / np.dot(ref, ref)) * ref
    noise *= np.sqrt(0.01 * np.dot(ref, ref) / np.dot(noise, noise))
    calibrated = bss_eval(
        [AudioClip(ref + noise, 44100)], [AudioClip(ref, 44100)], filter_len=1
    ).sources[0].sdr
    assert calibrated == pytest.approx(20.0, abs=0.1)

    # a perfect estimate pegs the clamp
    exact = bss_eval(
        [AudioClip(ref.copy(), 44100)], [AudioClip(ref, 44100)], filter_len=8
    ).sources[0]
    assert exact.sdr == 100.0 and exact.sir == 100.0 and exact.sar == 100.0

    # the fast solver agrees with dense least squares from the definitions
    worst = 0.0
    for seed in range(4):
        r = np.random.default_rng(seed)
        refs = [r.standard_normal(900), r.standard_normal(900)]
        ests = [
            0.9 * refs[0] + 0.3 * np.roll(refs[1], 1) + 0.1 * r.standard_normal(900),
            1.1 * refs[1] + 0.2 * refs[0] + 0.05 * r.standard_normal(900),
        ]
        for L in (1, 4, 8):
            rep = bss_eval(
                [AudioClip(e, 44100) for e in ests],
                [AudioClip(x, 44100) for x in refs],
                filter_len=L,
            )
            for i, m in enumerate(rep.sources):
                sdr, sir, sar = oracle_metrics(ests[i], refs, i, L)
                worst = max(worst, abs(m.sdr - sdr), abs(m.sir - sir),
                            abs(m.sar - sar))
    assert worst < 0.05
    print(f"PASS scoring: calibrated case {calibrated:.3f} dB, oracle gap "
          f"{worst:.4f} dB max")


def test_smoothing_recovers_quality_on_corrupted_masks():
    pairs = synthetic_pairs(n_pairs=3, segment_len=SEGMENT, seed=77)
    zlbm = tune_smoothing(pairs, method="zlbm", seed=0, params=PARAMS)
    assert zlbm.best_gain > 0.0
    cbm = tune_smoothing(pairs, method="cbm", seed=0, params=PARAMS)
    if zlbm.best_gain < cbm.best_gain:
        warnings.warn(
            "cepstral smoothing outscored the recursive filter "
            f"({cbm.best_gain:.2f} vs {zlbm.best_gain:.2f} dB); the recursive "
            "filter is expected to lead on this corpus",
            stacklevel=1,
        )
    rows = ", ".join(f"{p:g}->{g:.2f}" for p, g in zlbm.rows)
    print(f"PASS smoothing: recursive best {zlbm.best_gain:.2f} dB at "
          f"alpha={zlbm.best_param:g} (rows {rows}); cepstral best "
          f"{cbm.best_gain:.2f} dB")


def test_gain_sweep_stays_sane_across_the_grid(pair):
    start = time.perf_counter()
    report = sweep_gains(pair, seed=0, params=PARAMS)
    elapsed = time.perf_counter() - start
    assert report.point(-1.0, -1.0).delta is None  # everything muted: undefined
    lo_a = report.point(-1.0, 0.0).delta
    lo_b = report.point(0.0, -1.0).delta
    assert lo_a is not None and lo_a >= -1.0
    assert lo_b is not None and lo_b >= -1.0
    neutral = report.point(0.0, 0.0).delta
    assert neutral is not None and neutral > 0.0
    interior, boundary = report.interior_mean(), report.boundary_mean()
    assert interior > boundary
    assert elapsed < 120.0
    print(f"PASS sweep: mute deltas {lo_a:+.2f}/{lo_b:+.2f} dB, neutral "
          f"{neutral:+.1f} dB, interior {interior:.2f} > boundary "
          f"{boundary:.2f}, {elapsed:.1f}s")


def test_command_line_outputs_are_reproducible(tmp_path):
    a, b = synthetic_stem_pair(seed=9, duration_s=1.0)
    write_wav(tmp_path / "harm.wav", a)
    write_wav(tmp_path / "perc.wav", b)
    write_wav(tmp_path / "mix.wav", AudioClip(a.samples + b.samples, a.sample_rate))
    stems = [str(tmp_path / "harm.wav"), str(tmp_path / "perc.wav")]

    digests = {}
    for tag in ("one", "two"):
        masks = tmp_path / f"masks_{tag}.tfmk"
        out = tmp_path / f"remix_{tag}.wav"
        tune = tmp_path / f"tune_{tag}.json"
        assert cli_main(["masks", "ibm", "--stems", *stems, "--out", str(masks)]) == 0
        assert cli_main([
            "remix", "--mix", str(tmp_path / "mix.wav"), "--masks", str(masks),
            "--gains=-0.5,0.25", "--out", str(out),
        ]) == 0
        assert cli_main([
            "tune", "--stems", *stems, "--grid", "0.25,0.75", "--out", str(tune),
        ]) == 0
        digests[tag] = (masks.read_bytes(), out.read_bytes(), tune.read_bytes())

    assert digests["one"] == digests["two"]
    identity = tmp_path / "identity.wav"
    assert cli_main([
        "remix", "--mix", str(tmp_path / "mix.wav"),
        "--masks", str(tmp_path / "masks_one.tfmk"),
        "--gains", "0,0", "--out", str(identity),
    ]) == 0
    err = rel_err(read_wav(identity).samples, read_wav(tmp_path / "mix.wav").samples)
    assert err < 1e-6
    print(f"PASS cli: repeat runs byte-identical; file round-trip identity "
          f"error {err:.3e}")
