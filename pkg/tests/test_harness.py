from __future__ import annotations

import json

import numpy as np
import pytest

from vamix.audio_io import AudioClip, write_wav
from vamix.errors import EmptyGrid, InvalidParams, SampleRateMismatch, TooShort
from vamix.harness import (
    StemPair,
    bounds_benchmark,
    config_hash,
    corrupt_mask_set,
    load_manifest,
    make_pair,
    pairs_from_manifest,
    sweep_gains,
    synthetic_pairs,
    synthetic_stem_pair,
    thread_count,
    tune_smoothing,
)
from vamix.masking import ideal_binary_masks
from vamix.spectral import StftParams, magnitude, stft

PARAMS = StftParams(window_size=64, hop=32, sample_rate=8000)


def small_pairs(n=2, segment_len=4096, seed=0):
    """Tiny synthetic pairs at the short test rate."""
    out = []
    for i in range(n):
        a, b = synthetic_stem_pair(seed=seed + i, duration_s=0.8, sample_rate=8000)
        out.append(make_pair(a, b, segment_len=segment_len, seed=seed + i))
    return out


class TestMakePair:
    def test_peaks_are_normalized(self, rng):
        a = AudioClip(rng.standard_normal(9000) * 3.0, 8000)
        b = AudioClip(rng.standard_normal(9000) * 0.01, 8000)
        pair = make_pair(a, b, segment_len=4096, seed=1)
        assert np.max(np.abs(pair.stem_a.samples)) == pytest.approx(0.45)
        assert np.max(np.abs(pair.stem_b.samples)) == pytest.approx(0.45)

    def test_mixture_is_the_sum(self, rng):
        a = AudioClip(rng.standard_normal(9000), 8000)
        b = AudioClip(rng.standard_normal(9000), 8000)
        pair = make_pair(a, b, segment_len=4096, seed=2)
        np.testing.assert_allclose(
            pair.mixture.samples, pair.stem_a.samples + pair.stem_b.samples
        )
        assert len(pair.mixture) == 4096

    def test_deterministic_offsets(self, rng):
        a = AudioClip(rng.standard_normal(9000), 8000)
        b = AudioClip(rng.standard_normal(9000), 8000)
        p1 = make_pair(a, b, segment_len=4096, seed=3)
        p2 = make_pair(a, b, segment_len=4096, seed=3)
        p3 = make_pair(a, b, segment_len=4096, seed=4)
        np.testing.assert_array_equal(p1.stem_a.samples, p2.stem_a.samples)
        assert not np.array_equal(p1.stem_a.samples, p3.stem_a.samples)

    def test_silent_segment_stays_silent(self, rng):
        a = AudioClip(np.zeros(9000), 8000)
        b = AudioClip(rng.standard_normal(9000), 8000)
        pair = make_pair(a, b, segment_len=4096, seed=5)
        assert np.all(pair.stem_a.samples == 0.0)

    def test_too_short_and_rate_mismatch(self, rng):
        a = AudioClip(rng.standard_normal(1000), 8000)
        b = AudioClip(rng.standard_normal(9000), 8000)
        with pytest.raises(TooShort):
            make_pair(a, b, segment_len=4096, seed=0)
        c = AudioClip(rng.standard_normal(9000), 44100)
        with pytest.raises(SampleRateMismatch):
            make_pair(c, b, segment_len=4096, seed=0)

    def test_stem_pair_validates_lengths(self, rng):
        a = AudioClip(rng.standard_normal(100), 8000)
        b = AudioClip(rng.standard_normal(101), 8000)
        with pytest.raises(InvalidParams):
            StemPair(stem_a=a, stem_b=b, mixture=a)


class TestSyntheticStems:
    def test_deterministic(self):
        a1, b1 = synthetic_stem_pair(seed=11, duration_s=0.5, sample_rate=8000)
        a2, b2 = synthetic_stem_pair(seed=11, duration_s=0.5, sample_rate=8000)
        np.testing.assert_array_equal(a1.samples, a2.samples)
        np.testing.assert_array_equal(b1.samples, b2.samples)

    def test_seeds_differ(self):
        a1, _ = synthetic_stem_pair(seed=11, duration_s=0.5, sample_rate=8000)
        a2, _ = synthetic_stem_pair(seed=12, duration_s=0.5, sample_rate=8000)
        assert not np.array_equal(a1.samples, a2.samples)

    def test_shape_and_peaks(self):
        harmonic, percussive = synthetic_stem_pair(
            seed=0, duration_s=0.5, sample_rate=8000
        )
        assert len(harmonic) == 4000
        assert harmonic.sample_rate == 8000
        for stem in (harmonic, percussive):
            peak = np.max(np.abs(stem.samples))
            assert 0.05 < peak <= 0.95

    def test_synthetic_pairs_builder(self):
        pairs = synthetic_pairs(n_pairs=2, segment_len=4096, seed=0)
        assert len(pairs) == 2
        assert all(len(p.mixture) == 4096 for p in pairs)
        assert pairs[0].labels == ("harmonic", "percussive")
        again = synthetic_pairs(n_pairs=2, segment_len=4096, seed=0)
        np.testing.assert_array_equal(
            pairs[1].mixture.samples, again[1].mixture.samples
        )


class TestCorruption:
    def masks_for(self, pair):
        X = stft(pair.mixture, PARAMS)
        mags = [magnitude(stft(s, PARAMS)) for s in pair.stems]
        return ideal_binary_masks(mags, labels=list(pair.labels)), X

    def test_flip_fraction_and_kind(self):
        (pairs,) = small_pairs(1)
        masks, _ = self.masks_for(pairs)
        bad = corrupt_mask_set(masks, rho=0.2, seed=0)
        for clean, dirty in zip(masks.masks, bad.masks):
            frac = np.mean(clean.data != dirty.data)
            assert frac == pytest.approx(0.2, abs=0.03)
            assert dirty.kind == "external"
            assert dirty.label == clean.label

    def test_partition_is_broken(self):
        (pairs,) = small_pairs(1)
        masks, _ = self.masks_for(pairs)
        bad = corrupt_mask_set(masks, rho=0.2, seed=1)
        total = sum(m.data for m in bad.masks)
        assert np.any(total > 1.5) and np.any(total < 0.5)

    def test_deterministic(self):
        (pairs,) = small_pairs(1)
        masks, _ = self.masks_for(pairs)
        b1 = corrupt_mask_set(masks, rho=0.1, seed=2)
        b2 = corrupt_mask_set(masks, rho=0.1, seed=2)
        b3 = corrupt_mask_set(masks, rho=0.1, seed=3)
        np.testing.assert_array_equal(b1.masks[0].data, b2.masks[0].data)
        assert not np.array_equal(b1.masks[0].data, b3.masks[0].data)

    def test_rho_zero_is_identity(self):
        (pairs,) = small_pairs(1)
        masks, _ = self.masks_for(pairs)
        bad = corrupt_mask_set(masks, rho=0.0, seed=0)
        np.testing.assert_array_equal(bad.masks[0].data, masks.masks[0].data)


class TestConfigHash:
    def test_stable_across_key_order(self):
        assert config_hash({"a": 1, "b": [2, 3]}) == config_hash({"b": [2, 3], "a": 1})

    def test_sensitive_to_values(self):
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_shape(self):
        digest = config_hash({"x": 0.5})
        assert len(digest) == 16
        int(digest, 16)  # hex


class TestManifest:
    def write_corpus(self, tmp_path, rng, n=3):
        entries = []
        for i in range(n):
            name = f"stem_{i}.wav"
            clip = AudioClip(rng.standard_normal(9000) * 0.3, 8000)
            write_wav(tmp_path / name, clip)
            entries.append({"file": name, "label": f"s{i}", "instrument": "synth"})
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"stems": entries}))
        return manifest

    def test_load_resolves_relative_paths(self, tmp_path, rng):
        manifest = self.write_corpus(tmp_path, rng)
        stems = load_manifest(manifest)
        assert len(stems) == 3
        assert stems[0].file.is_absolute()
        assert stems[0].file.exists()
        assert stems[1].label == "s1"

    def test_missing_keys_rejected(self, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"stems": [{"label": "x"}]}))
        with pytest.raises(InvalidParams):
            load_manifest(manifest)
        manifest.write_text(json.dumps({"clips": []}))
        with pytest.raises(InvalidParams):
            load_manifest(manifest)

    def test_pairs_from_manifest(self, tmp_path, rng):
        manifest = self.write_corpus(tmp_path, rng)
        pairs = pairs_from_manifest(manifest, n_pairs=2, segment_len=4096, seed=0)
        assert len(pairs) == 2
        for pair in pairs:
            assert pair.labels[0] != pair.labels[1]  # distinct stems drawn
            assert len(pair.mixture) == 4096

    def test_single_stem_cannot_pair(self, tmp_path, rng):
        manifest = self.write_corpus(tmp_path, rng, n=1)
        with pytest.raises(InvalidParams):
            pairs_from_manifest(manifest, n_pairs=1, segment_len=4096, seed=0)


class TestBoundsBenchmark:
    def test_oracle_beats_chance(self):
        pairs = small_pairs(2)
        report = bounds_benchmark(pairs, params=PARAMS, filter_len=8, seed=0)
        ibm = report.system_mean("ibm", "nsdr")
        rbm = report.system_mean("rbm", "nsdr")
        assert ibm > rbm + 5.0
        assert rbm < 0.0

    def test_report_serialization(self):
        pairs = small_pairs(1)
        report = bounds_benchmark(pairs, params=PARAMS, filter_len=8, seed=0)
        blob = json.loads(report.to_json())
        assert blob["config_digest"] == report.config_digest
        assert {r["system"] for r in blob["rows"]} == {"ibm", "rbm"}
        csv_text = report.to_csv()
        lines = csv_text.strip().split("\n")
        assert lines[0].startswith("metric,")
        assert len(lines) == 4  # header + nsdr/sir/sar

    def test_deterministic(self):
        pairs = small_pairs(1)
        r1 = bounds_benchmark(pairs, params=PARAMS, filter_len=8, seed=0)
        r2 = bounds_benchmark(pairs, params=PARAMS, filter_len=8, seed=0)
        assert r1.to_json() == r2.to_json()


class TestTuneSmoothing:
    def test_zero_width_row_scores_zero(self):
        pairs = small_pairs(1)
        result = tune_smoothing(
            pairs, method="zlbm", param_grid=[0.0, 0.6], corrupt_rho=0.1, seed=0,
            params=PARAMS,
        )
        by_param = dict(result.rows)
        assert by_param[0.0] == pytest.approx(0.0, abs=1e-9)

    def test_smoothing_helps_on_corrupted_masks(self):
        pairs = small_pairs(2)
        result = tune_smoothing(
            pairs, method="zlbm", param_grid=[0.0, 0.5, 0.75], corrupt_rho=0.1,
            seed=0, params=PARAMS,
        )
        assert result.best_gain > 0.0
        assert result.best_param in (0.5, 0.75)
        assert result.method == "zlbm"

    def test_empty_grid_rejected(self):
        pairs = small_pairs(1)
        with pytest.raises(EmptyGrid):
            tune_smoothing(pairs, method="zlbm", param_grid=[], seed=0, params=PARAMS)
        with pytest.raises(InvalidParams):
            tune_smoothing(pairs, method="median", seed=0, params=PARAMS)

    def test_serialization(self):
        pairs = small_pairs(1)
        result = tune_smoothing(
            pairs, method="zlbm", param_grid=[0.0, 0.5], corrupt_rho=0.1, seed=0,
            params=PARAMS,
        )
        blob = json.loads(result.to_json())
        assert blob["method"] == "zlbm"
        assert blob["best_param"] == result.best_param
        assert len(blob["rows"]) == 2
        csv_lines = result.to_csv().strip().split("\n")
        assert csv_lines[0] == "param,mean_gain_db"
        assert len(csv_lines) == 3

    def test_cepstral_grid_runs(self):
        pairs = small_pairs(1)
        result = tune_smoothing(
            pairs, method="cbm", param_grid=[4, 8], corrupt_rho=0.1, seed=0,
            params=PARAMS,
        )
        assert len(result.rows) == 2
        assert result.best_param in (4, 8)


class TestThreading:
    def test_thread_count_env(self, monkeypatch):
        monkeypatch.setenv("VAMIX_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("VAMIX_THREADS", "0")
        assert thread_count() >= 1
        monkeypatch.delenv("VAMIX_THREADS")
        assert thread_count() >= 1

    def test_results_independent_of_threads(self, monkeypatch):
        pairs = small_pairs(2)
        monkeypatch.setenv("VAMIX_THREADS", "1")
        serial = bounds_benchmark(pairs, params=PARAMS, filter_len=8, seed=0)
        monkeypatch.setenv("VAMIX_THREADS", "4")
        threaded = bounds_benchmark(pairs, params=PARAMS, filter_len=8, seed=0)
        assert serial.to_json() == threaded.to_json()


@pytest.fixture(scope="module")
def sweep_report():
    (pair,) = small_pairs(1)
    return sweep_gains(
        pair, grid=(-1.0, 0.0, 1.0), alpha=0.5, corrupt_rho=0.1, seed=0,
        params=PARAMS,
    )


class TestSweep:
    @pytest.fixture
    def report(self, sweep_report):
        return sweep_report

    def test_grid_coverage(self, report):
        assert len(report.points) == 9
        coords = {(p.s_a, p.s_b) for p in report.points}
        assert (-1.0, -1.0) in coords and (1.0, 1.0) in coords

    def test_both_muted_is_undefined(self, report):
        p = report.point(-1.0, -1.0)
        assert p.snr_remix is None and p.snr_sep_add is None and p.delta is None

    def test_neutral_point_strongly_favors_remix(self, report):
        p = report.point(0.0, 0.0)
        assert p.delta is not None and p.delta > 0.0

    def test_single_mute_stays_defined(self, report):
        # one source still playing -> both routes produce audio and a delta
        for coords in [(-1.0, 0.0), (0.0, -1.0)]:
            p = report.point(*coords)
            assert p.delta is not None
            assert p.snr_remix > 0.0 and p.snr_sep_add > 0.0

    def test_interior_vs_boundary(self, report):
        assert report.interior_mean() > report.boundary_mean()

    def test_csv_and_json(self, report):
        lines = report.to_csv().strip().split("\n")
        assert lines[0] == "s_a,s_b,snr_remix_db,snr_sep_add_db,delta_db"
        assert len(lines) == 10
        muted = [l for l in lines if l.startswith("-1.0,-1.0")]
        assert muted == ["-1.0,-1.0,,,"]
        blob = json.loads(report.to_json())
        assert len(blob["points"]) == 9
        assert blob["grid"] == [-1.0, 0.0, 1.0]

    def test_grid_below_mute_rejected(self):
        (pair,) = small_pairs(1)
        with pytest.raises(InvalidParams):
            sweep_gains(pair, grid=(-2.0, 0.0), seed=0, params=PARAMS)
